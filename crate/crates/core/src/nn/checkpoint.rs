//! Plain-text checkpoint format.
//!
//! ```text
//! mtl-oracle-checkpoint 1
//! vocab_size <V>
//! embedding_dim <E>
//! lstm_hidden <H>
//! heads <N>
//! head <task-name> <label-count>        (N lines, in head order)
//! tensor <name> <d0> [<d1> ...]         (one block per parameter)
//! <row values, space separated>         (row-major; one line per row)
//! ```
//!
//! Tensors appear in the order embeddings, lstm_fwd.weights, lstm_fwd.bias,
//! lstm_bwd.weights, lstm_bwd.bias, then projection and bias of each head.
//! One-dimensional tensors are written on a single line. Values use the
//! shortest representation that parses back to the same `f64`. Only
//! parameter values are stored; optimizer state is not.

use std::io::Write;

use super::lstm::LstmDirection;
use super::model::{BodyDims, SharedBody, Tagger, TaskHead};
use super::param::ParamTensor;
use crate::{Error, Result};

const MAGIC: &str = "mtl-oracle-checkpoint 1";

pub fn write_checkpoint<W: Write>(model: &Tagger, mut w: W) -> Result<()> {
    let dims = model.body.dims();
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "vocab_size {}", dims.vocab_size)?;
    writeln!(w, "embedding_dim {}", dims.embedding_dim)?;
    writeln!(w, "lstm_hidden {}", dims.lstm_hidden)?;
    writeln!(w, "heads {}", model.heads.len())?;
    for (name, head) in &model.heads {
        writeln!(w, "head {} {}", name, head.label_count())?;
    }
    let mut named: Vec<(String, &ParamTensor)> = [
        "embeddings",
        "lstm_fwd.weights",
        "lstm_fwd.bias",
        "lstm_bwd.weights",
        "lstm_bwd.bias",
    ]
    .into_iter()
    .map(String::from)
    .zip(model.body.params())
    .collect();
    for (i, (_, head)) in model.heads.iter().enumerate() {
        named.push((format!("head{i}.projection"), &head.projection));
        named.push((format!("head{i}.bias"), &head.bias));
    }
    for (name, p) in named {
        write!(w, "tensor {name}")?;
        for d in p.shape() {
            write!(w, " {d}")?;
        }
        writeln!(w)?;
        let cols = if p.shape().len() > 1 {
            *p.shape().last().unwrap()
        } else {
            p.len()
        };
        for row in p.values().chunks(cols.max(1)) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
            writeln!(w, "{}", line.join(" "))?;
        }
    }
    Ok(())
}

pub fn checkpoint_to_string(model: &Tagger) -> String {
    let mut buf = Vec::new();
    write_checkpoint(model, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("checkpoint is ASCII")
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l)
            }
            None => Err(Error::parse(self.line + 1, "unexpected end of checkpoint")),
        }
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.line, msg)
    }

    fn keyed_usize(&mut self, key: &str) -> Result<usize> {
        let l = self.next()?;
        let mut parts = l.split(' ');
        if parts.next() != Some(key) {
            return Err(self.err(format!("expected '{key}'")));
        }
        let v = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.err(format!("'{key}' needs an integer")))?;
        if parts.next().is_some() {
            return Err(self.err("trailing fields"));
        }
        Ok(v)
    }

    fn tensor(&mut self, name: &str, shape: &[usize]) -> Result<ParamTensor> {
        let l = self.next()?;
        let mut parts = l.split(' ');
        if parts.next() != Some("tensor") || parts.next() != Some(name) {
            return Err(self.err(format!("expected 'tensor {name}'")));
        }
        let dims: Vec<usize> = parts
            .map(|s| s.parse().map_err(|_| self.err("bad tensor dimension")))
            .collect::<Result<_>>()?;
        if dims != shape {
            return Err(self.err(format!(
                "tensor {name} has shape {dims:?}, expected {shape:?}"
            )));
        }
        let (rows, cols) = if shape.len() > 1 {
            (
                shape[..shape.len() - 1].iter().product(),
                shape[shape.len() - 1],
            )
        } else {
            (1, shape[0])
        };
        let mut values = Vec::new();
        for _ in 0..rows {
            let l = self.next()?;
            let before = values.len();
            for tok in l.split(' ') {
                let v: f64 = tok
                    .parse()
                    .map_err(|_| self.err(format!("bad value '{tok}'")))?;
                if !v.is_finite() {
                    return Err(self.err("non-finite value"));
                }
                values.push(v);
            }
            if values.len() - before != cols {
                return Err(self.err(format!(
                    "row has {} values, expected {cols}",
                    values.len() - before
                )));
            }
        }
        ParamTensor::from_values(name, shape, values)
    }
}

/// Parses a checkpoint produced by [`write_checkpoint`].
pub fn parse_checkpoint(text: &str) -> Result<Tagger> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        line: 0,
    };
    if lines.next()? != MAGIC {
        return Err(lines.err("not an mtl-oracle checkpoint"));
    }
    let dims = BodyDims {
        vocab_size: lines.keyed_usize("vocab_size")?,
        embedding_dim: lines.keyed_usize("embedding_dim")?,
        lstm_hidden: lines.keyed_usize("lstm_hidden")?,
    };
    if dims.vocab_size < 2 || dims.embedding_dim == 0 || dims.lstm_hidden == 0 {
        return Err(lines.err("dimensions must be positive and vocab_size at least 2"));
    }
    let gate_rows = dims
        .lstm_hidden
        .checked_mul(4)
        .ok_or_else(|| lines.err("lstm_hidden too large"))?;
    let gate_cols = dims
        .embedding_dim
        .checked_add(dims.lstm_hidden)
        .ok_or_else(|| lines.err("dimensions too large"))?;
    let hidden_dim = dims
        .lstm_hidden
        .checked_mul(2)
        .ok_or_else(|| lines.err("lstm_hidden too large"))?;

    let n_heads = lines.keyed_usize("heads")?;
    let mut head_specs = Vec::new();
    for _ in 0..n_heads {
        let l = lines.next()?;
        let parts: Vec<&str> = l.split(' ').collect();
        match parts.as_slice() {
            ["head", name, count] if !name.is_empty() => {
                let count: usize = count.parse().map_err(|_| lines.err("bad label count"))?;
                if count == 0 {
                    return Err(lines.err("head needs at least one label"));
                }
                head_specs.push((name.to_string(), count));
            }
            _ => return Err(lines.err("expected 'head <name> <labels>'")),
        }
    }

    let embeddings = lines.tensor("embeddings", &[dims.vocab_size, dims.embedding_dim])?;
    let fw = lines.tensor("lstm_fwd.weights", &[gate_rows, gate_cols])?;
    let fb = lines.tensor("lstm_fwd.bias", &[gate_rows])?;
    let bw = lines.tensor("lstm_bwd.weights", &[gate_rows, gate_cols])?;
    let bb = lines.tensor("lstm_bwd.bias", &[gate_rows])?;
    let body = SharedBody::from_parts(
        embeddings,
        LstmDirection::from_parts(dims.embedding_dim, dims.lstm_hidden, fw, fb),
        LstmDirection::from_parts(dims.embedding_dim, dims.lstm_hidden, bw, bb),
    );
    let mut heads = Vec::with_capacity(head_specs.len());
    for (i, (name, count)) in head_specs.into_iter().enumerate() {
        let prefix = format!("head{i}");
        let projection = lines.tensor(&format!("{prefix}.projection"), &[hidden_dim, count])?;
        let bias = lines.tensor(&format!("{prefix}.bias"), &[count])?;
        heads.push((name, TaskHead { projection, bias }));
    }
    for (i, l) in lines.inner.by_ref() {
        if !l.trim().is_empty() {
            return Err(Error::parse(i + 1, "trailing content after last tensor"));
        }
    }
    Ok(Tagger { body, heads })
}
