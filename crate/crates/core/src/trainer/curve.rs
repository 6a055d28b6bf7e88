use std::io::Write;

use crate::{Error, Result};

/// Smoothed training loss sampled during one run.
///
/// Each sample is `(batch_index, loss)` where `batch_index` counts completed
/// batches and `loss` is the mean batch loss since the previous sample.
#[derive(Debug, Clone, PartialEq)]
pub struct LossCurve {
    samples: Vec<(usize, f64)>,
    total_batches: usize,
}

impl LossCurve {
    pub fn new(total_batches: usize) -> Self {
        Self {
            samples: Vec::new(),
            total_batches,
        }
    }

    pub fn from_samples(samples: Vec<(usize, f64)>, total_batches: usize) -> Result<Self> {
        let mut c = Self::new(total_batches);
        for (i, l) in samples {
            c.push(i, l)?;
        }
        Ok(c)
    }

    /// Appends a sample; indices must increase strictly, stay within the
    /// budget, and losses must be finite and non-negative.
    pub fn push(&mut self, batch_index: usize, loss: f64) -> Result<()> {
        if let Some(&(last, _)) = self.samples.last() {
            if batch_index <= last {
                return Err(Error::input(format!(
                    "curve index {batch_index} does not follow {last}"
                )));
            }
        }
        if batch_index > self.total_batches {
            return Err(Error::input(format!(
                "curve index {batch_index} beyond {} batches",
                self.total_batches
            )));
        }
        if !loss.is_finite() || loss < 0.0 {
            return Err(Error::Numeric(format!(
                "invalid loss {loss} at batch {batch_index}"
            )));
        }
        self.samples.push((batch_index, loss));
        Ok(())
    }

    pub fn samples(&self) -> &[(usize, f64)] {
        &self.samples
    }

    pub fn total_batches(&self) -> usize {
        self.total_batches
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// `batch_index,loss` CSV with a header row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "batch_index,loss")?;
        for (i, l) in &self.samples {
            writeln!(w, "{i},{l}")?;
        }
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("ASCII")
    }

    /// Reads a curve written by [`write_csv`](Self::write_csv). The run's
    /// batch budget is not stored in the file and must be supplied.
    pub fn parse_csv(text: &str, total_batches: usize) -> Result<Self> {
        let mut curve = Self::new(total_batches);
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim_end_matches('\r') == "batch_index,loss" => {}
            _ => return Err(Error::parse(1, "expected header 'batch_index,loss'")),
        }
        for (i, raw) in lines {
            let line = raw.trim_end_matches('\r');
            if line.is_empty() {
                continue;
            }
            let (idx, loss) = line
                .split_once(',')
                .ok_or_else(|| Error::parse(i + 1, "expected 'batch_index,loss'"))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| Error::parse(i + 1, "bad batch index"))?;
            let loss: f64 = loss.parse().map_err(|_| Error::parse(i + 1, "bad loss"))?;
            curve
                .push(idx, loss)
                .map_err(|e| Error::parse(i + 1, e.to_string()))?;
        }
        Ok(curve)
    }
}
