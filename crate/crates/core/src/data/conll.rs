//! `token<TAB>label` files, blank line between sentences.

use std::io::Write;
use std::path::Path;

use super::Sentence;
use crate::{Error, Result};

/// Parses CoNLL-style text into sentences.
///
/// Each non-blank line must hold exactly two tab-separated fields, both
/// non-empty. A trailing `\r` is ignored. Text without any token line is an
/// input error.
pub fn parse_conll(text: &str) -> Result<Vec<Sentence>> {
    let mut sentences = Vec::new();
    let mut current = Sentence::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            if !current.is_empty() {
                sentences.push(std::mem::take(&mut current));
            }
            continue;
        }
        let mut fields = line.split('\t');
        match (fields.next(), fields.next(), fields.next()) {
            (Some(tok), Some(label), None) if !tok.is_empty() && !label.is_empty() => {
                current.tokens.push(tok.to_string());
                current.labels.push(label.to_string());
            }
            _ => {
                let n = line.split('\t').count();
                return Err(Error::parse(
                    i + 1,
                    format!("expected 'token<TAB>label', found {n} field(s)"),
                ));
            }
        }
    }
    if !current.is_empty() {
        sentences.push(current);
    }
    if sentences.is_empty() {
        return Err(Error::input("no sentences in CoNLL input"));
    }
    Ok(sentences)
}

pub fn read_conll(path: impl AsRef<Path>) -> Result<Vec<Sentence>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
    parse_conll(&text).map_err(|e| e.in_file(path))
}

pub fn write_conll<W: Write>(sentences: &[Sentence], mut w: W) -> Result<()> {
    for (i, s) in sentences.iter().enumerate() {
        if i > 0 {
            writeln!(w)?;
        }
        for (t, l) in s.tokens.iter().zip(&s.labels) {
            writeln!(w, "{t}\t{l}")?;
        }
    }
    Ok(())
}
