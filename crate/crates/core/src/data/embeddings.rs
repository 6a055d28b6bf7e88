use std::collections::HashMap;
use std::path::Path;

use super::vocab::normalize_token;
use crate::{Error, Result};

/// Pretrained word vectors in the GloVe text layout (`word v1 … vd`).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn empty(dim: usize) -> Self {
        Self {
            dim,
            vectors: HashMap::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Lookup after token normalization.
    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(&normalize_token(word)).map(Vec::as_slice)
    }

    pub fn contains(&self, word: &str) -> bool {
        self.get(word).is_some()
    }

    /// Fraction of `words` that have a vector; 0 for an empty word list.
    pub fn coverage<'a, I>(&self, words: I) -> f64
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut total = 0usize;
        let mut found = 0usize;
        for w in words {
            total += 1;
            if self.contains(w) {
                found += 1;
            }
        }
        if total == 0 {
            0.0
        } else {
            found as f64 / total as f64
        }
    }
}

/// Parses the embedding text format. Blank lines are skipped; the first
/// occurrence of a word wins. A line with the wrong number of values or an
/// unparseable value is a parse error carrying its line number.
pub fn parse_embeddings(text: &str, dim: usize) -> Result<EmbeddingTable> {
    if dim == 0 {
        return Err(Error::input("embedding dimension must be positive"));
    }
    let mut table = EmbeddingTable::empty(dim);
    for (i, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let word = parts.next().expect("non-blank line has a first field");
        let mut vector = Vec::with_capacity(dim);
        for tok in parts {
            if vector.len() == dim {
                return Err(Error::parse(
                    i + 1,
                    format!("more than {dim} values for '{word}'"),
                ));
            }
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(i + 1, format!("bad value '{tok}'")))?;
            if !v.is_finite() {
                return Err(Error::parse(i + 1, "non-finite value"));
            }
            vector.push(v);
        }
        if vector.len() != dim {
            return Err(Error::parse(
                i + 1,
                format!("'{word}' has {} values, expected {dim}", vector.len()),
            ));
        }
        table.vectors.entry(normalize_token(word)).or_insert(vector);
    }
    Ok(table)
}

pub fn load_embeddings(path: impl AsRef<Path>, dim: usize) -> Result<EmbeddingTable> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
    parse_embeddings(&text, dim).map_err(|e| e.in_file(path))
}
