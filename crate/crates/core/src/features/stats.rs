use std::collections::BTreeMap;

use crate::data::{normalize_token, Dataset, EmbeddingTable, Sentence};
use crate::{Error, Result};

/// Shannon entropy (nats) of a count vector; zero counts contribute nothing.
pub fn entropy(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum();
    h.max(0.0)
}

/// Entropy of the token-level label distribution of the train split.
pub fn label_entropy(dataset: &Dataset) -> f64 {
    let mut counts = vec![0usize; dataset.label_vocab.len()];
    for s in &dataset.train {
        for l in &s.labels {
            counts[dataset
                .label_vocab
                .get(l)
                .expect("label vocabulary covers train")] += 1;
        }
    }
    entropy(&counts)
}

/// Frobenius norm of the sentence × term count matrix of the train split.
pub fn frobenius(dataset: &Dataset) -> f64 {
    let mut sum_sq: u128 = 0;
    for s in &dataset.train {
        for &c in bag_of_words(std::slice::from_ref(s)).values() {
            sum_sq += (c as u128) * (c as u128);
        }
    }
    (sum_sq as f64).sqrt()
}

/// Normalized-token frequencies.
pub fn bag_of_words(sentences: &[Sentence]) -> BTreeMap<String, usize> {
    let mut bag = BTreeMap::new();
    for s in sentences {
        for t in &s.tokens {
            *bag.entry(normalize_token(t)).or_insert(0) += 1;
        }
    }
    bag
}

fn kl_to_mixture(p: &[f64], m: &[f64]) -> f64 {
    p.iter()
        .zip(m)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &mi)| pi * (pi / mi).ln())
        .sum()
}

/// Jensen–Shannon divergence (nats) between two distributions over the same
/// support. Inputs are renormalized; the result is clamped to `[0, ln 2]`
/// against rounding.
pub fn jsd(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::input("distributions differ in length"));
    }
    let norm = |v: &[f64]| -> Result<Vec<f64>> {
        if v.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::input(
                "distribution entries must be finite and non-negative",
            ));
        }
        let s: f64 = v.iter().sum();
        if s <= 0.0 {
            return Err(Error::input("empty distribution"));
        }
        Ok(v.iter().map(|x| x / s).collect())
    };
    let p = norm(p)?;
    let q = norm(q)?;
    let m: Vec<f64> = p.iter().zip(&q).map(|(a, b)| 0.5 * (a + b)).collect();
    let d = 0.5 * kl_to_mixture(&p, &m) + 0.5 * kl_to_mixture(&q, &m);
    Ok(d.clamp(0.0, std::f64::consts::LN_2))
}

/// JSD between two bags of words over the union of their vocabularies.
pub fn jsd_bags(a: &BTreeMap<String, usize>, b: &BTreeMap<String, usize>) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::input("JSD needs two non-empty bags of words"));
    }
    let mut keys: Vec<&String> = a.keys().chain(b.keys()).collect();
    keys.sort();
    keys.dedup();
    let p: Vec<f64> = keys
        .iter()
        .map(|k| a.get(*k).copied().unwrap_or(0) as f64)
        .collect();
    let q: Vec<f64> = keys
        .iter()
        .map(|k| b.get(*k).copied().unwrap_or(0) as f64)
        .collect();
    jsd(&p, &q)
}

/// Percentage of train word types with no pretrained vector.
pub fn oov_rate(dataset: &Dataset, embeddings: &EmbeddingTable) -> f64 {
    let types: Vec<&str> = dataset.token_vocab.entries().collect();
    if types.is_empty() {
        return 0.0;
    }
    let missing = types.iter().filter(|w| !embeddings.contains(w)).count();
    100.0 * missing as f64 / types.len() as f64
}

/// Train tokens per distinct train type.
pub fn tokens_per_type(dataset: &Dataset) -> f64 {
    let types = dataset.token_vocab.entries().count();
    if types == 0 {
        return 0.0;
    }
    dataset.train_tokens() as f64 / types as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{parse_conll, parse_embeddings};

    fn ds(text: &str) -> Dataset {
        Dataset::new("t", parse_conll(text).unwrap(), vec![], vec![]).unwrap()
    }

    #[test]
    fn entropy_cases() {
        assert_eq!(label_entropy(&ds("a\tX\nb\tX\n")), 0.0);
        assert!((label_entropy(&ds("a\tX\nb\tY\n")) - std::f64::consts::LN_2).abs() < 1e-15);
        let h = label_entropy(&ds("a\tA\nb\tA\nc\tA\nd\tB\n"));
        let want = -(0.75f64 * 0.75f64.ln() + 0.25 * 0.25f64.ln());
        assert!((h - want).abs() < 1e-15);
        assert!((h - 0.5623).abs() < 1e-4);
    }

    #[test]
    fn frobenius_cases() {
        assert_eq!(frobenius(&ds("a\tX\n")), 1.0);
        // rows [a:1, b:2] and [a:2]
        assert_eq!(frobenius(&ds("a\tX\nb\tX\nb\tX\n\na\tX\nA\tX\n")), 3.0);
    }

    #[test]
    fn jsd_cases() {
        assert!(jsd(&[0.2, 0.8], &[0.2, 0.8]).unwrap().abs() < 1e-12);
        assert!((jsd(&[1.0, 0.0], &[0.0, 1.0]).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
        let m = [0.7, 0.3];
        let kl = |p: [f64; 2]| p[0] * (p[0] / m[0]).ln() + p[1] * (p[1] / m[1]).ln();
        let want = 0.5 * kl([0.5, 0.5]) + 0.5 * kl([0.9, 0.1]);
        let got = jsd(&[0.5, 0.5], &[0.9, 0.1]).unwrap();
        assert!((got - want).abs() < 1e-15);
        assert!((got - 0.1017).abs() < 1e-4);
        assert!(jsd(&[], &[]).is_err());
        assert!(jsd(&[0.0], &[1.0]).is_err());
    }

    #[test]
    fn jsd_bags_union_support() {
        let a = bag_of_words(&parse_conll("x\tO\ny\tO\n").unwrap());
        let b = bag_of_words(&parse_conll("z\tO\n").unwrap());
        assert!((jsd_bags(&a, &b).unwrap() - std::f64::consts::LN_2).abs() < 1e-12);
        assert!(jsd_bags(&a, &BTreeMap::new()).is_err());
    }

    #[test]
    fn oov_cases() {
        let d = ds("a\tX\nb\tX\nc\tX\nd\tX\n");
        let full = parse_embeddings("a 1\nb 1\nc 1\nd 1\n", 1).unwrap();
        assert_eq!(oov_rate(&d, &full), 0.0);
        assert_eq!(oov_rate(&d, &EmbeddingTable::empty(1)), 100.0);
        let three = parse_embeddings("a 1\nb 1\nc 1\n", 1).unwrap();
        assert_eq!(oov_rate(&d, &three), 25.0);
    }

    #[test]
    fn tokens_per_type_cases() {
        assert_eq!(tokens_per_type(&ds("a\tX\na\tX\na\tX\na\tX\n")), 4.0);
        assert_eq!(tokens_per_type(&ds("a\tX\nb\tX\n")), 1.0);
        assert_eq!(
            tokens_per_type(&ds("a\tX\na\tX\nb\tX\nc\tX\nc\tX\nc\tX\n")),
            2.0
        );
    }
}
