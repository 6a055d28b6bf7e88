use log::{info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::logreg::{train_logreg, LogRegConfig};
use super::{FeatureMask, MetaDataset, Normalizer};
use crate::seed::derive_seed;
use crate::trainer::micro_f1;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvOptions {
    pub folds: usize,
    pub runs: usize,
    /// Run `r` shuffles with `derive_seed(seed, r)`.
    pub seed: u64,
    pub logreg: LogRegConfig,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            folds: 5,
            runs: 100,
            seed: 0,
            logreg: LogRegConfig::default(),
        }
    }
}

/// Held-out scores of one cross-validation run, pooled over its folds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunScore {
    pub accuracy: f64,
    pub f1_positive: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvReport {
    pub features: Vec<String>,
    pub folds: usize,
    pub per_run: Vec<RunScore>,
    pub mean_accuracy: f64,
    pub mean_f1_positive: f64,
    /// Training folds that contained a single class.
    pub degenerate_folds: usize,
    pub majority_accuracy: f64,
    pub majority_f1_positive: f64,
}

impl CvReport {
    pub fn runs(&self) -> usize {
        self.per_run.len()
    }
}

/// Majority-class accuracy and the positive-class F1 of the constant
/// all-positive predictor, `2p / (p + 1)` for positive rate `p`.
pub fn majority_baseline(y: &[bool]) -> Result<(f64, f64)> {
    if y.is_empty() {
        return Err(Error::input("majority baseline needs at least one label"));
    }
    let n = y.len() as f64;
    let p = y.iter().filter(|&&v| v).count() as f64 / n;
    Ok((p.max(1.0 - p), 2.0 * p / (p + 1.0)))
}

fn fold_bounds(n: usize, folds: usize) -> Vec<(usize, usize)> {
    let (base, extra) = (n / folds, n % folds);
    let mut start = 0;
    (0..folds)
        .map(|f| {
            let len = base + usize::from(f < extra);
            let b = (start, start + len);
            start += len;
            b
        })
        .collect()
}

fn select(row: &[f64], cols: &[usize]) -> Vec<f64> {
    cols.iter().map(|&c| row[c]).collect()
}

/// Held-out prediction for every row, the fold assignment, and the number
/// of single-class training folds.
fn run_predictions(
    meta: &MetaDataset,
    cols: &[usize],
    opts: &CvOptions,
    run: usize,
) -> Result<(Vec<bool>, Vec<usize>, usize)> {
    let n = meta.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(derive_seed(
        opts.seed, run as u64,
    )));
    let rows: Vec<Vec<f64>> = meta
        .records
        .iter()
        .map(|r| select(&r.features, cols))
        .collect();
    let labels = meta.labels();
    let mut predicted = vec![false; n];
    let mut fold_of = vec![0; n];
    let mut degenerate = 0;
    for (f, (lo, hi)) in fold_bounds(n, opts.folds).into_iter().enumerate() {
        let test = &order[lo..hi];
        let train: Vec<usize> = order[..lo].iter().chain(&order[hi..]).copied().collect();
        // statistics come from the training folds only
        let norm = Normalizer::fit(train.iter().map(|&i| rows[i].as_slice()), cols.len());
        let x: Vec<Vec<f64>> = train.iter().map(|&i| norm.transform(&rows[i])).collect();
        let y: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
        if y.iter().all(|&v| v == y[0]) {
            degenerate += 1;
        }
        let model = train_logreg(&x, &y, &opts.logreg)?;
        for &i in test {
            predicted[i] = model.predict(&norm.transform(&rows[i]));
            fold_of[i] = f;
        }
    }
    Ok((predicted, fold_of, degenerate))
}

fn one_run(
    meta: &MetaDataset,
    cols: &[usize],
    opts: &CvOptions,
    run: usize,
) -> Result<(RunScore, usize)> {
    let (predicted, _, degenerate) = run_predictions(meta, cols, opts, run)?;
    let labels = meta.labels();
    let n = meta.len();
    let correct = predicted
        .iter()
        .zip(&labels)
        .filter(|(p, g)| p == g)
        .count();
    let score = RunScore {
        accuracy: correct as f64 / n as f64,
        f1_positive: micro_f1(&predicted, &labels, Some(&false))?,
    };
    Ok((score, degenerate))
}

fn cv_columns(meta: &MetaDataset, cols: &[usize], opts: &CvOptions) -> Result<CvReport> {
    if opts.folds < 2 || opts.runs == 0 {
        return Err(Error::input(
            "cross-validation needs at least 2 folds and 1 run",
        ));
    }
    if meta.len() < opts.folds {
        return Err(Error::input(format!(
            "{} records cannot be split into {} folds",
            meta.len(),
            opts.folds
        )));
    }
    let results = (0..opts.runs)
        .into_par_iter()
        .map(|r| one_run(meta, cols, opts, r))
        .collect::<Result<Vec<_>>>()?;
    let per_run: Vec<RunScore> = results.iter().map(|r| r.0).collect();
    let degenerate_folds = results.iter().map(|r| r.1).sum();
    if degenerate_folds > 0 {
        warn!("{degenerate_folds} training folds held a single class");
    }
    let runs = per_run.len() as f64;
    let (majority_accuracy, majority_f1_positive) = majority_baseline(&meta.labels())?;
    Ok(CvReport {
        features: cols
            .iter()
            .map(|&c| meta.feature_names[c].clone())
            .collect(),
        folds: opts.folds,
        mean_accuracy: per_run.iter().map(|s| s.accuracy).sum::<f64>() / runs,
        mean_f1_positive: per_run.iter().map(|s| s.f1_positive).sum::<f64>() / runs,
        per_run,
        degenerate_folds,
        majority_accuracy,
        majority_f1_positive,
    })
}

/// Repeated shuffled k-fold cross-validation of the logistic meta-learner
/// on the masked feature columns.
///
/// Each run scores accuracy and positive-class F1 over the pooled held-out
/// predictions of its folds; the report averages these over runs.
pub fn cross_validate(
    meta: &MetaDataset,
    mask: &FeatureMask,
    opts: &CvOptions,
) -> Result<CvReport> {
    let cols = mask.resolve(&meta.feature_names)?;
    cv_columns(meta, &cols, opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsetSearch {
    /// Selected columns in the order they were added.
    pub selected: Vec<String>,
    /// Mean CV accuracy after each addition.
    pub path: Vec<f64>,
    pub report: CvReport,
    /// The same CV protocol on all columns, for comparison.
    pub all_features: CvReport,
}

/// Greedy forward selection by mean CV accuracy.
///
/// Every candidate is scored with the same seed schedule. The search stops
/// when no addition strictly improves the score or `max_size` is reached;
/// ties go to the earlier column.
pub fn feature_subset_search(
    meta: &MetaDataset,
    opts: &CvOptions,
    max_size: usize,
) -> Result<SubsetSearch> {
    let width = meta.feature_names.len();
    let all: Vec<usize> = (0..width).collect();
    let all_features = cv_columns(meta, &all, opts)?;
    let mut chosen: Vec<usize> = Vec::new();
    let mut path = Vec::new();
    let mut best: Option<CvReport> = None;
    while chosen.len() < max_size.min(width) {
        let mut step: Option<(usize, CvReport)> = None;
        for c in (0..width).filter(|c| !chosen.contains(c)) {
            let mut cols = chosen.clone();
            cols.push(c);
            cols.sort_unstable();
            let report = cv_columns(meta, &cols, opts)?;
            if step
                .as_ref()
                .is_none_or(|(_, r)| report.mean_accuracy > r.mean_accuracy)
            {
                step = Some((c, report));
            }
        }
        let Some((c, report)) = step else { break };
        if best
            .as_ref()
            .is_some_and(|b| report.mean_accuracy <= b.mean_accuracy)
        {
            break;
        }
        info!(
            "subset search: + {} -> accuracy {:.4}",
            meta.feature_names[c], report.mean_accuracy
        );
        chosen.push(c);
        path.push(report.mean_accuracy);
        best = Some(report);
    }
    let report = best.ok_or_else(|| Error::input("subset search needs at least one feature"))?;
    Ok(SubsetSearch {
        selected: chosen
            .iter()
            .map(|&c| meta.feature_names[c].clone())
            .collect(),
        path,
        report,
        all_features,
    })
}

#[cfg(test)]
pub(super) fn held_out_predictions(
    meta: &MetaDataset,
    opts: &CvOptions,
    run: usize,
) -> (Vec<bool>, Vec<usize>) {
    let cols: Vec<usize> = (0..meta.feature_names.len()).collect();
    let (p, f, _) = run_predictions(meta, &cols, opts, run).unwrap();
    (p, f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn majority_examples() {
        let mut y = vec![false; 50];
        y.extend(vec![true; 40]);
        let (acc, f1) = majority_baseline(&y).unwrap();
        assert!((acc - 50.0 / 90.0).abs() < 1e-12);
        assert!((f1 - 80.0 / 130.0).abs() < 1e-12);
        assert_eq!(majority_baseline(&[true, true]).unwrap(), (1.0, 1.0));
        let (acc, f1) = majority_baseline(&[false, false, false, true]).unwrap();
        assert_eq!(acc, 0.75);
        assert!((f1 - 0.4).abs() < 1e-12);
        assert!(majority_baseline(&[]).is_err());
    }

    #[test]
    fn folds_partition_rows() {
        let b = fold_bounds(17, 5);
        assert_eq!(b, vec![(0, 4), (4, 8), (8, 11), (11, 14), (14, 17)]);
        assert_eq!(
            fold_bounds(10, 5).iter().map(|(l, h)| h - l).sum::<usize>(),
            10
        );
    }
}
