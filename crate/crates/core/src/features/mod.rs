//! Per-task features and the main/aux pair feature vector.

mod curve_fit;
mod gradients;
mod stats;

use log::warn;

pub use curve_fit::{fit_log_curve, fit_log_curve_points, LogCurveFit};
pub use gradients::{curve_gradient, curve_gradients, CURVE_FRACTIONS};
pub use stats::{
    bag_of_words, entropy, frobenius, jsd, jsd_bags, label_entropy, oov_rate, tokens_per_type,
};

use crate::data::{Dataset, EmbeddingTable};
use crate::trainer::LossCurve;
use crate::{Error, Result};

/// Number of scalar features describing one task.
pub const TASK_FEATURES: usize = 14;
/// Length of a pair feature vector: main, aux and main/aux ratios.
pub const PAIR_FEATURES: usize = 3 * TASK_FEATURES;

/// Feature names in [`TaskFeatures::to_array`] order.
pub const FEATURE_NAMES: [&str; TASK_FEATURES] = [
    "size",
    "num_labels",
    "tokens_per_type",
    "oov_rate",
    "label_entropy",
    "frobenius",
    "jsd",
    "curve_grad_10",
    "curve_grad_20",
    "curve_grad_30",
    "curve_grad_50",
    "curve_grad_70",
    "curve_a",
    "curve_c",
];

/// Indices of the dataset-derived features.
pub const DATA_FEATURES: std::ops::Range<usize> = 0..7;
/// Indices of the loss-curve features.
pub const CURVE_FEATURES: std::ops::Range<usize> = 7..14;

#[derive(Debug, Clone, PartialEq)]
pub struct TaskFeatures {
    pub name: String,
    /// Train sentence count.
    pub size: f64,
    pub num_labels: f64,
    pub tokens_per_type: f64,
    /// Percent of train types without a pretrained vector.
    pub oov_rate: f64,
    pub label_entropy: f64,
    pub frobenius: f64,
    /// Train vs test bag-of-words divergence.
    pub jsd: f64,
    pub curve_grads: [f64; 5],
    pub curve_a: f64,
    pub curve_c: f64,
}

impl TaskFeatures {
    pub fn to_array(&self) -> [f64; TASK_FEATURES] {
        let g = &self.curve_grads;
        [
            self.size,
            self.num_labels,
            self.tokens_per_type,
            self.oov_rate,
            self.label_entropy,
            self.frobenius,
            self.jsd,
            g[0],
            g[1],
            g[2],
            g[3],
            g[4],
            self.curve_a,
            self.curve_c,
        ]
    }

    pub fn from_array(name: impl Into<String>, v: [f64; TASK_FEATURES]) -> Self {
        Self {
            name: name.into(),
            size: v[0],
            num_labels: v[1],
            tokens_per_type: v[2],
            oov_rate: v[3],
            label_entropy: v[4],
            frobenius: v[5],
            jsd: v[6],
            curve_grads: [v[7], v[8], v[9], v[10], v[11]],
            curve_a: v[12],
            curve_c: v[13],
        }
    }
}

/// Computes all 14 features of a task from its data, the pretrained
/// vocabulary and its single-task loss curve.
///
/// A log-curve fit that does not converge yields `curve_a = curve_c = 0`.
pub fn compute_task_features(
    dataset: &Dataset,
    embeddings: &EmbeddingTable,
    curve: &LossCurve,
) -> Result<TaskFeatures> {
    let name = &dataset.name;
    if dataset.test.is_empty() {
        return Err(Error::input(format!(
            "{name}: test split is empty, cannot compute train/test divergence"
        )));
    }
    let jsd = jsd_bags(&bag_of_words(&dataset.train), &bag_of_words(&dataset.test))?;
    let grads = curve_gradients(curve, &CURVE_FRACTIONS)
        .map_err(|e| Error::input(format!("{name}: {e}")))?;
    let fit = fit_log_curve(curve).map_err(|e| Error::input(format!("{name}: {e}")))?;
    let (curve_a, curve_c) = if fit.converged {
        (fit.a, fit.c)
    } else {
        warn!("{name}: log-curve fit did not converge, using a = c = 0");
        (0.0, 0.0)
    };
    Ok(TaskFeatures {
        name: name.clone(),
        size: dataset.train.len() as f64,
        num_labels: dataset.label_vocab.len() as f64,
        tokens_per_type: tokens_per_type(dataset),
        oov_rate: oov_rate(dataset, embeddings),
        label_entropy: label_entropy(dataset),
        frobenius: frobenius(dataset),
        jsd,
        curve_grads: [grads[0], grads[1], grads[2], grads[3], grads[4]],
        curve_a,
        curve_c,
    })
}

/// Features of a directed (main, aux) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairFeatureVector {
    pub main: String,
    pub aux: String,
    /// `[main | aux | main/aux]`, 14 each.
    pub values: Vec<f64>,
    /// Ratio indices (0..14) whose aux denominator was zero and were set to 0.
    pub guarded: Vec<usize>,
}

/// Below this magnitude an aux feature counts as zero for the ratio block.
pub const RATIO_GUARD: f64 = 1e-12;

pub fn assemble_pair(main: &TaskFeatures, aux: &TaskFeatures) -> PairFeatureVector {
    let m = main.to_array();
    let a = aux.to_array();
    let mut values = Vec::with_capacity(PAIR_FEATURES);
    values.extend_from_slice(&m);
    values.extend_from_slice(&a);
    let mut guarded = Vec::new();
    for k in 0..TASK_FEATURES {
        if a[k].abs() > RATIO_GUARD {
            values.push(m[k] / a[k]);
        } else {
            warn!(
                "{}/{}: aux feature {} is zero, ratio set to 0",
                main.name, aux.name, FEATURE_NAMES[k]
            );
            guarded.push(k);
            values.push(0.0);
        }
    }
    PairFeatureVector {
        main: main.name.clone(),
        aux: aux.name.clone(),
        values,
        guarded,
    }
}

/// Column names of a pair feature vector.
pub fn pair_feature_names() -> Vec<String> {
    ["main", "aux", "ratio"]
        .iter()
        .flat_map(|suffix| FEATURE_NAMES.iter().map(move |n| format!("{n}__{suffix}")))
        .collect()
}

/// All directed pairs over `tasks`, in row-major (main, aux) order.
pub fn all_pairs(tasks: &[TaskFeatures]) -> Vec<PairFeatureVector> {
    let mut out = Vec::with_capacity(tasks.len() * tasks.len().saturating_sub(1));
    for (i, m) in tasks.iter().enumerate() {
        for (j, a) in tasks.iter().enumerate() {
            if i != j {
                out.push(assemble_pair(m, a));
            }
        }
    }
    out
}

/// Task features of every task of a grid, from its single-task curves.
pub fn grid_task_features(
    datasets: &[Dataset],
    embeddings: &EmbeddingTable,
    grid: &crate::trainer::GridResult,
) -> Result<Vec<TaskFeatures>> {
    if datasets.len() != grid.singles.len() {
        return Err(Error::input(format!(
            "{} datasets for {} single-task runs",
            datasets.len(),
            grid.singles.len()
        )));
    }
    datasets
        .iter()
        .zip(&grid.singles)
        .map(|(ds, run)| compute_task_features(ds, embeddings, &run.curves[0]))
        .collect()
}

/// Writes per-task features as CSV with a leading `task` column.
pub fn write_task_features_csv<W: std::io::Write>(tasks: &[TaskFeatures], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["task".to_string()];
    header.extend(FEATURE_NAMES.iter().map(|s| s.to_string()));
    wr.write_record(&header)?;
    for t in tasks {
        let mut row = vec![t.name.clone()];
        row.extend(t.to_array().iter().map(|v| v.to_string()));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

/// Writes raw pair feature vectors as CSV (`main_task`, `aux_task`, 42 columns).
pub fn write_pair_features_csv<W: std::io::Write>(pairs: &[PairFeatureVector], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header = vec!["main_task".to_string(), "aux_task".to_string()];
    header.extend(pair_feature_names());
    wr.write_record(&header)?;
    for p in pairs {
        let mut row = vec![p.main.clone(), p.aux.clone()];
        row.extend(p.values.iter().map(|v| v.to_string()));
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}
