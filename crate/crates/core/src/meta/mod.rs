//! Meta-dataset of directed task pairs and the logistic-regression predictor
//! of multi-task gain.

mod cv;
mod logreg;
mod report;

use std::collections::BTreeMap;
use std::io::Write;

pub use cv::{
    cross_validate, feature_subset_search, majority_baseline, CvOptions, CvReport, RunScore,
    SubsetSearch,
};
pub use logreg::{logreg_objective, train_logreg, train_logreg_from, LogRegConfig, LogRegModel};
pub use report::{
    coefficient_report, coefficients_text, cv_report_text, write_coefficients_csv,
    write_cv_report_csv, Block, CoefficientRow,
};

use crate::features::{
    pair_feature_names, PairFeatureVector, CURVE_FEATURES, DATA_FEATURES, FEATURE_NAMES,
};
use crate::trainer::GainMatrix;
use crate::{Error, Result};

/// One directed (main, aux) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairRecord {
    pub main: String,
    pub aux: String,
    pub features: Vec<f64>,
    /// Relative gain of the main task in percent.
    pub gain: f64,
    /// `gain > 0`.
    pub label: bool,
}

/// Per-column min-max scaling to `[0, 1]`.
///
/// Constant columns map to 0 and values outside the fitted range are
/// clamped, so rows not seen during fitting stay in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalizer {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Normalizer {
    pub fn fit<'a, I>(rows: I, width: usize) -> Self
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let mut min = vec![f64::INFINITY; width];
        let mut max = vec![f64::NEG_INFINITY; width];
        for row in rows {
            for (k, &v) in row.iter().enumerate().take(width) {
                min[k] = min[k].min(v);
                max[k] = max[k].max(v);
            }
        }
        Self { min, max }
    }

    pub fn transform(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&v, (&lo, &hi))| {
                if hi > lo {
                    let (v, lo, hi) = if (hi - lo).is_finite() {
                        (v, lo, hi)
                    } else {
                        // halving is exact and keeps the range finite
                        (v / 2.0, lo / 2.0, hi / 2.0)
                    };
                    ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
                } else {
                    0.0
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetaDataset {
    pub feature_names: Vec<String>,
    pub records: Vec<PairRecord>,
    /// Fitted on all records.
    pub normalization: Normalizer,
}

impl MetaDataset {
    pub fn new(feature_names: Vec<String>, records: Vec<PairRecord>) -> Result<Self> {
        if feature_names.is_empty() {
            return Err(Error::input("meta-dataset needs at least one feature"));
        }
        let width = feature_names.len();
        for r in &records {
            if r.features.len() != width {
                return Err(Error::input(format!(
                    "{}/{}: {} feature values for {} columns",
                    r.main,
                    r.aux,
                    r.features.len(),
                    width
                )));
            }
            if r.features.iter().any(|v| !v.is_finite()) || !r.gain.is_finite() {
                return Err(Error::input(format!(
                    "{}/{}: non-finite value",
                    r.main, r.aux
                )));
            }
        }
        let normalization = Normalizer::fit(records.iter().map(|r| r.features.as_slice()), width);
        Ok(Self {
            feature_names,
            records,
            normalization,
        })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labels(&self) -> Vec<bool> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn normalized(&self) -> Vec<Vec<f64>> {
        self.records
            .iter()
            .map(|r| self.normalization.transform(&r.features))
            .collect()
    }

    /// The dataset restricted to columns `cols`, renormalized.
    pub fn project(&self, cols: &[usize]) -> Result<Self> {
        if let Some(&c) = cols.iter().find(|&&c| c >= self.feature_names.len()) {
            return Err(Error::input(format!("column {c} out of range")));
        }
        let names = cols
            .iter()
            .map(|&c| self.feature_names[c].clone())
            .collect();
        let records = self
            .records
            .iter()
            .map(|r| PairRecord {
                features: cols.iter().map(|&c| r.features[c]).collect(),
                ..r.clone()
            })
            .collect();
        Self::new(names, records)
    }

    pub fn positives(&self) -> usize {
        self.records.iter().filter(|r| r.label).count()
    }

    /// Writes `main_task, aux_task, <features>, gain_pct, label`, with the
    /// features min-max normalized over this dataset.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["main_task".to_string(), "aux_task".to_string()];
        header.extend(self.feature_names.iter().cloned());
        header.extend(["gain_pct".to_string(), "label".to_string()]);
        wr.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![r.main.clone(), r.aux.clone()];
            row.extend(
                self.normalization
                    .transform(&r.features)
                    .iter()
                    .map(|v| v.to_string()),
            );
            row.push(r.gain.to_string());
            row.push(u8::from(r.label).to_string());
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv output is UTF-8")
    }

    /// Parses a meta CSV. Feature columns are whatever lies between
    /// `aux_task` and `gain_pct`; `label` must agree with `gain_pct > 0`.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_reader(text.as_bytes());
        let header: Vec<String> = rd.headers()?.iter().map(str::to_string).collect();
        let n = header.len();
        if n < 5
            || header[0] != "main_task"
            || header[1] != "aux_task"
            || header[n - 2] != "gain_pct"
            || header[n - 1] != "label"
        {
            return Err(Error::parse(
                1,
                "header must be main_task,aux_task,<features...>,gain_pct,label",
            ));
        }
        let names = header[2..n - 2].to_vec();
        let mut records = Vec::new();
        for (k, rec) in rd.records().enumerate() {
            let line = k + 2;
            let rec = rec.map_err(|e| Error::parse(line, e.to_string()))?;
            if rec.len() != n {
                return Err(Error::parse(
                    line,
                    format!("expected {n} fields, got {}", rec.len()),
                ));
            }
            let num = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(line, format!("invalid number {s:?}")))
            };
            let features = (2..n - 2)
                .map(|i| num(&rec[i]))
                .collect::<Result<Vec<_>>>()?;
            let gain = num(&rec[n - 2])?;
            let label = match rec[n - 1].trim() {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::parse(
                        line,
                        format!("label must be 0 or 1, got {other:?}"),
                    ))
                }
            };
            if label != (gain > 0.0) {
                return Err(Error::parse(
                    line,
                    format!("label {} disagrees with gain {gain}", u8::from(label)),
                ));
            }
            records.push(PairRecord {
                main: rec[0].to_string(),
                aux: rec[1].to_string(),
                features,
                gain,
                label,
            });
        }
        Self::new(names, records)
    }
}

/// Joins gains and pair features into a meta-dataset, one record per
/// directed pair of the gain matrix in row-major order.
pub fn build_meta(gains: &GainMatrix, pairs: &[PairFeatureVector]) -> Result<MetaDataset> {
    let names = pair_feature_names();
    let by_pair: BTreeMap<(&str, &str), &PairFeatureVector> = pairs
        .iter()
        .map(|p| ((p.main.as_str(), p.aux.as_str()), p))
        .collect();
    let tasks = gains.tasks();
    let mut records = Vec::new();
    for (i, j) in gains.directed_pairs() {
        let (main, aux) = (tasks[i].as_str(), tasks[j].as_str());
        let gain = gains
            .get(i, j)
            .ok_or_else(|| Error::input(format!("no gain for pair {main} <- {aux}")))?;
        let p = by_pair
            .get(&(main, aux))
            .ok_or_else(|| Error::input(format!("no features for pair {main} <- {aux}")))?;
        records.push(PairRecord {
            main: main.to_string(),
            aux: aux.to_string(),
            features: p.values.clone(),
            gain,
            label: gain > 0.0,
        });
    }
    MetaDataset::new(names, records)
}

/// Features, pair vectors and meta-dataset of a finished grid.
pub fn meta_from_grid(
    datasets: &[crate::data::Dataset],
    embeddings: &crate::data::EmbeddingTable,
    grid: &crate::trainer::GridResult,
) -> Result<(
    Vec<crate::features::TaskFeatures>,
    Vec<PairFeatureVector>,
    MetaDataset,
)> {
    let tasks = crate::features::grid_task_features(datasets, embeddings, grid)?;
    let pairs = crate::features::all_pairs(&tasks);
    let meta = build_meta(&grid.gains, &pairs)?;
    Ok((tasks, pairs, meta))
}

/// Column subset used to train the meta-learner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureMask {
    All,
    /// The seven dataset features in all three blocks.
    Data,
    /// The seven loss-curve features in all three blocks.
    Curves,
    /// Column names (`jsd__main`) or base feature names (`jsd`, all blocks).
    Columns(Vec<String>),
}

impl FeatureMask {
    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "all" => Self::All,
            "data" => Self::Data,
            "curves" => Self::Curves,
            list => {
                let cols: Vec<String> = list
                    .split(',')
                    .map(|c| c.trim().to_string())
                    .filter(|c| !c.is_empty())
                    .collect();
                if cols.is_empty() {
                    return Err(Error::input("empty feature mask"));
                }
                Self::Columns(cols)
            }
        })
    }

    /// Indices into `names` selected by this mask, in column order.
    pub fn resolve(&self, names: &[String]) -> Result<Vec<usize>> {
        let base = |n: &str| n.split("__").next().unwrap_or(n).to_string();
        let in_group = |range: std::ops::Range<usize>| {
            let group: Vec<&str> = FEATURE_NAMES[range].to_vec();
            names
                .iter()
                .enumerate()
                .filter(|(_, n)| group.contains(&base(n).as_str()))
                .map(|(i, _)| i)
                .collect::<Vec<_>>()
        };
        let idx = match self {
            Self::All => (0..names.len()).collect(),
            Self::Data => in_group(DATA_FEATURES),
            Self::Curves => in_group(CURVE_FEATURES),
            Self::Columns(cols) => {
                let mut picked = vec![false; names.len()];
                for c in cols {
                    let mut hit = false;
                    for (i, n) in names.iter().enumerate() {
                        if n == c || base(n) == *c {
                            picked[i] = true;
                            hit = true;
                        }
                    }
                    if !hit {
                        return Err(Error::input(format!("unknown feature {c:?} in mask")));
                    }
                }
                picked
                    .iter()
                    .enumerate()
                    .filter(|(_, &p)| p)
                    .map(|(i, _)| i)
                    .collect()
            }
        };
        if idx.is_empty() {
            return Err(Error::input("feature mask selects no columns"));
        }
        Ok(idx)
    }
}

#[cfg(test)]
mod tests;
