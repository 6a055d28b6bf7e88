use std::fmt;
use std::io::Write;

use super::cv::CvReport;
use super::logreg::LogRegModel;
use crate::{Error, Result};

/// Which part of the pair vector a column belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    Main,
    Aux,
    Ratio,
    Other,
}

impl Block {
    pub fn of(column: &str) -> Self {
        match column.rsplit_once("__").map(|(_, s)| s) {
            Some("main") => Block::Main,
            Some("aux") => Block::Aux,
            Some("ratio") => Block::Ratio,
            _ => Block::Other,
        }
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Block::Main => "Main",
            Block::Aux => "Aux",
            Block::Ratio => "Main/Aux",
            Block::Other => "-",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientRow {
    pub feature: String,
    pub block: Block,
    pub coefficient: f64,
}

/// Coefficients sorted by descending magnitude; ties keep column order.
pub fn coefficient_report(
    model: &LogRegModel,
    feature_names: &[String],
) -> Result<Vec<CoefficientRow>> {
    if model.weights.len() != feature_names.len() {
        return Err(Error::input(format!(
            "{} coefficients for {} feature names",
            model.weights.len(),
            feature_names.len()
        )));
    }
    let mut rows: Vec<CoefficientRow> = feature_names
        .iter()
        .zip(&model.weights)
        .map(|(name, &w)| CoefficientRow {
            feature: name.clone(),
            block: Block::of(name),
            coefficient: w,
        })
        .collect();
    rows.sort_by(|a, b| b.coefficient.abs().total_cmp(&a.coefficient.abs()));
    Ok(rows)
}

pub fn write_coefficients_csv<W: Write>(rows: &[CoefficientRow], w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["rank", "feature", "block", "coefficient"])?;
    for (i, r) in rows.iter().enumerate() {
        wr.write_record([
            (i + 1).to_string(),
            r.feature.clone(),
            r.block.to_string(),
            r.coefficient.to_string(),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

fn table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut width: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for r in rows {
        for (w, c) in width.iter_mut().zip(r) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: &[String]| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&width)
            .enumerate()
            .map(|(i, (c, &w))| {
                // numbers right-aligned, text left-aligned; rank stays left
                if i > 0 && c.parse::<f64>().is_ok() {
                    format!("{c:>w$}")
                } else {
                    format!("{c:<w$}")
                }
            })
            .collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(&header.iter().map(|h| h.to_string()).collect::<Vec<_>>());
    out += &line(&width.iter().map(|&w| "-".repeat(w)).collect::<Vec<_>>());
    for r in rows {
        out += &line(r);
    }
    out
}

pub fn coefficients_text(rows: &[CoefficientRow]) -> String {
    let body: Vec<Vec<String>> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| {
            vec![
                (i + 1).to_string(),
                r.feature.clone(),
                r.block.to_string(),
                format!("{:.4}", r.coefficient),
            ]
        })
        .collect();
    table(&["rank", "feature", "block", "coefficient"], &body)
}

/// One row per run, then `mean` and `majority` rows.
pub fn write_cv_report_csv<W: Write>(report: &CvReport, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["row", "accuracy", "f1_positive"])?;
    for (i, s) in report.per_run.iter().enumerate() {
        wr.write_record([
            format!("run{i}"),
            s.accuracy.to_string(),
            s.f1_positive.to_string(),
        ])?;
    }
    wr.write_record([
        "mean".to_string(),
        report.mean_accuracy.to_string(),
        report.mean_f1_positive.to_string(),
    ])?;
    wr.write_record([
        "majority".to_string(),
        report.majority_accuracy.to_string(),
        report.majority_f1_positive.to_string(),
    ])?;
    wr.flush()?;
    Ok(())
}

pub fn cv_report_text(report: &CvReport) -> String {
    let mut out = format!(
        "{} runs of {}-fold CV on {} features\n\n",
        report.runs(),
        report.folds,
        report.features.len()
    );
    out += &table(
        &["", "accuracy", "f1_positive"],
        &[
            vec![
                "logistic regression".into(),
                format!("{:.4}", report.mean_accuracy),
                format!("{:.4}", report.mean_f1_positive),
            ],
            vec![
                "majority baseline".into(),
                format!("{:.4}", report.majority_accuracy),
                format!("{:.4}", report.majority_f1_positive),
            ],
        ],
    );
    if report.degenerate_folds > 0 {
        out += &format!(
            "\n{} training folds held a single class\n",
            report.degenerate_folds
        );
    }
    out
}
