use crate::{Error, Result};

/// Token-level micro-averaged F1 excluding a default (negative) label.
///
/// `tp` counts tokens predicted correctly with a non-default gold label,
/// `fp` wrong predictions of a non-default label, `fn` non-default gold
/// labels that were missed. Returns 0 when `2tp + fp + fn` is 0. Without a
/// default label every token counts as positive.
pub fn micro_f1<T: PartialEq>(
    predictions: &[T],
    golds: &[T],
    default_label: Option<&T>,
) -> Result<f64> {
    if predictions.len() != golds.len() {
        return Err(Error::input(format!(
            "{} predictions for {} gold labels",
            predictions.len(),
            golds.len()
        )));
    }
    let is_default = |x: &T| default_label.is_some_and(|d| d == x);
    let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
    for (p, g) in predictions.iter().zip(golds) {
        if p == g {
            if !is_default(g) {
                tp += 1;
            }
        } else {
            if !is_default(p) {
                fp += 1;
            }
            if !is_default(g) {
                fn_ += 1;
            }
        }
    }
    let denom = 2 * tp + fp + fn_;
    Ok(if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    })
}

/// Percent change of the multi-task score over the single-task score.
pub fn relative_gain(f1_multi: f64, f1_single: f64) -> Result<f64> {
    if f1_single == 0.0 {
        return Err(Error::UndefinedGain);
    }
    Ok(100.0 * (f1_multi - f1_single) / f1_single)
}
