//! Central finite-difference verification of analytic gradients.
//!
//! The numeric side only ever calls [`forward`](super::forward) and takes
//! `-ln p(gold)` of its output, so it shares no code with backpropagation
//! beyond the forward recurrences themselves.

use super::model::{forward, Tagger};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    /// `(parameter name, flat index)` of the worst entry.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

/// Mean token NLL of `gold` under the model, via the forward pass only.
pub fn mean_nll(model: &Tagger, task: usize, sentence: &[usize], gold: &[usize]) -> Result<f64> {
    let (_, head) = &model.heads[task];
    let probs = forward(&model.body, head, sentence)?;
    let total: f64 = probs.iter().zip(gold).map(|(p, &g)| -p[g].ln()).sum();
    Ok(total / sentence.len() as f64)
}

/// Relative error `|a - n| / max(|a| + |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(floor)
}

/// Compares backprop against central differences with step `step` for every
/// parameter of `model`. Gradient buffers are cleared before and after.
pub fn check_gradients(
    model: &mut Tagger,
    task: usize,
    sentence: &[usize],
    gold: &[usize],
    step: f64,
    floor: f64,
) -> Result<GradCheckReport> {
    for p in model.params_mut() {
        p.zero_grad();
    }
    super::backward_task(model, task, sentence, gold)?;
    let analytic: Vec<(String, Vec<f64>)> = model
        .params()
        .iter()
        .map(|p| (p.name().to_string(), p.grad().to_vec()))
        .collect();
    for p in model.params_mut() {
        p.zero_grad();
    }

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst: None,
        checked: 0,
    };
    for (pi, (name, grads)) in analytic.iter().enumerate() {
        for (idx, &a) in grads.iter().enumerate() {
            let original = model.params()[pi].values()[idx];
            model.params_mut()[pi].values_mut()[idx] = original + step;
            let plus = mean_nll(model, task, sentence, gold)?;
            model.params_mut()[pi].values_mut()[idx] = original - step;
            let minus = mean_nll(model, task, sentence, gold)?;
            model.params_mut()[pi].values_mut()[idx] = original;
            let numeric = (plus - minus) / (2.0 * step);
            let err = relative_error(a, numeric, floor);
            report.checked += 1;
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = report.max_rel_error.max(err);
                if err >= report.max_rel_error {
                    report.worst = Some((name.clone(), idx));
                }
            }
        }
    }
    Ok(report)
}
