use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogRegConfig {
    /// L2 penalty on the weights (not the bias).
    pub l2: f64,
    /// Stop once the gradient's Euclidean norm falls below this.
    pub tolerance: f64,
    pub max_iter: usize,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            l2: 1.0,
            tolerance: 1e-6,
            max_iter: 20_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub l2_strength: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl LogRegModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    /// Probability of the positive class.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.decision(x) > 0.0
    }
}

/// `J(w, b) = (1/n) [Σ NLL_i + (l2/2)‖w‖²]` and its gradient `(∂w, ∂b)`.
pub fn logreg_objective(
    x: &[Vec<f64>],
    y: &[bool],
    w: &[f64],
    b: f64,
    l2: f64,
) -> (f64, Vec<f64>, f64) {
    let n = x.len() as f64;
    let mut loss = 0.0;
    let mut gw = vec![0.0; w.len()];
    let mut gb = 0.0;
    for (row, &label) in x.iter().zip(y) {
        let z = dot(w, row) + b;
        let t = if label { 1.0 } else { 0.0 };
        loss += softplus(z) - t * z;
        let r = sigmoid(z) - t;
        for (g, v) in gw.iter_mut().zip(row) {
            *g += r * v;
        }
        gb += r;
    }
    loss += 0.5 * l2 * dot(w, w);
    for (g, wi) in gw.iter_mut().zip(w) {
        *g = (*g + l2 * wi) / n;
    }
    (loss / n, gw, gb / n)
}

/// Fits from zero weights and bias.
pub fn train_logreg(x: &[Vec<f64>], y: &[bool], config: &LogRegConfig) -> Result<LogRegModel> {
    let d = x.first().map_or(0, Vec::len);
    train_logreg_from(x, y, config, &vec![0.0; d], 0.0)
}

/// Accelerated full-batch gradient descent with adaptive restart.
///
/// The step is `1/L` for the Lipschitz bound `L = (Σ‖x̃_i‖²/4 + l2)/n`,
/// where `x̃` is the row with a trailing 1 for the bias.
pub fn train_logreg_from(
    x: &[Vec<f64>],
    y: &[bool],
    config: &LogRegConfig,
    init_weights: &[f64],
    init_bias: f64,
) -> Result<LogRegModel> {
    if x.is_empty() || x.len() != y.len() {
        return Err(Error::input(format!(
            "{} rows for {} labels",
            x.len(),
            y.len()
        )));
    }
    let d = x[0].len();
    if x.iter().any(|r| r.len() != d) || init_weights.len() != d {
        return Err(Error::input(
            "rows and initial weights must share one width",
        ));
    }
    if !(config.l2 >= 0.0 && config.l2.is_finite())
        || config.tolerance.is_nan()
        || config.tolerance <= 0.0
    {
        return Err(Error::input(
            "l2 must be finite and non-negative, tolerance positive",
        ));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::input("non-finite feature value"));
    }
    let n = x.len() as f64;
    let trace: f64 = x.iter().map(|r| dot(r, r) + 1.0).sum();
    let step = 1.0 / ((0.25 * trace + config.l2) / n);

    // parameters packed as [w.., b]
    let mut theta: Vec<f64> = init_weights.iter().copied().chain([init_bias]).collect();
    let mut look = theta.clone();
    let mut t = 1.0f64;
    let eval = |p: &[f64]| {
        let (f, gw, gb) = logreg_objective(x, y, &p[..d], p[d], config.l2);
        let g: Vec<f64> = gw.into_iter().chain([gb]).collect();
        (f, g)
    };
    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iter {
        let (f, g) = eval(&look);
        if !f.is_finite() {
            return Err(Error::Numeric(format!(
                "logistic objective is {f} at iteration {iterations}"
            )));
        }
        if dot(&g, &g).sqrt() < config.tolerance {
            theta = look;
            converged = true;
            break;
        }
        iterations += 1;
        let next: Vec<f64> = look.iter().zip(&g).map(|(p, gi)| p - step * gi).collect();
        // restart momentum when it points uphill
        let uphill = g
            .iter()
            .zip(next.iter().zip(&theta))
            .map(|(gi, (a, b))| gi * (a - b))
            .sum::<f64>()
            > 0.0;
        let t_next = if uphill {
            1.0
        } else {
            0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt())
        };
        let beta = if uphill { 0.0 } else { (t - 1.0) / t_next };
        look = next
            .iter()
            .zip(&theta)
            .map(|(a, b)| a + beta * (a - b))
            .collect();
        theta = next;
        t = t_next;
    }
    if !converged {
        let (f, g) = eval(&theta);
        if !f.is_finite() {
            return Err(Error::Numeric(format!(
                "logistic objective is {f} after {iterations} iterations"
            )));
        }
        converged = dot(&g, &g).sqrt() < config.tolerance;
    }
    let bias = theta[d];
    theta.truncate(d);
    Ok(LogRegModel {
        weights: theta,
        bias,
        l2_strength: config.l2,
        iterations,
        converged,
    })
}
