//! Least-squares fit of `L(i) = a·ln(c·i + d) + b` to a loss curve.
//!
//! Levenberg–Marquardt on all four parameters, restarted from a fixed grid
//! of `(c, d)` values with `(a, b)` solved linearly at each start. The model
//! has a one-dimensional gauge, since scaling `(c, d)` by `s` and shifting `b`
//! by `-a·ln s` leaves every prediction unchanged. Iterates and the
//! returned fit are kept in the gauge `|d| = 1` (or `c = 1` when `d = 0`),
//! which makes `c` a well-defined curve-steepness feature.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogCurveFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub rmse: f64,
    pub converged: bool,
}

impl LogCurveFit {
    pub fn predict(&self, i: f64) -> f64 {
        self.a * (self.c * i + self.d).ln() + self.b
    }
}

const MIN_SAMPLES: usize = 8;
const MAX_ITER: usize = 500;

type Params = [f64; 4];

fn canonical(p: Params) -> Params {
    let [a, mut b, mut c, mut d] = p;
    if d != 0.0 {
        let s = d.abs();
        c /= s;
        d /= s;
        b += a * s.ln();
    } else if c > 0.0 {
        b += a * c.ln();
        c = 1.0;
    }
    [a, b, c, d]
}

/// The log argument must be positive at every sample. Being affine in `i`,
/// checking the extreme indices suffices.
fn valid(p: &Params, (x_min, x_max): (f64, f64)) -> bool {
    p.iter().all(|v| v.is_finite()) && p[2] * x_min + p[3] > 0.0 && p[2] * x_max + p[3] > 0.0
}

fn cost(p: &Params, xs: &[f64], ys: &[f64]) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&x, &y)| {
            let r = p[0] * (p[2] * x + p[3]).ln() + p[1] - y;
            r * r
        })
        .sum()
}

/// Ordinary least squares of `y` on `[ln(c·x + d), 1]`.
fn linear_ab(c: f64, d: f64, xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let us: Vec<f64> = xs.iter().map(|&x| (c * x + d).ln()).collect();
    let mu = us.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let suu: f64 = us.iter().map(|u| (u - mu) * (u - mu)).sum();
    let suy: f64 = us.iter().zip(ys).map(|(u, y)| (u - mu) * (y - my)).sum();
    let a = if suu > 0.0 { suy / suu } else { 0.0 };
    (a, my - a * mu)
}

/// Solves a small dense system by Gaussian elimination with partial pivoting.
#[allow(clippy::needless_range_loop)]
fn solve4(mut m: [[f64; 4]; 4], mut rhs: [f64; 4]) -> Option<[f64; 4]> {
    for col in 0..4 {
        let piv = (col..4).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        rhs.swap(col, piv);
        for row in col + 1..4 {
            let f = m[row][col] / m[col][col];
            for k in col..4 {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = [0.0; 4];
    for row in (0..4).rev() {
        let s: f64 = (row + 1..4).map(|k| m[row][k] * x[k]).sum();
        x[row] = (rhs[row] - s) / m[row][row];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

struct Outcome {
    params: Params,
    cost: f64,
    converged: bool,
}

fn levenberg_marquardt(start: Params, xs: &[f64], ys: &[f64]) -> Option<Outcome> {
    let range = (
        xs.iter().copied().fold(f64::INFINITY, f64::min),
        xs.iter().copied().fold(0.0, f64::max),
    );
    let mut p = canonical(start);
    if !valid(&p, range) {
        return None;
    }
    let mut f = cost(&p, xs, ys);
    let scale = ys.iter().map(|y| y * y).sum::<f64>().max(1e-300);
    let mut lambda = 1e-3;
    for _ in 0..MAX_ITER {
        let mut jtj = [[0.0; 4]; 4];
        let mut jtr = [0.0; 4];
        for (&x, &y) in xs.iter().zip(ys) {
            let u = p[2] * x + p[3];
            let j = [u.ln(), 1.0, p[0] * x / u, p[0] / u];
            let r = p[0] * u.ln() + p[1] - y;
            for a in 0..4 {
                jtr[a] += j[a] * r;
                for b in 0..4 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        let grad_inf = jtr.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if grad_inf <= 1e-14 * scale.sqrt() || f <= 1e-30 * scale {
            return Some(Outcome {
                params: p,
                cost: f,
                converged: true,
            });
        }
        loop {
            let mut m = jtj;
            for k in 0..4 {
                m[k][k] += lambda * jtj[k][k].max(1e-12);
            }
            let step = solve4(m, jtr.map(|g| -g));
            let candidate =
                step.map(|s| canonical([p[0] + s[0], p[1] + s[1], p[2] + s[2], p[3] + s[3]]));
            match candidate {
                Some(q) if valid(&q, range) => {
                    let fq = cost(&q, xs, ys);
                    if fq < f {
                        let rel = (f - fq) / f.max(1e-300);
                        let moved = q
                            .iter()
                            .zip(&p)
                            .map(|(a, b)| (a - b).abs() / (b.abs() + 1e-12))
                            .fold(0.0, f64::max);
                        p = q;
                        f = fq;
                        lambda = (lambda / 10.0).max(1e-12);
                        if rel < 1e-15 || moved < 1e-14 {
                            return Some(Outcome {
                                params: p,
                                cost: f,
                                converged: true,
                            });
                        }
                        break;
                    }
                }
                _ => {}
            }
            lambda *= 10.0;
            if lambda > 1e16 {
                // No descent direction left: a (local) minimum up to rounding.
                return Some(Outcome {
                    params: p,
                    cost: f,
                    converged: true,
                });
            }
        }
    }
    Some(Outcome {
        params: p,
        cost: f,
        converged: false,
    })
}

/// Fits the log curve to `(index, loss)` samples.
///
/// Needs at least 8 samples with distinct positive-or-zero indices. The
/// returned fit is the lowest-cost result over all starts; `converged` is
/// false when every start failed or hit the iteration cap.
pub fn fit_log_curve_points(points: &[(f64, f64)]) -> Result<LogCurveFit> {
    if points.len() < MIN_SAMPLES {
        return Err(Error::input(format!(
            "log-curve fit needs at least {MIN_SAMPLES} samples, got {}",
            points.len()
        )));
    }
    if points
        .iter()
        .any(|(x, y)| !x.is_finite() || !y.is_finite() || *x < 0.0)
    {
        return Err(Error::input(
            "curve samples must be finite with non-negative indices",
        ));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1).collect();
    let x_max = xs.iter().copied().fold(0.0, f64::max).max(1.0);

    let mut best: Option<Outcome> = None;
    for k in 0..=8 {
        // c/d spans 0.1 … 10⁴ per full index range, in half decades
        let c0 = 10f64.powf(-1.0 + 0.5 * k as f64) / x_max;
        let (a0, b0) = linear_ab(c0, 1.0, &xs, &ys);
        let Some(out) = levenberg_marquardt([a0, b0, c0, 1.0], &xs, &ys) else {
            continue;
        };
        let better = match &best {
            None => true,
            Some(b) => out.cost < b.cost || (out.cost == b.cost && out.converged && !b.converged),
        };
        if better {
            best = Some(out);
        }
    }
    let n = xs.len() as f64;
    Ok(match best {
        Some(o) => {
            let [a, b, c, d] = o.params;
            LogCurveFit {
                a,
                b,
                c,
                d,
                rmse: (o.cost / n).sqrt(),
                converged: o.converged,
            }
        }
        None => LogCurveFit {
            a: 0.0,
            b: 0.0,
            c: 0.0,
            d: 1.0,
            rmse: f64::INFINITY,
            converged: false,
        },
    })
}

pub fn fit_log_curve(curve: &crate::trainer::LossCurve) -> Result<LogCurveFit> {
    let pts: Vec<(f64, f64)> = curve
        .samples()
        .iter()
        .map(|&(i, l)| (i as f64, l))
        .collect();
    fit_log_curve_points(&pts)
}
