use crate::trainer::LossCurve;
use crate::{Error, Result};

/// Fractions of the run length at which curve gradients are taken.
pub const CURVE_FRACTIONS: [f64; 5] = [0.1, 0.2, 0.3, 0.5, 0.7];

/// Finite-difference slope of a sampled loss curve at `f · total_batches`.
///
/// Each sample already averages the losses of its sampling window. On a
/// sample the slope is the central difference of its neighbours (one-sided
/// at the ends); between samples it is the secant of the bracketing pair;
/// before the first sample it is the forward difference of the first two.
pub fn curve_gradient(samples: &[(usize, f64)], target: f64) -> Result<f64> {
    if samples.len() < 2 {
        return Err(Error::input(format!(
            "curve gradient needs at least 2 samples, got {}",
            samples.len()
        )));
    }
    let last = samples[samples.len() - 1].0 as f64;
    if !(target.is_finite() && target >= 0.0) || target > last {
        return Err(Error::input(format!(
            "curve ends at batch {last}, cannot take gradient at batch {target}"
        )));
    }
    let slope = |a: (usize, f64), b: (usize, f64)| (b.1 - a.1) / (b.0 as f64 - a.0 as f64);
    let pos = samples.partition_point(|s| (s.0 as f64) < target);
    let n = samples.len();
    Ok(if pos < n && samples[pos].0 as f64 == target {
        match pos {
            0 => slope(samples[0], samples[1]),
            p if p == n - 1 => slope(samples[n - 2], samples[n - 1]),
            p => slope(samples[p - 1], samples[p + 1]),
        }
    } else if pos == 0 {
        slope(samples[0], samples[1])
    } else {
        slope(samples[pos - 1], samples[pos])
    })
}

/// Gradients at each of `fractions` of the curve's total batch count.
pub fn curve_gradients(curve: &LossCurve, fractions: &[f64]) -> Result<Vec<f64>> {
    let total = curve.total_batches() as f64;
    fractions
        .iter()
        .map(|f| curve_gradient(curve.samples(), f * total))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(total: usize, every: usize, f: impl Fn(f64) -> f64) -> LossCurve {
        let samples = (1..=total / every)
            .map(|k| (k * every, f((k * every) as f64)))
            .collect();
        LossCurve::from_samples(samples, total).unwrap()
    }

    #[test]
    fn constant_curve_is_flat() {
        let c = curve(2000, 20, |_| 1.3);
        assert_eq!(curve_gradients(&c, &CURVE_FRACTIONS).unwrap(), vec![0.0; 5]);
    }

    #[test]
    fn linear_curve_slope() {
        let n = 2000.0;
        let c = curve(2000, 20, |i| 1.0 - i / n);
        for g in curve_gradients(&c, &CURVE_FRACTIONS).unwrap() {
            assert!((g + 1.0 / n).abs() < 1e-9, "{g}");
        }
        // between samples and before the first sample
        let c = curve(2000, 30, |i| 1.0 - i / n);
        for g in curve_gradients(&c, &[0.001, 0.1, 0.5]).unwrap() {
            assert!((g + 1.0 / n).abs() < 1e-9, "{g}");
        }
    }

    #[test]
    fn log_curve_matches_derivative() {
        let (a, b, c, d) = (-0.5, 2.0, 0.01, 1.0);
        let lc = curve(2000, 20, |i| a * (c * i + d).ln() + b);
        let got = curve_gradients(&lc, &CURVE_FRACTIONS).unwrap();
        for (f, g) in CURVE_FRACTIONS.iter().zip(got) {
            let i = f * 2000.0;
            let exact = a * c / (c * i + d);
            assert!(
                ((g - exact) / exact).abs() < 0.02,
                "f={f} g={g} exact={exact}"
            );
        }
    }

    #[test]
    fn short_curve_is_rejected() {
        let c = LossCurve::from_samples(vec![(100, 1.0), (200, 0.9)], 1000).unwrap();
        assert!(matches!(
            curve_gradients(&c, &CURVE_FRACTIONS),
            Err(Error::Input(_))
        ));
        let c = LossCurve::from_samples(vec![(100, 1.0)], 100).unwrap();
        assert!(curve_gradient(c.samples(), 10.0).is_err());
    }

    #[test]
    fn endpoints_are_one_sided() {
        let s = [(10, 3.0), (20, 2.0), (30, 0.0)];
        assert_eq!(curve_gradient(&s, 10.0).unwrap(), -0.1);
        assert_eq!(curve_gradient(&s, 20.0).unwrap(), -0.15);
        assert_eq!(curve_gradient(&s, 30.0).unwrap(), -0.2);
        assert_eq!(curve_gradient(&s, 25.0).unwrap(), -0.2);
    }
}
