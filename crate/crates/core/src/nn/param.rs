use rand::distributions::{Distribution, Uniform};
use rand::Rng;

use crate::{Error, Result};

/// A named trainable tensor with its gradient accumulator and Adadelta state.
///
/// Values are stored row-major. `grad`, and both Adadelta accumulators always
/// have the same length as `values`.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamTensor {
    name: String,
    shape: Vec<usize>,
    values: Vec<f64>,
    grad: Vec<f64>,
    sq_grad_avg: Vec<f64>,
    sq_update_avg: Vec<f64>,
}

impl ParamTensor {
    pub fn zeros(name: impl Into<String>, shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Self {
            name: name.into(),
            shape: shape.to_vec(),
            values: vec![0.0; len],
            grad: vec![0.0; len],
            sq_grad_avg: vec![0.0; len],
            sq_update_avg: vec![0.0; len],
        }
    }

    /// Builds a tensor from existing values; the optimizer state starts at zero.
    pub fn from_values(name: impl Into<String>, shape: &[usize], values: Vec<f64>) -> Result<Self> {
        let len: usize = shape.iter().product();
        if values.len() != len {
            return Err(Error::input(format!(
                "tensor shape {:?} needs {} values, got {}",
                shape,
                len,
                values.len()
            )));
        }
        let mut t = Self::zeros(name, shape);
        t.values = values;
        Ok(t)
    }

    /// Uniform initialization in `±limit`.
    pub fn uniform<R: Rng + ?Sized>(
        name: impl Into<String>,
        shape: &[usize],
        limit: f64,
        rng: &mut R,
    ) -> Self {
        let mut t = Self::zeros(name, shape);
        if limit > 0.0 {
            let dist = Uniform::new_inclusive(-limit, limit);
            for v in &mut t.values {
                *v = dist.sample(rng);
            }
        }
        t
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    pub fn grad_mut(&mut self) -> &mut [f64] {
        &mut self.grad
    }

    /// Decaying average of squared gradients.
    pub fn sq_grad_avg(&self) -> &[f64] {
        &self.sq_grad_avg
    }

    /// Decaying average of squared updates.
    pub fn sq_update_avg(&self) -> &[f64] {
        &self.sq_update_avg
    }

    pub fn zero_grad(&mut self) {
        self.grad.fill(0.0);
    }

    /// Values together with the gradient buffer, for kernels that read one and
    /// accumulate into the other.
    pub(crate) fn split_mut(&mut self) -> (&[f64], &mut [f64]) {
        (&self.values, &mut self.grad)
    }
}

/// Adadelta hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Adadelta {
    pub rho: f64,
    pub epsilon: f64,
}

impl Default for Adadelta {
    fn default() -> Self {
        Self {
            rho: 0.95,
            epsilon: 1e-6,
        }
    }
}

impl Adadelta {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return Err(Error::input(format!(
                "adadelta rho must lie in (0,1), got {}",
                self.rho
            )));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::input(format!(
                "adadelta epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    pub fn step(&self, param: &mut ParamTensor) -> Result<()> {
        adadelta_step(param, self.rho, self.epsilon)
    }
}

/// One Adadelta update:
///
/// ```text
/// E[g²] ← ρ E[g²] + (1-ρ) g²
/// Δ     ← -sqrt(E[Δ²] + ε) / sqrt(E[g²] + ε) · g
/// E[Δ²] ← ρ E[Δ²] + (1-ρ) Δ²
/// x     ← x + Δ
/// ```
///
/// The gradient is cleared afterwards. A non-finite gradient leaves the
/// tensor untouched and reports the parameter name.
pub fn adadelta_step(param: &mut ParamTensor, rho: f64, epsilon: f64) -> Result<()> {
    if let Some(pos) = param.grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::Numeric(format!(
            "non-finite gradient in parameter '{}' at index {}",
            param.name, pos
        )));
    }
    let ParamTensor {
        values,
        grad,
        sq_grad_avg,
        sq_update_avg,
        ..
    } = param;
    for (((x, g), eg), ed) in values
        .iter_mut()
        .zip(grad.iter_mut())
        .zip(sq_grad_avg.iter_mut())
        .zip(sq_update_avg.iter_mut())
    {
        *eg = rho * *eg + (1.0 - rho) * *g * *g;
        let delta = -((*ed + epsilon).sqrt() / (*eg + epsilon).sqrt()) * *g;
        *ed = rho * *ed + (1.0 - rho) * delta * delta;
        *x += delta;
        *g = 0.0;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(value: f64, grad: f64) -> ParamTensor {
        let mut p = ParamTensor::from_values("w", &[1], vec![value]).unwrap();
        p.grad_mut()[0] = grad;
        p
    }

    #[test]
    fn zero_grad_leaves_values_and_decays_accumulators() {
        let mut p = scalar(0.3, 1.0);
        adadelta_step(&mut p, 0.95, 1e-6).unwrap();
        let (eg, ed, x) = (p.sq_grad_avg()[0], p.sq_update_avg()[0], p.values()[0]);
        adadelta_step(&mut p, 0.95, 1e-6).unwrap();
        assert_eq!(p.values()[0], x);
        assert!((p.sq_grad_avg()[0] - 0.95 * eg).abs() < 1e-18);
        assert!((p.sq_update_avg()[0] - 0.95 * ed).abs() < 1e-18);
    }

    #[test]
    fn first_step_matches_hand_evaluation() {
        let mut p = scalar(0.0, 1.0);
        adadelta_step(&mut p, 0.95, 1e-6).unwrap();
        // sqrt(1e-6 / (0.05 + 1e-6))
        let expected = -(1e-6f64 / (0.05 + 1e-6)).sqrt();
        assert!((p.values()[0] - expected).abs() < 1e-15);
        assert!((p.values()[0] + 0.0044721).abs() < 1e-6);
        assert_eq!(p.grad()[0], 0.0);
    }

    #[test]
    fn repeated_identical_gradients_grow_the_step() {
        let mut p = scalar(0.0, 1.0);
        adadelta_step(&mut p, 0.95, 1e-6).unwrap();
        let first = p.values()[0].abs();
        p.grad_mut()[0] = 1.0;
        adadelta_step(&mut p, 0.95, 1e-6).unwrap();
        let second = (p.values()[0].abs()) - first;
        assert!(second > first, "{second} <= {first}");
    }

    #[test]
    fn non_finite_gradient_names_the_parameter() {
        let mut p = scalar(1.0, f64::NAN);
        let err = adadelta_step(&mut p, 0.95, 1e-6).unwrap_err();
        assert!(err.to_string().contains("'w'"));
        assert_eq!(p.values()[0], 1.0);
    }

    #[test]
    fn accumulators_stay_non_negative() {
        let mut p = ParamTensor::from_values("v", &[3], vec![0.1, -0.2, 0.3]).unwrap();
        for step in 0..50 {
            for (i, g) in p.grad_mut().iter_mut().enumerate() {
                *g = ((step * 7 + i * 3) % 5) as f64 - 2.0;
            }
            adadelta_step(&mut p, 0.9, 1e-6).unwrap();
            assert!(p.sq_grad_avg().iter().all(|v| *v >= 0.0));
            assert!(p.sq_update_avg().iter().all(|v| *v >= 0.0));
        }
    }
}
