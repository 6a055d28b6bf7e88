//! One direction of an LSTM layer.
//!
//! Gate rows of the stacked weight matrix are ordered input, forget, cell
//! candidate, output. Each step consumes `[x_t ; h_{t-1}]`:
//!
//! ```text
//! i = σ(W_i z + b_i)   f = σ(W_f z + b_f)   g = tanh(W_g z + b_g)   o = σ(W_o z + b_o)
//! c_t = f ⊙ c_{t-1} + i ⊙ g
//! h_t = o ⊙ tanh(c_t)
//! ```

use rand::Rng;

use super::param::ParamTensor;

#[derive(Debug, Clone, PartialEq)]
pub struct LstmDirection {
    input_dim: usize,
    hidden: usize,
    /// `(4·hidden) × (input_dim + hidden)`
    pub weights: ParamTensor,
    /// `4·hidden`
    pub bias: ParamTensor,
}

/// Per-step activations kept for the backward pass.
#[derive(Debug, Clone)]
pub(crate) struct StepCache {
    z: Vec<f64>,
    /// Post-nonlinearity gates `[i | f | g | o]`.
    gates: Vec<f64>,
    c_prev: Vec<f64>,
    tanh_c: Vec<f64>,
    pub(crate) h: Vec<f64>,
}

impl LstmDirection {
    pub fn zeros(prefix: &str, input_dim: usize, hidden: usize) -> Self {
        Self {
            input_dim,
            hidden,
            weights: ParamTensor::zeros(
                format!("{prefix}.weights"),
                &[4 * hidden, input_dim + hidden],
            ),
            bias: ParamTensor::zeros(format!("{prefix}.bias"), &[4 * hidden]),
        }
    }

    /// Glorot-uniform weights, zero biases except +1 on the forget gate.
    pub fn init<R: Rng + ?Sized>(
        prefix: &str,
        input_dim: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        let fan_in = (input_dim + hidden) as f64;
        let fan_out = (4 * hidden) as f64;
        let limit = (6.0 / (fan_in + fan_out)).sqrt();
        let weights = ParamTensor::uniform(
            format!("{prefix}.weights"),
            &[4 * hidden, input_dim + hidden],
            limit,
            rng,
        );
        let mut bias = ParamTensor::zeros(format!("{prefix}.bias"), &[4 * hidden]);
        bias.values_mut()[hidden..2 * hidden].fill(1.0);
        Self {
            input_dim,
            hidden,
            weights,
            bias,
        }
    }

    pub(crate) fn from_parts(
        input_dim: usize,
        hidden: usize,
        weights: ParamTensor,
        bias: ParamTensor,
    ) -> Self {
        Self {
            input_dim,
            hidden,
            weights,
            bias,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    /// Runs the recurrence over `inputs` in the given order.
    pub(crate) fn forward<'a, I>(&self, inputs: I) -> Vec<StepCache>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let h = self.hidden;
        let width = self.input_dim + h;
        let w = self.weights.values();
        let b = self.bias.values();
        let mut h_prev = vec![0.0; h];
        let mut c_prev = vec![0.0; h];
        let mut out = Vec::new();
        for x in inputs {
            debug_assert_eq!(x.len(), self.input_dim);
            let mut z = Vec::with_capacity(width);
            z.extend_from_slice(x);
            z.extend_from_slice(&h_prev);

            let mut gates = b.to_vec();
            for (row, gate) in gates.iter_mut().enumerate() {
                let wr = &w[row * width..(row + 1) * width];
                *gate += dot(wr, &z);
            }
            for k in 0..h {
                gates[k] = sigmoid(gates[k]);
                gates[h + k] = sigmoid(gates[h + k]);
                gates[2 * h + k] = gates[2 * h + k].tanh();
                gates[3 * h + k] = sigmoid(gates[3 * h + k]);
            }
            let mut c = vec![0.0; h];
            let mut tanh_c = vec![0.0; h];
            let mut h_t = vec![0.0; h];
            for k in 0..h {
                c[k] = gates[h + k] * c_prev[k] + gates[k] * gates[2 * h + k];
                tanh_c[k] = c[k].tanh();
                h_t[k] = gates[3 * h + k] * tanh_c[k];
            }
            out.push(StepCache {
                z,
                gates,
                c_prev: std::mem::replace(&mut c_prev, c),
                tanh_c,
                h: h_t.clone(),
            });
            h_prev = h_t;
        }
        out
    }

    /// Backpropagates through the cached steps (same order as `forward`).
    ///
    /// `dh_out[t]` is the loss gradient w.r.t. the output `h_t`. Parameter
    /// gradients accumulate into the tensors; returns the gradient w.r.t.
    /// each input vector, in step order.
    pub(crate) fn backward(&mut self, cache: &[StepCache], dh_out: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let h = self.hidden;
        let nin = self.input_dim;
        let width = nin + h;
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        let mut dx = vec![Vec::new(); cache.len()];
        let mut da = vec![0.0; 4 * h];
        let (w, dw) = self.weights.split_mut();
        let db = self.bias.grad_mut();
        for t in (0..cache.len()).rev() {
            let s = &cache[t];
            for k in 0..h {
                let (i, f, g, o) = (
                    s.gates[k],
                    s.gates[h + k],
                    s.gates[2 * h + k],
                    s.gates[3 * h + k],
                );
                let dh = dh_out[t][k] + dh_next[k];
                let d_o = dh * s.tanh_c[k];
                let dc = dh * o * (1.0 - s.tanh_c[k] * s.tanh_c[k]) + dc_next[k];
                let di = dc * g;
                let df = dc * s.c_prev[k];
                let dg = dc * i;
                dc_next[k] = dc * f;
                da[k] = di * i * (1.0 - i);
                da[h + k] = df * f * (1.0 - f);
                da[2 * h + k] = dg * (1.0 - g * g);
                da[3 * h + k] = d_o * o * (1.0 - o);
            }
            let mut dz = vec![0.0; width];
            for (row, &d) in da.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                db[row] += d;
                let base = row * width;
                for col in 0..width {
                    dw[base + col] += d * s.z[col];
                    dz[col] += d * w[base + col];
                }
            }
            dh_next.copy_from_slice(&dz[nin..]);
            dz.truncate(nin);
            dx[t] = dz;
        }
        dx
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
