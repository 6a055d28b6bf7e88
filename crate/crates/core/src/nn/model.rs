use rand::Rng;

use super::lstm::{LstmDirection, StepCache};
use super::param::ParamTensor;
use crate::data::{PAD_ID, UNK_ID};
use crate::{Error, Result};

/// Sizes of the shared part of a tagger.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BodyDims {
    /// Rows of the embedding matrix, including the padding and unknown rows.
    pub vocab_size: usize,
    pub embedding_dim: usize,
    /// Hidden size of one LSTM direction; the body emits twice this.
    pub lstm_hidden: usize,
}

impl BodyDims {
    pub fn output_dim(&self) -> usize {
        2 * self.lstm_hidden
    }

    fn validate(&self) -> Result<()> {
        if self.vocab_size <= UNK_ID || self.embedding_dim == 0 || self.lstm_hidden == 0 {
            return Err(Error::input(format!("invalid body dimensions {self:?}")));
        }
        Ok(())
    }
}

/// Shared embeddings plus a bi-directional LSTM.
#[derive(Debug, Clone, PartialEq)]
pub struct SharedBody {
    /// `vocab_size × embedding_dim`
    pub embeddings: ParamTensor,
    pub lstm_fwd: LstmDirection,
    pub lstm_bwd: LstmDirection,
}

impl SharedBody {
    pub fn zeros(dims: BodyDims) -> Result<Self> {
        dims.validate()?;
        Ok(Self {
            embeddings: ParamTensor::zeros("embeddings", &[dims.vocab_size, dims.embedding_dim]),
            lstm_fwd: LstmDirection::zeros("lstm_fwd", dims.embedding_dim, dims.lstm_hidden),
            lstm_bwd: LstmDirection::zeros("lstm_bwd", dims.embedding_dim, dims.lstm_hidden),
        })
    }

    /// Random initialization. Embedding rows are uniform in `±sqrt(3/E)`
    /// except the padding row, which is zero.
    pub fn init<R: Rng + ?Sized>(dims: BodyDims, rng: &mut R) -> Result<Self> {
        dims.validate()?;
        let e = dims.embedding_dim;
        let mut embeddings = ParamTensor::uniform(
            "embeddings",
            &[dims.vocab_size, e],
            (3.0 / e as f64).sqrt(),
            rng,
        );
        embeddings.values_mut()[PAD_ID * e..(PAD_ID + 1) * e].fill(0.0);
        let lstm_fwd = LstmDirection::init("lstm_fwd", e, dims.lstm_hidden, rng);
        let lstm_bwd = LstmDirection::init("lstm_bwd", e, dims.lstm_hidden, rng);
        Ok(Self {
            embeddings,
            lstm_fwd,
            lstm_bwd,
        })
    }

    pub(crate) fn from_parts(
        embeddings: ParamTensor,
        lstm_fwd: LstmDirection,
        lstm_bwd: LstmDirection,
    ) -> Self {
        Self {
            embeddings,
            lstm_fwd,
            lstm_bwd,
        }
    }

    pub fn dims(&self) -> BodyDims {
        BodyDims {
            vocab_size: self.vocab_size(),
            embedding_dim: self.embedding_dim(),
            lstm_hidden: self.lstm_fwd.hidden(),
        }
    }

    pub fn vocab_size(&self) -> usize {
        self.embeddings.shape()[0]
    }

    pub fn embedding_dim(&self) -> usize {
        self.embeddings.shape()[1]
    }

    /// Width of the concatenated forward/backward output.
    pub fn hidden_dim(&self) -> usize {
        self.lstm_fwd.hidden() + self.lstm_bwd.hidden()
    }

    /// Overwrites the embedding row of `id`.
    pub fn set_embedding(&mut self, id: usize, vector: &[f64]) -> Result<()> {
        let e = self.embedding_dim();
        if id >= self.vocab_size() || vector.len() != e {
            return Err(Error::input(format!(
                "cannot set embedding row {id} with a {}-vector",
                vector.len()
            )));
        }
        self.embeddings.values_mut()[id * e..(id + 1) * e].copy_from_slice(vector);
        Ok(())
    }

    pub fn params(&self) -> [&ParamTensor; 5] {
        [
            &self.embeddings,
            &self.lstm_fwd.weights,
            &self.lstm_fwd.bias,
            &self.lstm_bwd.weights,
            &self.lstm_bwd.bias,
        ]
    }

    pub fn params_mut(&mut self) -> [&mut ParamTensor; 5] {
        [
            &mut self.embeddings,
            &mut self.lstm_fwd.weights,
            &mut self.lstm_fwd.bias,
            &mut self.lstm_bwd.weights,
            &mut self.lstm_bwd.bias,
        ]
    }

    fn check_sentence(&self, sentence: &[usize]) -> Result<()> {
        if sentence.is_empty() {
            return Err(Error::input("empty sentence"));
        }
        let v = self.vocab_size();
        if let Some(&bad) = sentence.iter().find(|&&id| id >= v) {
            return Err(Error::input(format!(
                "token id {bad} out of range for vocabulary of {v}"
            )));
        }
        Ok(())
    }

    fn run(&self, sentence: &[usize]) -> BodyCache {
        let e = self.embedding_dim();
        let emb = self.embeddings.values();
        let rows: Vec<&[f64]> = sentence
            .iter()
            .map(|&id| &emb[id * e..(id + 1) * e])
            .collect();
        let fwd = self.lstm_fwd.forward(rows.iter().copied());
        let bwd = self.lstm_bwd.forward(rows.iter().rev().copied());
        BodyCache { fwd, bwd }
    }
}

struct BodyCache {
    fwd: Vec<StepCache>,
    /// In reversed time order.
    bwd: Vec<StepCache>,
}

impl BodyCache {
    /// Concatenated `[h_fwd ; h_bwd]` at position `t`.
    fn output(&self, t: usize) -> Vec<f64> {
        let n = self.fwd.len();
        let mut out = self.fwd[t].h.clone();
        out.extend_from_slice(&self.bwd[n - 1 - t].h);
        out
    }
}

/// Task-specific dense projection onto the label space.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskHead {
    /// `hidden_dim × label_count`
    pub projection: ParamTensor,
    pub bias: ParamTensor,
}

impl TaskHead {
    pub fn zeros(prefix: &str, hidden_dim: usize, label_count: usize) -> Result<Self> {
        if hidden_dim == 0 || label_count == 0 {
            return Err(Error::input(
                "task head needs a positive width and label count",
            ));
        }
        Ok(Self {
            projection: ParamTensor::zeros(
                format!("{prefix}.projection"),
                &[hidden_dim, label_count],
            ),
            bias: ParamTensor::zeros(format!("{prefix}.bias"), &[label_count]),
        })
    }

    pub fn init<R: Rng + ?Sized>(
        prefix: &str,
        hidden_dim: usize,
        label_count: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut head = Self::zeros(prefix, hidden_dim, label_count)?;
        let limit = (6.0 / (hidden_dim + label_count) as f64).sqrt();
        head.projection = ParamTensor::uniform(
            format!("{prefix}.projection"),
            &[hidden_dim, label_count],
            limit,
            rng,
        );
        Ok(head)
    }

    pub fn hidden_dim(&self) -> usize {
        self.projection.shape()[0]
    }

    pub fn label_count(&self) -> usize {
        self.projection.shape()[1]
    }

    pub fn params(&self) -> [&ParamTensor; 2] {
        [&self.projection, &self.bias]
    }

    pub fn params_mut(&mut self) -> [&mut ParamTensor; 2] {
        [&mut self.projection, &mut self.bias]
    }

    fn logits(&self, hidden: &[f64]) -> Vec<f64> {
        let k = self.label_count();
        let p = self.projection.values();
        let mut z = self.bias.values().to_vec();
        for (j, &hj) in hidden.iter().enumerate() {
            let row = &p[j * k..(j + 1) * k];
            for (zl, &w) in z.iter_mut().zip(row) {
                *zl += hj * w;
            }
        }
        z
    }
}

fn check_head(body: &SharedBody, head: &TaskHead) -> Result<()> {
    if head.hidden_dim() != body.hidden_dim() {
        return Err(Error::input(format!(
            "head expects {}-wide input, body emits {}",
            head.hidden_dim(),
            body.hidden_dim()
        )));
    }
    Ok(())
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln()
}

/// Per-token label distributions for `sentence`.
pub fn forward(body: &SharedBody, head: &TaskHead, sentence: &[usize]) -> Result<Vec<Vec<f64>>> {
    body.check_sentence(sentence)?;
    check_head(body, head)?;
    let cache = body.run(sentence);
    Ok((0..sentence.len())
        .map(|t| softmax(&head.logits(&cache.output(t))))
        .collect())
}

/// Arg-max label per token.
pub fn predict(body: &SharedBody, head: &TaskHead, sentence: &[usize]) -> Result<Vec<usize>> {
    body.check_sentence(sentence)?;
    check_head(body, head)?;
    let cache = body.run(sentence);
    Ok((0..sentence.len())
        .map(|t| argmax(&head.logits(&cache.output(t))))
        .collect())
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = i;
        }
    }
    best
}

/// Mean per-token negative log-likelihood of `gold`; gradients of that mean
/// are added to every parameter of `body` and `head`.
pub fn backward(
    body: &mut SharedBody,
    head: &mut TaskHead,
    sentence: &[usize],
    gold: &[usize],
) -> Result<f64> {
    let n = sentence.len().max(1) as f64;
    let total = accumulate_gradients(body, head, sentence, gold, 1.0 / n)?;
    Ok(total / n)
}

/// Summed token NLL of `gold`. Gradients of `weight × sum` are added to
/// the parameter accumulators, so a batch can be averaged over all of its
/// tokens by passing `1 / batch_tokens`.
pub fn accumulate_gradients(
    body: &mut SharedBody,
    head: &mut TaskHead,
    sentence: &[usize],
    gold: &[usize],
    weight: f64,
) -> Result<f64> {
    body.check_sentence(sentence)?;
    check_head(body, head)?;
    if gold.len() != sentence.len() {
        return Err(Error::input(format!(
            "{} gold labels for {} tokens",
            gold.len(),
            sentence.len()
        )));
    }
    let k = head.label_count();
    if let Some(&bad) = gold.iter().find(|&&l| l >= k) {
        return Err(Error::input(format!(
            "label id {bad} out of range for {k} labels"
        )));
    }

    let n = sentence.len();
    let cache = body.run(sentence);
    let outputs: Vec<Vec<f64>> = (0..n).map(|t| cache.output(t)).collect();

    let mut loss = 0.0;
    let mut d_outputs = Vec::with_capacity(n);
    for (hidden, &g) in outputs.iter().zip(gold) {
        let z = head.logits(hidden);
        loss += log_sum_exp(&z) - z[g];
        let mut dz = softmax(&z);
        dz[g] -= 1.0;
        for d in &mut dz {
            *d *= weight;
        }
        for (b, d) in head.bias.grad_mut().iter_mut().zip(&dz) {
            *b += d;
        }
        let (p, dp) = head.projection.split_mut();
        let mut dh = vec![0.0; hidden.len()];
        for (j, &hj) in hidden.iter().enumerate() {
            let row = j * k;
            let mut acc = 0.0;
            for l in 0..k {
                dp[row + l] += hj * dz[l];
                acc += p[row + l] * dz[l];
            }
            dh[j] = acc;
        }
        d_outputs.push(dh);
    }

    let half = body.lstm_fwd.hidden();
    let dh_fwd: Vec<Vec<f64>> = d_outputs.iter().map(|d| d[..half].to_vec()).collect();
    let dh_bwd: Vec<Vec<f64>> = d_outputs.iter().rev().map(|d| d[half..].to_vec()).collect();
    let dx_fwd = body.lstm_fwd.backward(&cache.fwd, &dh_fwd);
    let dx_bwd = body.lstm_bwd.backward(&cache.bwd, &dh_bwd);

    let e = body.embedding_dim();
    let demb = body.embeddings.grad_mut();
    for (t, &id) in sentence.iter().enumerate() {
        let row = &mut demb[id * e..(id + 1) * e];
        for (r, (a, b)) in row.iter_mut().zip(dx_fwd[t].iter().zip(&dx_bwd[n - 1 - t])) {
            *r += a + b;
        }
    }
    Ok(loss)
}

/// A shared body with one head per task.
#[derive(Debug, Clone, PartialEq)]
pub struct Tagger {
    pub body: SharedBody,
    /// `(task name, head)` in task order.
    pub heads: Vec<(String, TaskHead)>,
}

impl Tagger {
    pub fn head_index(&self, task: &str) -> Option<usize> {
        self.heads.iter().position(|(name, _)| name == task)
    }

    pub fn forward(&self, task: usize, sentence: &[usize]) -> Result<Vec<Vec<f64>>> {
        forward(&self.body, self.head(task)?, sentence)
    }

    pub fn predict(&self, task: usize, sentence: &[usize]) -> Result<Vec<usize>> {
        predict(&self.body, self.head(task)?, sentence)
    }

    pub fn accumulate_gradients(
        &mut self,
        task: usize,
        sentence: &[usize],
        gold: &[usize],
        weight: f64,
    ) -> Result<f64> {
        let Tagger { body, heads } = self;
        let head = heads
            .get_mut(task)
            .map(|(_, h)| h)
            .ok_or_else(|| Error::input(format!("no head {task}")))?;
        accumulate_gradients(body, head, sentence, gold, weight)
    }

    fn head(&self, task: usize) -> Result<&TaskHead> {
        self.heads
            .get(task)
            .map(|(_, h)| h)
            .ok_or_else(|| Error::input(format!("no head {task}")))
    }

    pub fn params(&self) -> Vec<&ParamTensor> {
        let mut out: Vec<&ParamTensor> = self.body.params().into_iter().collect();
        for (_, head) in &self.heads {
            out.extend(head.params());
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut ParamTensor> {
        let mut out: Vec<&mut ParamTensor> = self.body.params_mut().into_iter().collect();
        for (_, head) in &mut self.heads {
            out.extend(head.params_mut());
        }
        out
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }
}
