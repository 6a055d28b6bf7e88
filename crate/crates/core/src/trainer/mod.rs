//! Single- and multi-task training loops, evaluation, and the pairwise grid.
//!
//! A training step draws a task uniformly (multi-task runs only), samples a
//! batch of sentences with replacement from that task's train split, and
//! applies one Adadelta step to the shared body and that task's head. The
//! batch loss is the mean token NLL over the batch.

mod curve;
mod f1;
mod grid;

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use curve::LossCurve;
pub use f1::{micro_f1, relative_gain};
pub use grid::{run_grid, GainMatrix, GridResult, PairRun};

use crate::data::{shared_vocab, Dataset, EmbeddingTable, EncodedSentence, Split, Vocab};
use crate::nn::{Adadelta, BodyDims, SharedBody, Tagger, TaskHead};
use crate::seed::derive_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub single_task_batches: usize,
    pub multi_task_batches: usize,
    /// Curve checkpoint spacing, in batches.
    pub curve_sample_every: usize,
    pub seed: u64,
    pub embedding_dim: usize,
    /// Output width of the bi-LSTM (both directions together), unless
    /// `hidden_per_direction` is set.
    pub hidden_dim: usize,
    #[serde(default)]
    pub hidden_per_direction: bool,
    #[serde(default)]
    pub optimizer: Adadelta,
}

impl TrainConfig {
    /// Laptop-scale preset.
    pub fn desk() -> Self {
        Self {
            batch_size: 32,
            single_task_batches: 2_000,
            multi_task_batches: 4_000,
            curve_sample_every: 20,
            seed: 0,
            embedding_dim: 16,
            hidden_dim: 32,
            hidden_per_direction: false,
            optimizer: Adadelta::default(),
        }
    }

    /// 100-d embeddings, 100-wide bi-LSTM, 25k/50k batches.
    pub fn paper() -> Self {
        Self {
            batch_size: 32,
            single_task_batches: 25_000,
            multi_task_batches: 50_000,
            curve_sample_every: 100,
            seed: 0,
            embedding_dim: 100,
            hidden_dim: 100,
            hidden_per_direction: false,
            optimizer: Adadelta::default(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Hidden size of one LSTM direction.
    pub fn lstm_hidden(&self) -> usize {
        if self.hidden_per_direction {
            self.hidden_dim
        } else {
            self.hidden_dim / 2
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.curve_sample_every == 0 {
            return Err(Error::input(
                "batch_size and curve_sample_every must be positive",
            ));
        }
        if self.embedding_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::input(
                "embedding_dim and hidden_dim must be positive",
            ));
        }
        if !self.hidden_per_direction && !self.hidden_dim.is_multiple_of(2) {
            return Err(Error::input(format!(
                "hidden_dim {} must be even when it is the total bi-LSTM width",
                self.hidden_dim
            )));
        }
        self.optimizer.validate()
    }
}

/// Outcome of one training run.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub tasks: Vec<String>,
    /// Test micro-F1 per task, in `[0, 1]`.
    pub f1: Vec<f64>,
    pub curves: Vec<LossCurve>,
    /// How many batches each task was drawn for.
    pub task_draws: Vec<usize>,
    pub model: Tagger,
    /// Token vocabulary the model's embedding rows are indexed by.
    pub vocab: Vocab,
}

struct TaskData<'a> {
    name: &'a str,
    train: Vec<EncodedSentence>,
    test: Vec<EncodedSentence>,
    default_label: Option<usize>,
    label_count: usize,
}

impl<'a> TaskData<'a> {
    fn new(dataset: &'a Dataset, vocab: &Vocab) -> Self {
        if dataset.default_label.is_some() && dataset.default_label_id().is_none() {
            warn!(
                "{}: default label {:?} never occurs; scoring all labels",
                dataset.name, dataset.default_label
            );
        }
        Self {
            name: &dataset.name,
            train: dataset.encode_with(Split::Train, vocab),
            test: dataset.encode_with(Split::Test, vocab),
            default_label: dataset.default_label_id(),
            label_count: dataset.label_vocab.len(),
        }
    }
}

/// Trains a single-task tagger for `config.single_task_batches` batches.
pub fn train_single(
    dataset: &Dataset,
    config: &TrainConfig,
    embeddings: Option<&EmbeddingTable>,
) -> Result<RunResult> {
    let vocab = dataset.token_vocab.clone();
    let tasks = [TaskData::new(dataset, &vocab)];
    train_tasks(
        &tasks,
        vocab,
        embeddings,
        config,
        config.single_task_batches,
    )
}

/// Trains one shared body with a head per task for
/// `config.multi_task_batches` batches, drawing the task uniformly per step.
/// The token vocabulary is the union of both train splits.
pub fn train_multi(
    main: &Dataset,
    aux: &Dataset,
    config: &TrainConfig,
    embeddings: Option<&EmbeddingTable>,
) -> Result<RunResult> {
    let vocab = shared_vocab([main, aux]);
    let tasks = [TaskData::new(main, &vocab), TaskData::new(aux, &vocab)];
    train_tasks(&tasks, vocab, embeddings, config, config.multi_task_batches)
}

fn init_model(
    tasks: &[TaskData],
    vocab: &Vocab,
    embeddings: Option<&EmbeddingTable>,
    config: &TrainConfig,
) -> Result<Tagger> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 1));
    let dims = BodyDims {
        vocab_size: vocab.len(),
        embedding_dim: config.embedding_dim,
        lstm_hidden: config.lstm_hidden(),
    };
    let mut body = SharedBody::init(dims, &mut rng)?;
    if let Some(table) = embeddings {
        if table.dim() != config.embedding_dim {
            return Err(Error::input(format!(
                "embedding table has dimension {}, model expects {}",
                table.dim(),
                config.embedding_dim
            )));
        }
        for (offset, word) in vocab.entries().enumerate() {
            if let Some(v) = table.get(word) {
                body.set_embedding(crate::data::UNK_ID + 1 + offset, v)?;
            }
        }
    }
    let heads = tasks
        .iter()
        .enumerate()
        .map(|(i, t)| {
            Ok((
                t.name.to_string(),
                TaskHead::init(
                    &format!("head{i}"),
                    dims.output_dim(),
                    t.label_count,
                    &mut rng,
                )?,
            ))
        })
        .collect::<Result<_>>()?;
    Ok(Tagger { body, heads })
}

fn train_tasks(
    tasks: &[TaskData],
    vocab: Vocab,
    embeddings: Option<&EmbeddingTable>,
    config: &TrainConfig,
    total_batches: usize,
) -> Result<RunResult> {
    config.validate()?;
    for t in tasks {
        if t.train.is_empty() {
            return Err(Error::input(format!("{}: empty train split", t.name)));
        }
    }
    let mut model = init_model(tasks, &vocab, embeddings, config)?;
    let mut sample_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 2));
    let mut draw_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 3));

    let n = tasks.len();
    let mut curves: Vec<LossCurve> = (0..n).map(|_| LossCurve::new(total_batches)).collect();
    let mut window = vec![(0.0f64, 0usize); n];
    let mut draws = vec![0usize; n];

    for batch in 1..=total_batches {
        let task = if n == 1 { 0 } else { draw_rng.gen_range(0..n) };
        draws[task] += 1;
        let data = &tasks[task];
        let picks: Vec<&EncodedSentence> = (0..config.batch_size)
            .map(|_| &data.train[sample_rng.gen_range(0..data.train.len())])
            .collect();
        let tokens: usize = picks.iter().map(|s| s.tokens.len()).sum();
        let weight = 1.0 / tokens as f64;
        let mut total = 0.0;
        for s in &picks {
            total += model.accumulate_gradients(task, &s.tokens, &s.labels, weight)?;
        }
        let loss = total * weight;
        if !loss.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite loss {loss} at batch {batch} (task {})",
                data.name
            )));
        }
        let Tagger { body, heads } = &mut model;
        for p in body
            .params_mut()
            .into_iter()
            .chain(heads[task].1.params_mut())
        {
            config
                .optimizer
                .step(p)
                .map_err(|e| Error::Numeric(format!("batch {batch}: {e}")))?;
        }

        window[task].0 += loss;
        window[task].1 += 1;
        if batch % config.curve_sample_every == 0 {
            for (curve, w) in curves.iter_mut().zip(window.iter_mut()) {
                if w.1 > 0 {
                    curve.push(batch, w.0 / w.1 as f64)?;
                }
                *w = (0.0, 0);
            }
        }
    }

    let f1 = tasks
        .iter()
        .enumerate()
        .map(|(i, t)| evaluate(&model, i, &t.test, t.default_label, t.name))
        .collect::<Result<_>>()?;
    Ok(RunResult {
        tasks: tasks.iter().map(|t| t.name.to_string()).collect(),
        f1,
        curves,
        task_draws: draws,
        model,
        vocab,
    })
}

/// Micro-F1 of head `task` on encoded sentences.
pub fn evaluate(
    model: &Tagger,
    task: usize,
    data: &[EncodedSentence],
    default_label: Option<usize>,
    name: &str,
) -> Result<f64> {
    if data.is_empty() {
        warn!("{name}: empty test split, reporting F1 = 0");
        return Ok(0.0);
    }
    let mut preds = Vec::new();
    let mut golds = Vec::new();
    for s in data {
        preds.extend(model.predict(task, &s.tokens)?);
        golds.extend_from_slice(&s.labels);
    }
    micro_f1(&preds, &golds, default_label.as_ref())
}

#[cfg(test)]
mod tests;
