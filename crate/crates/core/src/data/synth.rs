//! Synthetic tagging tasks sampled from a hidden Markov process.
//!
//! Latent states follow a seeded transition matrix. Each state owns a block
//! of the vocabulary (a seeded partition) and emits from it, or, with
//! probability `ambiguity`, emits any word uniformly. A token's label is a
//! function of its latent state.
//!
//! Tasks built with the same `transition_seed` and `emission_seed` share the
//! latent process and therefore produce identical token sequences; only the
//! labelling differs.

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, Sentence};
use crate::seed::derive_seed;
use crate::{Error, Result};

/// How latent states become labels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LabelMap {
    /// `S<state>`
    Identity,
    /// `L<state mod labels>`
    Modulo { labels: usize },
    /// `B<state · labels / num_states>`: contiguous groups of states.
    Blocks { labels: usize },
}

impl LabelMap {
    pub fn label(&self, state: usize, num_states: usize) -> String {
        match *self {
            LabelMap::Identity => format!("S{state}"),
            LabelMap::Modulo { labels } => format!("L{}", state % labels),
            LabelMap::Blocks { labels } => format!("B{}", state * labels / num_states),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            LabelMap::Modulo { labels } | LabelMap::Blocks { labels } if labels == 0 => {
                Err(Error::input("label map needs at least one label"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub num_states: usize,
    pub vocab_size: usize,
    /// Inclusive `(min, max)` sentence length.
    pub sentence_length: (usize, usize),
    pub train_sentences: usize,
    pub dev_sentences: usize,
    pub test_sentences: usize,
    pub label_map: LabelMap,
    pub transition_seed: u64,
    pub emission_seed: u64,
    /// Probability that a token is drawn uniformly from the whole vocabulary
    /// instead of from its state's block. Zero makes the label a function of
    /// the token.
    #[serde(default)]
    pub ambiguity: f64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.sentence_length;
        if lo > hi {
            return Err(Error::input(format!(
                "sentence length min {lo} exceeds max {hi}"
            )));
        }
        if lo == 0 {
            return Err(Error::input("sentences need at least one token"));
        }
        if self.num_states == 0 {
            return Err(Error::input("num_states must be positive"));
        }
        if self.vocab_size < self.num_states {
            return Err(Error::input(format!(
                "vocab_size {} cannot give each of {} states a word",
                self.vocab_size, self.num_states
            )));
        }
        if self.train_sentences == 0 {
            return Err(Error::input("train split must be non-empty"));
        }
        if !(0.0..=1.0).contains(&self.ambiguity) {
            return Err(Error::input("ambiguity must lie in [0, 1]"));
        }
        self.label_map.validate()
    }
}

struct Process {
    start: WeightedIndex<f64>,
    transitions: Vec<WeightedIndex<f64>>,
    emissions: Vec<(Vec<usize>, WeightedIndex<f64>)>,
}

impl Process {
    fn new(spec: &SynthSpec) -> Self {
        let s = spec.num_states;
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.transition_seed, 0x7472));
        let skewed = |rng: &mut ChaCha8Rng, n: usize| -> Vec<f64> {
            (0..n).map(|_| rng.gen::<f64>().powi(4) + 0.01).collect()
        };
        let start = WeightedIndex::new(skewed(&mut rng, s)).expect("positive weights");
        let transitions = (0..s)
            .map(|_| WeightedIndex::new(skewed(&mut rng, s)).expect("positive weights"))
            .collect();

        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(spec.emission_seed, 0x656d));
        let mut words: Vec<usize> = (0..spec.vocab_size).collect();
        words.shuffle(&mut rng);
        let emissions = (0..s)
            .map(|state| {
                let lo = state * spec.vocab_size / s;
                let hi = (state + 1) * spec.vocab_size / s;
                let block = words[lo..hi].to_vec();
                let weights: Vec<f64> = block
                    .iter()
                    .map(|_| rng.gen::<f64>().powi(2) + 0.1)
                    .collect();
                (
                    block,
                    WeightedIndex::new(weights).expect("positive weights"),
                )
            })
            .collect();
        Self {
            start,
            transitions,
            emissions,
        }
    }
}

/// Samples a dataset from `spec`. The label of state 0 is not marked as a
/// default label; callers set one with [`Dataset::with_default_label`].
pub fn generate_synth(spec: &SynthSpec) -> Result<Dataset> {
    spec.validate()?;
    let process = Process::new(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(
        derive_seed(spec.transition_seed, 0x7361),
        spec.emission_seed,
    ));
    let sample_split = |count: usize, rng: &mut ChaCha8Rng| -> Vec<Sentence> {
        (0..count)
            .map(|_| {
                let len = rng.gen_range(spec.sentence_length.0..=spec.sentence_length.1);
                let mut state = process.start.sample(rng);
                let mut sentence = Sentence::default();
                for t in 0..len {
                    if t > 0 {
                        state = process.transitions[state].sample(rng);
                    }
                    let word = if spec.ambiguity > 0.0 && rng.gen::<f64>() < spec.ambiguity {
                        rng.gen_range(0..spec.vocab_size)
                    } else {
                        let (block, dist) = &process.emissions[state];
                        block[dist.sample(rng)]
                    };
                    sentence.tokens.push(format!("w{word}"));
                    sentence
                        .labels
                        .push(spec.label_map.label(state, spec.num_states));
                }
                sentence
            })
            .collect()
    };
    let train = sample_split(spec.train_sentences, &mut rng);
    let dev = sample_split(spec.dev_sentences, &mut rng);
    let test = sample_split(spec.test_sentences, &mut rng);
    let name = format!("synth-{}-{}", spec.transition_seed, spec.emission_seed);
    Dataset::new(name, train, dev, test)
}
