//! Tagging datasets: sentences, vocabularies, CoNLL and embedding readers,
//! and synthetic task generation.

mod conll;
mod embeddings;
mod synth;
mod vocab;

use std::path::Path;

pub use conll::{parse_conll, read_conll, write_conll};
pub use embeddings::{load_embeddings, parse_embeddings, EmbeddingTable};
pub use synth::{generate_synth, LabelMap, SynthSpec};
pub use vocab::{normalize_token, Vocab, PAD_ID, UNK_ID};

use crate::{Error, Result};

/// A tokenized sentence with one label per token.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Sentence {
    pub tokens: Vec<String>,
    pub labels: Vec<String>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// A sentence mapped to token and label ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedSentence {
    pub tokens: Vec<usize>,
    pub labels: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Dev,
    Test,
}

/// One task's data.
///
/// The token vocabulary is built from the (normalized) train split only; the
/// label vocabulary covers labels of all splits, train labels first.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub name: String,
    pub train: Vec<Sentence>,
    pub dev: Vec<Sentence>,
    pub test: Vec<Sentence>,
    pub token_vocab: Vocab,
    pub label_vocab: Vocab,
    /// The negative class excluded from micro-F1, if any.
    pub default_label: Option<String>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        train: Vec<Sentence>,
        dev: Vec<Sentence>,
        test: Vec<Sentence>,
    ) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::input("train split must be non-empty"));
        }
        for s in train.iter().chain(&dev).chain(&test) {
            if s.is_empty() || s.tokens.len() != s.labels.len() {
                return Err(Error::input(
                    "every sentence needs one label per token and at least one token",
                ));
            }
        }
        let mut token_vocab = Vocab::for_tokens();
        for s in &train {
            for t in &s.tokens {
                token_vocab.insert(&normalize_token(t));
            }
        }
        let mut label_vocab = Vocab::new();
        for s in train.iter().chain(&dev).chain(&test) {
            for l in &s.labels {
                label_vocab.insert(l);
            }
        }
        Ok(Self {
            name: name.into(),
            train,
            dev,
            test,
            token_vocab,
            label_vocab,
            default_label: None,
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_default_label(mut self, label: Option<String>) -> Self {
        self.default_label = label;
        self
    }

    pub fn split(&self, split: Split) -> &[Sentence] {
        match split {
            Split::Train => &self.train,
            Split::Dev => &self.dev,
            Split::Test => &self.test,
        }
    }

    /// Id of the default label, when declared and present in the data.
    pub fn default_label_id(&self) -> Option<usize> {
        self.default_label
            .as_deref()
            .and_then(|l| self.label_vocab.get(l))
    }

    /// Encodes a split against this dataset's own token vocabulary.
    pub fn encode(&self, split: Split) -> Vec<EncodedSentence> {
        self.encode_with(split, &self.token_vocab)
    }

    /// Encodes a split against an arbitrary token vocabulary (e.g. one shared
    /// by several tasks). Unknown tokens map to [`UNK_ID`].
    pub fn encode_with(&self, split: Split, tokens: &Vocab) -> Vec<EncodedSentence> {
        self.split(split)
            .iter()
            .map(|s| EncodedSentence {
                tokens: s
                    .tokens
                    .iter()
                    .map(|t| tokens.token_id(&normalize_token(t)))
                    .collect(),
                labels: s
                    .labels
                    .iter()
                    .map(|l| {
                        self.label_vocab
                            .get(l)
                            .expect("label vocabulary covers every split")
                    })
                    .collect(),
            })
            .collect()
    }

    /// Number of training tokens.
    pub fn train_tokens(&self) -> usize {
        self.train.iter().map(Sentence::len).sum()
    }
}

/// A token vocabulary over the union of several datasets' train splits, in
/// dataset order.
pub fn shared_vocab<'a, I>(datasets: I) -> Vocab
where
    I: IntoIterator<Item = &'a Dataset>,
{
    let mut v = Vocab::for_tokens();
    for d in datasets {
        for w in d.token_vocab.entries() {
            v.insert(w);
        }
    }
    v
}

/// Loads a single CoNLL file as the train split of a dataset named after the
/// file stem.
pub fn load_conll(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let train = read_conll(path)?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    Dataset::new(name, train, Vec::new(), Vec::new())
}

/// Loads train/dev/test CoNLL files into one dataset. Missing dev or test
/// paths give empty splits.
pub fn load_conll_splits(
    name: &str,
    train: &Path,
    dev: Option<&Path>,
    test: Option<&Path>,
) -> Result<Dataset> {
    let train = read_conll(train)?;
    let dev = dev.map(read_conll).transpose()?.unwrap_or_default();
    let test = test.map(read_conll).transpose()?.unwrap_or_default();
    Dataset::new(name, train, dev, test)
}
