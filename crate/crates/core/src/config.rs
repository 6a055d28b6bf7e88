//! Declarative experiment configuration (TOML).
//!
//! ```toml
//! profile = "desk"          # or "paper"
//! seed = 7
//! out = "runs/exp1"
//! embeddings = "vectors.txt" # optional, whitespace-separated word vectors
//!
//! [train]                   # optional overrides of the profile
//! multi_task_batches = 3000
//!
//! [[task]]
//! name = "chunk"
//! default_label = "O"
//! conll = { train = "chunk.train", test = "chunk.test" }
//!
//! [[task]]
//! name = "toy"
//! [task.synth]
//! num_states = 4
//! vocab_size = 30
//! sentence_length = [3, 8]
//! train_sentences = 60
//! dev_sentences = 0
//! test_sentences = 40
//! label_map = { kind = "modulo", labels = 2 }
//! transition_seed = 1
//! emission_seed = 2
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::data::{
    generate_synth, load_conll_splits, load_embeddings, Dataset, EmbeddingTable, SynthSpec,
};
use crate::trainer::TrainConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    #[default]
    Desk,
    Paper,
}

impl Profile {
    pub fn train_config(self) -> TrainConfig {
        match self {
            Profile::Desk => TrainConfig::desk(),
            Profile::Paper => TrainConfig::paper(),
        }
    }
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            other => Err(Error::Config(format!(
                "unknown profile {other:?}, expected desk or paper"
            ))),
        }
    }
}

/// Per-field overrides applied on top of a profile.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOverrides {
    pub batch_size: Option<usize>,
    pub single_task_batches: Option<usize>,
    pub multi_task_batches: Option<usize>,
    pub curve_sample_every: Option<usize>,
    pub embedding_dim: Option<usize>,
    pub hidden_dim: Option<usize>,
    pub hidden_per_direction: Option<bool>,
    pub rho: Option<f64>,
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConllPaths {
    pub train: PathBuf,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaskSource {
    Conll(ConllPaths),
    Synth(SynthSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskConfig {
    pub name: String,
    pub default_label: Option<String>,
    pub source: TaskSource,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTask {
    name: String,
    default_label: Option<String>,
    conll: Option<ConllPaths>,
    synth: Option<SynthSpec>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    profile: Profile,
    #[serde(default)]
    seed: u64,
    out: Option<PathBuf>,
    embeddings: Option<PathBuf>,
    #[serde(default)]
    train: TrainOverrides,
    #[serde(default)]
    task: Vec<RawTask>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub profile: Profile,
    pub seed: u64,
    /// Output directory; `out` when unset.
    pub out: PathBuf,
    pub embeddings: Option<PathBuf>,
    pub train: TrainOverrides,
    pub tasks: Vec<TaskConfig>,
}

fn valid_name(name: &str) -> bool {
    !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.'))
        && name != "."
        && name != ".."
}

impl ExperimentConfig {
    /// Parses and validates a configuration without touching the filesystem.
    pub fn parse(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut tasks = Vec::with_capacity(raw.task.len());
        for t in raw.task {
            if !valid_name(&t.name) {
                return Err(Error::Config(format!(
                    "task name {:?} must be non-empty and use only A-Z a-z 0-9 _ - .",
                    t.name
                )));
            }
            if tasks.iter().any(|o: &TaskConfig| o.name == t.name) {
                return Err(Error::Config(format!("duplicate task name {:?}", t.name)));
            }
            let source = match (t.conll, t.synth) {
                (Some(c), None) => TaskSource::Conll(c),
                (None, Some(s)) => {
                    s.validate()
                        .map_err(|e| Error::Config(format!("task {}: {e}", t.name)))?;
                    TaskSource::Synth(s)
                }
                _ => {
                    return Err(Error::Config(format!(
                        "task {} needs exactly one of `conll` or `synth`",
                        t.name
                    )))
                }
            };
            tasks.push(TaskConfig {
                name: t.name,
                default_label: t.default_label,
                source,
            });
        }
        let config = Self {
            profile: raw.profile,
            seed: raw.seed,
            out: raw.out.unwrap_or_else(|| PathBuf::from("out")),
            embeddings: raw.embeddings,
            train: raw.train,
            tasks,
        };
        config.train_config(None, None)?;
        Ok(config)
    }

    /// Reads a configuration file and resolves relative paths against its
    /// directory. Every referenced input file must exist.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
        let mut config = Self::parse(&text).map_err(|e| e.in_file(path))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut config.out);
        let mut inputs: Vec<&mut PathBuf> = Vec::new();
        if let Some(e) = config.embeddings.as_mut() {
            inputs.push(e);
        }
        for t in &mut config.tasks {
            if let TaskSource::Conll(c) = &mut t.source {
                inputs.push(&mut c.train);
                inputs.extend(c.dev.as_mut());
                inputs.extend(c.test.as_mut());
            }
        }
        for p in inputs {
            resolve(p);
            if !p.is_file() {
                return Err(Error::Config(format!("{}: no such file", p.display())));
            }
        }
        Ok(config)
    }

    /// Training hyperparameters: profile, then `[train]` overrides, then the
    /// explicit `profile` and `seed` arguments (command-line flags).
    pub fn train_config(&self, profile: Option<Profile>, seed: Option<u64>) -> Result<TrainConfig> {
        let mut c = profile.unwrap_or(self.profile).train_config();
        let o = &self.train;
        c.batch_size = o.batch_size.unwrap_or(c.batch_size);
        c.single_task_batches = o.single_task_batches.unwrap_or(c.single_task_batches);
        c.multi_task_batches = o.multi_task_batches.unwrap_or(c.multi_task_batches);
        c.curve_sample_every = o.curve_sample_every.unwrap_or(c.curve_sample_every);
        c.embedding_dim = o.embedding_dim.unwrap_or(c.embedding_dim);
        c.hidden_dim = o.hidden_dim.unwrap_or(c.hidden_dim);
        c.hidden_per_direction = o.hidden_per_direction.unwrap_or(c.hidden_per_direction);
        c.optimizer.rho = o.rho.unwrap_or(c.optimizer.rho);
        c.optimizer.epsilon = o.epsilon.unwrap_or(c.optimizer.epsilon);
        c.seed = seed.unwrap_or(self.seed);
        c.validate()
            .map_err(|e| Error::Config(format!("[train]: {e}")))?;
        Ok(c)
    }

    pub fn task(&self, name: &str) -> Option<&TaskConfig> {
        self.tasks.iter().find(|t| t.name == name)
    }

    pub fn task_names(&self) -> Vec<&str> {
        self.tasks.iter().map(|t| t.name.as_str()).collect()
    }

    /// Loads or generates the dataset of one task.
    pub fn load_task(&self, task: &TaskConfig) -> Result<Dataset> {
        let ds = match &task.source {
            TaskSource::Conll(c) => {
                load_conll_splits(&task.name, &c.train, c.dev.as_deref(), c.test.as_deref())?
            }
            TaskSource::Synth(s) => generate_synth(s)?.with_name(task.name.clone()),
        };
        Ok(ds.with_default_label(task.default_label.clone()))
    }

    pub fn load_tasks(&self) -> Result<Vec<Dataset>> {
        self.tasks.iter().map(|t| self.load_task(t)).collect()
    }

    /// The pretrained table when configured, else an empty one.
    pub fn load_embeddings(&self, dim: usize) -> Result<EmbeddingTable> {
        match &self.embeddings {
            Some(p) => load_embeddings(p, dim),
            None => Ok(EmbeddingTable::empty(dim)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::LabelMap;

    const SYNTH: &str = r#"
[[task]]
name = "toy"
default_label = "L0"
[task.synth]
num_states = 4
vocab_size = 30
sentence_length = [3, 8]
train_sentences = 20
dev_sentences = 0
test_sentences = 10
label_map = { kind = "modulo", labels = 2 }
transition_seed = 1
emission_seed = 2
"#;

    #[test]
    fn defaults_and_synth_task() {
        let c = ExperimentConfig::parse(SYNTH).unwrap();
        assert_eq!(c.profile, Profile::Desk);
        assert_eq!(c.seed, 0);
        assert_eq!(c.out, PathBuf::from("out"));
        assert_eq!(c.task_names(), vec!["toy"]);
        let TaskSource::Synth(s) = &c.tasks[0].source else {
            panic!()
        };
        assert_eq!(s.label_map, LabelMap::Modulo { labels: 2 });
        let ds = c.load_task(&c.tasks[0]).unwrap();
        assert_eq!(ds.name, "toy");
        assert_eq!(ds.default_label.as_deref(), Some("L0"));
        assert_eq!(c.train_config(None, None).unwrap(), TrainConfig::desk());
    }

    #[test]
    fn overrides_layer_in_order() {
        let text =
            format!("profile = \"paper\"\nseed = 5\n[train]\nbatch_size = 8\nrho = 0.9\n{SYNTH}");
        let c = ExperimentConfig::parse(&text).unwrap();
        let t = c.train_config(None, None).unwrap();
        assert_eq!(
            (t.batch_size, t.seed, t.single_task_batches),
            (8, 5, 25_000)
        );
        assert_eq!(t.optimizer.rho, 0.9);
        let t = c.train_config(Some(Profile::Desk), Some(11)).unwrap();
        assert_eq!((t.batch_size, t.seed, t.single_task_batches), (8, 11, 2000));
    }

    #[test]
    fn rejects_bad_configs() {
        let dup = format!("{SYNTH}{SYNTH}");
        let cases = [
            "profile = \"huge\"".to_string(),
            "bogus = 1".to_string(),
            "[train]\nbatch_size = 0".to_string(),
            "[train]\nlearning_rate = 1.0".to_string(),
            "[[task]]\nname = \"x\"".to_string(),
            "[[task]]\nname = \"a b\"\nconll = { train = \"t\" }".to_string(),
            "[[task]]\nname = \"..\"\nconll = { train = \"t\" }".to_string(),
            format!("{SYNTH}\nconll = {{ train = \"t\" }}"),
            SYNTH.replace("num_states = 4", "num_states = 0"),
            dup,
        ];
        for text in &cases {
            assert!(
                matches!(ExperimentConfig::parse(text), Err(Error::Config(_))),
                "{text}"
            );
        }
    }

    #[test]
    fn load_resolves_and_checks_paths() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("a.train"), "x\tA\ny\tB\n").unwrap();
        std::fs::write(dir.path().join("a.test"), "x\tA\n").unwrap();
        let cfg = dir.path().join("exp.toml");
        std::fs::write(
            &cfg,
            "out = \"res\"\n[[task]]\nname = \"a\"\nconll = { train = \"a.train\", test = \"a.test\" }\n",
        )
        .unwrap();
        let c = ExperimentConfig::load(&cfg).unwrap();
        assert_eq!(c.out, dir.path().join("res"));
        let ds = c.load_tasks().unwrap();
        assert_eq!((ds[0].train.len(), ds[0].test.len()), (1, 1));
        assert!(c.load_embeddings(4).unwrap().is_empty());

        std::fs::write(
            &cfg,
            "[[task]]\nname = \"a\"\nconll = { train = \"a.train\", test = \"missing\" }\n",
        )
        .unwrap();
        let err = ExperimentConfig::load(&cfg).unwrap_err().to_string();
        assert!(err.contains("missing"), "{err}");
    }
}
