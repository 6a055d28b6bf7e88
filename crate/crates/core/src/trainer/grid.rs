use std::io::Write;

use log::warn;
use rayon::prelude::*;

use super::{relative_gain, train_multi, train_single, RunResult, TrainConfig};
use crate::data::{Dataset, EmbeddingTable};
use crate::seed::derive_seed;
use crate::{Error, Result};

/// Relative gains in percent, indexed `[main][aux]`. The diagonal is always
/// undefined; off-diagonal cells are undefined only when the main task's
/// single-task F1 was zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GainMatrix {
    tasks: Vec<String>,
    gains: Vec<Vec<Option<f64>>>,
}

impl GainMatrix {
    pub fn new(tasks: Vec<String>) -> Self {
        let t = tasks.len();
        Self {
            tasks,
            gains: vec![vec![None; t]; t],
        }
    }

    pub fn tasks(&self) -> &[String] {
        &self.tasks
    }

    pub fn get(&self, main: usize, aux: usize) -> Option<f64> {
        self.gains.get(main)?.get(aux).copied().flatten()
    }

    pub fn set(&mut self, main: usize, aux: usize, gain: f64) {
        assert_ne!(main, aux, "diagonal of a gain matrix is undefined");
        self.gains[main][aux] = Some(gain);
    }

    /// All `(main, aux)` index pairs with `main != aux`, row-major.
    pub fn directed_pairs(&self) -> Vec<(usize, usize)> {
        let t = self.tasks.len();
        (0..t)
            .flat_map(|m| (0..t).filter(move |&a| a != m).map(move |a| (m, a)))
            .collect()
    }

    pub fn defined_count(&self) -> usize {
        self.directed_pairs()
            .into_iter()
            .filter(|&(m, a)| self.get(m, a).is_some())
            .count()
    }

    /// Header row `main,<aux names…>`, then one row per main task. Diagonal
    /// and undefined cells are empty.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["main".to_string()];
        header.extend(self.tasks.iter().cloned());
        out.write_record(&header)?;
        for (m, name) in self.tasks.iter().enumerate() {
            let mut row = vec![name.clone()];
            row.extend(
                (0..self.tasks.len())
                    .map(|a| self.get(m, a).map(|g| g.to_string()).unwrap_or_default()),
            );
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("task names are UTF-8")
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut records = reader.records();
        let header = records
            .next()
            .ok_or_else(|| Error::parse(1, "empty gain matrix"))??;
        let tasks: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
        if tasks.is_empty() {
            return Err(Error::parse(1, "gain matrix header lists no tasks"));
        }
        let mut matrix = Self::new(tasks);
        let t = matrix.tasks.len();
        let mut rows = 0;
        for (m, rec) in records.enumerate() {
            let rec = rec?;
            let line = m + 2;
            if m >= t {
                return Err(Error::parse(line, "more rows than tasks"));
            }
            if rec.len() != t + 1 {
                return Err(Error::parse(
                    line,
                    format!("expected {} fields, found {}", t + 1, rec.len()),
                ));
            }
            if rec[0] != matrix.tasks[m] {
                return Err(Error::parse(
                    line,
                    format!("row '{}' where '{}' was expected", &rec[0], matrix.tasks[m]),
                ));
            }
            for a in 0..t {
                let cell = rec[a + 1].trim();
                if cell.is_empty() {
                    continue;
                }
                if a == m {
                    return Err(Error::parse(line, "diagonal cell must be empty"));
                }
                let g: f64 = cell
                    .parse()
                    .map_err(|_| Error::parse(line, format!("bad gain '{cell}'")))?;
                if !g.is_finite() {
                    return Err(Error::parse(line, "non-finite gain"));
                }
                matrix.gains[m][a] = Some(g);
            }
            rows += 1;
        }
        if rows != t {
            return Err(Error::parse(rows + 2, format!("{rows} rows for {t} tasks")));
        }
        Ok(matrix)
    }
}

/// One multi-task run over the unordered pair `(first, second)`.
#[derive(Debug, Clone)]
pub struct PairRun {
    pub first: usize,
    pub second: usize,
    pub result: RunResult,
}

#[derive(Debug, Clone)]
pub struct GridResult {
    pub gains: GainMatrix,
    /// Indexed like the input datasets.
    pub singles: Vec<RunResult>,
    pub pairs: Vec<PairRun>,
}

enum Job {
    Single(usize),
    Pair(usize, usize),
}

enum Outcome {
    Single(RunResult),
    Pair(PairRun),
}

/// Trains every task alone and every unordered pair jointly.
///
/// Each pair is trained once; both directed gains are read off its two heads.
/// Jobs run on a pool of `jobs` threads, each with a seed derived from
/// `config.seed` and the job's identity, so results do not depend on
/// scheduling.
pub fn run_grid(
    datasets: &[Dataset],
    config: &TrainConfig,
    embeddings: Option<&EmbeddingTable>,
    jobs: usize,
) -> Result<GridResult> {
    let t = datasets.len();
    if t < 2 {
        return Err(Error::input("a grid needs at least two tasks"));
    }
    config.validate()?;
    let mut work: Vec<Job> = (0..t).map(Job::Single).collect();
    for a in 0..t {
        for b in a + 1..t {
            work.push(Job::Pair(a, b));
        }
    }
    let run = |job: &Job| -> Result<Outcome> {
        match *job {
            Job::Single(i) => {
                let cfg = config
                    .clone()
                    .with_seed(derive_seed(config.seed, 1_000 + i as u64));
                train_single(&datasets[i], &cfg, embeddings)
                    .map(Outcome::Single)
                    .map_err(|e| Error::Job {
                        job: format!("single-task run '{}'", datasets[i].name),
                        source: Box::new(e),
                    })
            }
            Job::Pair(a, b) => {
                let cfg = config
                    .clone()
                    .with_seed(derive_seed(config.seed, 1_000_000 + (a * t + b) as u64));
                train_multi(&datasets[a], &datasets[b], &cfg, embeddings)
                    .map(|result| {
                        Outcome::Pair(PairRun {
                            first: a,
                            second: b,
                            result,
                        })
                    })
                    .map_err(|e| Error::Job {
                        job: format!("pair ('{}', '{}')", datasets[a].name, datasets[b].name),
                        source: Box::new(e),
                    })
            }
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::input(format!("cannot start worker pool: {e}")))?;
    let outcomes: Vec<Result<Outcome>> = pool.install(|| work.par_iter().map(run).collect());

    let mut singles = Vec::with_capacity(t);
    let mut pairs = Vec::new();
    for o in outcomes {
        match o? {
            Outcome::Single(r) => singles.push(r),
            Outcome::Pair(p) => pairs.push(p),
        }
    }

    let mut gains = GainMatrix::new(datasets.iter().map(|d| d.name.clone()).collect());
    for p in &pairs {
        for (slot, main, aux) in [(0, p.first, p.second), (1, p.second, p.first)] {
            match relative_gain(p.result.f1[slot], singles[main].f1[0]) {
                Ok(g) => gains.set(main, aux, g),
                Err(e) => warn!(
                    "excluding pair ({}, {}): {e}",
                    datasets[main].name, datasets[aux].name
                ),
            }
        }
    }
    Ok(GridResult {
        gains,
        singles,
        pairs,
    })
}
