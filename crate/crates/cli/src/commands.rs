use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use log::info;
use serde::{Deserialize, Serialize};

use mtl_oracle::config::{ExperimentConfig, Profile};
use mtl_oracle::data::{Dataset, EmbeddingTable, Vocab};
use mtl_oracle::features::{
    all_pairs, compute_task_features, write_pair_features_csv, write_task_features_csv,
    PairFeatureVector, TaskFeatures,
};
use mtl_oracle::meta::{
    build_meta, coefficient_report, coefficients_text, cross_validate, cv_report_text,
    feature_subset_search, meta_from_grid, train_logreg, write_coefficients_csv,
    write_cv_report_csv, CvOptions, FeatureMask, LogRegConfig, MetaDataset,
};
use mtl_oracle::nn::write_checkpoint;
use mtl_oracle::trainer::{
    run_grid, train_multi, train_single, GainMatrix, LossCurve, RunResult, TrainConfig,
};

use crate::{Cli, Command};

pub enum Failure {
    /// Bad invocation or missing prerequisite; exit code 2.
    Usage(String),
    /// Failure while doing the work; exit code 1.
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<mtl_oracle::Error> for Failure {
    fn from(e: mtl_oracle::Error) -> Self {
        match e {
            mtl_oracle::Error::Config(_) => Failure::Usage(e.to_string()),
            mtl_oracle::Error::File { ref source, .. }
                if matches!(**source, mtl_oracle::Error::Config(_)) =>
            {
                Failure::Usage(e.to_string())
            }
            other => Failure::Runtime(other.into()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn usage(msg: impl Display) -> Failure {
    Failure::Usage(msg.to_string())
}

/// Summary of one training run, stored as `results/<name>.json`.
#[derive(Debug, Serialize, Deserialize)]
struct RunSummary {
    tasks: Vec<String>,
    /// Test micro-F1 per task.
    f1: Vec<f64>,
    task_draws: Vec<usize>,
    total_batches: usize,
    train: TrainConfig,
}

impl RunSummary {
    fn new(run: &RunResult, train: &TrainConfig) -> Self {
        Self {
            tasks: run.tasks.clone(),
            f1: run.f1.clone(),
            task_draws: run.task_draws.clone(),
            total_batches: run.curves[0].total_batches(),
            train: train.clone(),
        }
    }
}

struct Session {
    config: ExperimentConfig,
    train: TrainConfig,
    out: PathBuf,
}

impl Session {
    fn open(cli: &Cli) -> Result<Self, Failure> {
        let path = cli
            .config
            .as_ref()
            .ok_or_else(|| usage("--config is required for this command"))?;
        if !path.is_file() {
            return Err(usage(format!("config file {} not found", path.display())));
        }
        let config = ExperimentConfig::load(path)?;
        let profile = cli
            .profile
            .as_deref()
            .map(str::parse::<Profile>)
            .transpose()?;
        let train = config.train_config(profile, cli.seed)?;
        let out = cli.out.clone().unwrap_or_else(|| config.out.clone());
        Ok(Self { config, train, out })
    }

    fn dataset(&self, name: &str) -> Result<Dataset, Failure> {
        let task = self.config.task(name).ok_or_else(|| {
            usage(format!(
                "unknown task {name:?}; available: {}",
                self.config.task_names().join(", ")
            ))
        })?;
        Ok(self.config.load_task(task)?)
    }

    fn embeddings(&self) -> Result<Option<EmbeddingTable>, Failure> {
        match &self.config.embeddings {
            Some(_) => Ok(Some(self.config.load_embeddings(self.train.embedding_dim)?)),
            None => Ok(None),
        }
    }

    /// Embedding table for the OOV feature; empty when none is configured.
    fn feature_embeddings(&self, loaded: Option<EmbeddingTable>) -> EmbeddingTable {
        loaded.unwrap_or_else(|| EmbeddingTable::empty(self.train.embedding_dim))
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> anyhow::Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> mtl_oracle::Result<()>) -> anyhow::Result<Vec<u8>> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn vocab_text(vocab: &Vocab) -> String {
    vocab.entries().map(|w| format!("{w}\n")).collect()
}

fn save_run(out: &Path, name: &str, run: &RunResult, train: &TrainConfig) -> anyhow::Result<()> {
    if run.tasks.len() == 1 {
        write_file(
            &out.join("curves").join(format!("{name}.csv")),
            run.curves[0].to_csv_string(),
        )?;
    } else {
        for (task, curve) in run.tasks.iter().zip(&run.curves) {
            let path = out
                .join("curves")
                .join("multi")
                .join(name)
                .join(format!("{task}.csv"));
            write_file(&path, curve.to_csv_string())?;
        }
    }
    let summary = serde_json::to_string_pretty(&RunSummary::new(run, train))? + "\n";
    write_file(&out.join("results").join(format!("{name}.json")), summary)?;
    let ckpt = csv_bytes(|b| write_checkpoint(&run.model, b))?;
    write_file(&out.join("checkpoints").join(format!("{name}.ckpt")), ckpt)?;
    write_file(
        &out.join("checkpoints").join(format!("{name}.vocab")),
        vocab_text(&run.vocab),
    )?;
    Ok(())
}

fn cmd_train_single(cli: &Cli, task: &str) -> Outcome {
    let s = Session::open(cli)?;
    let ds = s.dataset(task)?;
    let emb = s.embeddings()?;
    let run =
        train_single(&ds, &s.train, emb.as_ref()).with_context(|| format!("training {task}"))?;
    save_run(&s.out, task, &run, &s.train)?;
    println!(
        "{task}: test F1 {:.4} after {} batches",
        run.f1[0], s.train.single_task_batches
    );
    Ok(())
}

fn cmd_train_multi(cli: &Cli, main: &str, aux: &str) -> Outcome {
    if main == aux {
        return Err(usage("main and auxiliary task must differ"));
    }
    let s = Session::open(cli)?;
    let (m, a) = (s.dataset(main)?, s.dataset(aux)?);
    let emb = s.embeddings()?;
    let run = train_multi(&m, &a, &s.train, emb.as_ref())
        .with_context(|| format!("training {main} with {aux}"))?;
    let name = format!("{main}+{aux}");
    save_run(&s.out, &name, &run, &s.train)?;
    println!(
        "{name}: test F1 {main} {:.4}, {aux} {:.4} after {} batches",
        run.f1[0], run.f1[1], s.train.multi_task_batches
    );
    Ok(())
}

fn write_features(
    out: &Path,
    tasks: &[TaskFeatures],
    pairs: &[PairFeatureVector],
) -> anyhow::Result<()> {
    write_file(
        &out.join("task_features.csv"),
        csv_bytes(|b| write_task_features_csv(tasks, b))?,
    )?;
    write_file(
        &out.join("features.csv"),
        csv_bytes(|b| write_pair_features_csv(pairs, b))?,
    )
}

fn cmd_grid(cli: &Cli) -> Outcome {
    let s = Session::open(cli)?;
    if s.config.tasks.len() < 2 {
        return Err(usage(
            "a grid needs at least two tasks in the configuration",
        ));
    }
    let datasets = s.config.load_tasks()?;
    let emb = s.embeddings()?;
    let grid = run_grid(&datasets, &s.train, emb.as_ref(), cli.jobs).context("stage grid")?;
    for (ds, run) in datasets.iter().zip(&grid.singles) {
        save_run(&s.out, &ds.name, run, &s.train)?;
    }
    write_file(&s.out.join("gain_matrix.csv"), grid.gains.to_csv_string())?;
    info!("wrote {}", s.out.join("gain_matrix.csv").display());

    let table = s.feature_embeddings(emb);
    let (tasks, pairs, meta) =
        meta_from_grid(&datasets, &table, &grid).context("stage features")?;
    write_features(&s.out, &tasks, &pairs)?;
    write_file(&s.out.join("meta.csv"), meta.to_csv_string())?;
    println!(
        "grid: {} tasks, {} of {} directed gains defined, {} positive",
        datasets.len(),
        grid.gains.defined_count(),
        datasets.len() * (datasets.len() - 1),
        meta.positives()
    );
    Ok(())
}

fn read_file(path: &Path, hint: &str) -> Result<String, Failure> {
    if !path.is_file() {
        return Err(usage(format!("{} not found; {hint}", path.display())));
    }
    fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(Failure::Runtime)
}

fn cmd_features(cli: &Cli) -> Outcome {
    let s = Session::open(cli)?;
    let datasets = s.config.load_tasks()?;
    let table = s.feature_embeddings(s.embeddings()?);
    let hint = "run `mtl-oracle train-single <task>` or `mtl-oracle grid` first";
    let mut tasks = Vec::new();
    for ds in &datasets {
        let summary: RunSummary = serde_json::from_str(&read_file(
            &s.out.join("results").join(format!("{}.json", ds.name)),
            hint,
        )?)
        .with_context(|| format!("parsing results of {}", ds.name))?;
        let path = s.out.join("curves").join(format!("{}.csv", ds.name));
        let curve = LossCurve::parse_csv(&read_file(&path, hint)?, summary.total_batches)
            .map_err(|e| e.in_file(&path))?;
        tasks.push(compute_task_features(ds, &table, &curve)?);
    }
    let gains_path = s.out.join("gain_matrix.csv");
    let gains = if gains_path.is_file() {
        Some(
            GainMatrix::parse_csv(&read_file(&gains_path, "")?)
                .map_err(|e| e.in_file(&gains_path))?,
        )
    } else {
        None
    };
    let pairs = all_pairs(&tasks);
    write_features(&s.out, &tasks, &pairs)?;
    let meta = match gains {
        Some(g) => {
            let meta = build_meta(&g, &pairs).context("stage meta")?;
            write_file(&s.out.join("meta.csv"), meta.to_csv_string())?;
            Some(meta)
        }
        None => None,
    };
    println!(
        "features: {} tasks, {} pairs{}",
        tasks.len(),
        tasks.len() * tasks.len().saturating_sub(1),
        if meta.is_some() {
            ", meta.csv rebuilt"
        } else {
            ""
        }
    );
    Ok(())
}

fn output_dir(cli: &Cli) -> Result<PathBuf, Failure> {
    if let Some(out) = &cli.out {
        return Ok(out.clone());
    }
    match &cli.config {
        Some(_) => Ok(Session::open(cli)?.out),
        None => Ok(PathBuf::from("out")),
    }
}

fn cmd_meta(cli: &Cli, opts: CvOptions, search: Option<usize>) -> Outcome {
    let out = output_dir(cli)?;
    let path = out.join("meta.csv");
    let meta = MetaDataset::parse_csv(&read_file(&path, "run `mtl-oracle grid` first")?)
        .map_err(|e| e.in_file(&path))?;
    let mask = FeatureMask::parse(&cli.mask).map_err(usage)?;
    let cols = mask.resolve(&meta.feature_names).map_err(usage)?;
    let report = cross_validate(&meta, &mask, &opts)?;
    let text = cv_report_text(&report);
    write_file(&out.join("meta_report.txt"), &text)?;
    write_file(
        &out.join("meta_report.csv"),
        csv_bytes(|b| write_cv_report_csv(&report, b))?,
    )?;

    let masked = meta.project(&cols)?;
    let model = train_logreg(&masked.normalized(), &masked.labels(), &opts.logreg)?;
    let rows = coefficient_report(&model, &masked.feature_names)?;
    let coef_text = coefficients_text(&rows);
    write_file(&out.join("coefficients.txt"), &coef_text)?;
    write_file(
        &out.join("coefficients.csv"),
        csv_bytes(|b| write_coefficients_csv(&rows, b))?,
    )?;
    print!("{text}\n{coef_text}");

    if let Some(runs) = search {
        let search_opts = CvOptions { runs, ..opts };
        let found = feature_subset_search(&masked, &search_opts, masked.feature_names.len())?;
        let mut text = format!(
            "greedy forward selection, {runs} runs per candidate\n\nselected ({}):\n",
            found.selected.len()
        );
        for (name, acc) in found.selected.iter().zip(&found.path) {
            text += &format!("  + {name:<24} accuracy {acc:.4}\n");
        }
        text += &format!(
            "\nsubset:       accuracy {:.4}, f1_positive {:.4}\nall features: accuracy {:.4}, f1_positive {:.4}\n",
            found.report.mean_accuracy,
            found.report.mean_f1_positive,
            found.all_features.mean_accuracy,
            found.all_features.mean_f1_positive
        );
        write_file(&out.join("subset_search.txt"), &text)?;
        print!("\n{text}");
    }
    Ok(())
}

fn gain_table(gains: &GainMatrix) -> String {
    let names = gains.tasks();
    let width = names.iter().map(|n| n.len()).max().unwrap_or(4).max(8);
    let mut out = format!("{:<width$}", "main \\ aux");
    for n in names {
        out += &format!("  {n:>width$}");
    }
    out += "\n";
    for (i, main) in names.iter().enumerate() {
        out += &format!("{main:<width$}");
        for j in 0..names.len() {
            let cell = match gains.get(i, j) {
                Some(g) => format!("{g:+.2}"),
                None if i == j => "-".to_string(),
                None => "n/a".to_string(),
            };
            out += &format!("  {cell:>width$}");
        }
        out += "\n";
    }
    out
}

fn cmd_report(cli: &Cli) -> Outcome {
    let out = output_dir(cli)?;
    let gains_path = out.join("gain_matrix.csv");
    let mut found = false;
    if gains_path.is_file() {
        let gains = GainMatrix::parse_csv(&read_file(&gains_path, "")?)
            .map_err(|e| e.in_file(&gains_path))?;
        let table = gain_table(&gains);
        write_file(&out.join("gain_matrix.txt"), &table)?;
        println!("relative gain of main task F1 (%)\n\n{table}");
        found = true;
    }
    for name in ["meta_report.txt", "coefficients.txt", "subset_search.txt"] {
        let path = out.join(name);
        if path.is_file() {
            println!("{}", read_file(&path, "")?);
            found = true;
        }
    }
    if !found {
        return Err(usage(format!(
            "no results in {}; run `mtl-oracle grid` and `mtl-oracle meta` first",
            out.display()
        )));
    }
    Ok(())
}

pub fn run(cli: Cli) -> Outcome {
    match &cli.command {
        Command::TrainSingle { task } => cmd_train_single(&cli, task),
        Command::TrainMulti { main, aux } => cmd_train_multi(&cli, main, aux),
        Command::Grid => cmd_grid(&cli),
        Command::Features => cmd_features(&cli),
        Command::Meta {
            folds,
            runs,
            l2,
            search,
            search_runs,
        } => {
            let opts = CvOptions {
                folds: *folds,
                runs: *runs,
                seed: cli.seed.unwrap_or(0),
                logreg: LogRegConfig {
                    l2: *l2,
                    ..LogRegConfig::default()
                },
            };
            cmd_meta(&cli, opts, search.then_some(*search_runs))
        }
        Command::Report => cmd_report(&cli),
    }
}
