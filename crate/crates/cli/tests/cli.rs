use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn synth_task(name: &str, map: &str, seeds: (u64, u64)) -> String {
    format!(
        r#"
[[task]]
name = "{name}"
[task.synth]
num_states = 4
vocab_size = 20
sentence_length = [3, 6]
train_sentences = 20
dev_sentences = 0
test_sentences = 15
label_map = {map}
transition_seed = {}
emission_seed = {}
"#,
        seeds.0, seeds.1
    )
}

/// Three tiny tasks and a training budget of a few dozen batches.
fn setup() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let mut text = String::from(
        "seed = 3\nout = \"out\"\n\n[train]\nbatch_size = 4\nsingle_task_batches = 60\nmulti_task_batches = 120\ncurve_sample_every = 5\nembedding_dim = 4\nhidden_dim = 6\n",
    );
    text += &synth_task("alpha", "{ kind = \"identity\" }", (1, 2));
    text += &synth_task("beta", "{ kind = \"modulo\", labels = 2 }", (1, 2));
    text += &synth_task("gamma", "{ kind = \"blocks\", labels = 2 }", (5, 6));
    let path = dir.path().join("exp.toml");
    fs::write(&path, text).unwrap();
    (dir, path)
}

fn run(config: Option<&Path>, args: &[&str]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_mtl-oracle"));
    if let Some(c) = config {
        cmd.arg("--config").arg(c);
    }
    cmd.args(args)
        .env("MTL_ORACLE_LOG", "error")
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn read(path: PathBuf) -> String {
    fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn train_single_writes_artifacts_reproducibly() {
    let (dir, cfg) = setup();
    let out = dir.path().join("out");
    let stdout = ok(&run(Some(&cfg), &["train-single", "alpha"]));
    assert!(stdout.starts_with("alpha: test F1 "), "{stdout}");
    let curve = read(out.join("curves/alpha.csv"));
    assert!(curve.starts_with("batch_index,loss\n5,"));
    assert_eq!(curve.lines().count(), 13);
    let summary: serde_json::Value =
        serde_json::from_str(&read(out.join("results/alpha.json"))).unwrap();
    assert_eq!(summary["total_batches"], 60);
    assert_eq!(summary["tasks"][0], "alpha");
    assert!(out.join("checkpoints/alpha.ckpt").is_file());
    assert!(read(out.join("checkpoints/alpha.vocab")).lines().count() > 5);

    ok(&run(Some(&cfg), &["train-single", "alpha"]));
    assert_eq!(read(out.join("curves/alpha.csv")), curve);
    // a different seed changes the run
    ok(&run(Some(&cfg), &["train-single", "alpha", "--seed", "4"]));
    assert_ne!(read(out.join("curves/alpha.csv")), curve);
}

#[test]
fn unknown_task_is_a_usage_error() {
    let (_dir, cfg) = setup();
    let out = run(Some(&cfg), &["train-single", "delta"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("alpha, beta, gamma"), "{err}");
}

#[test]
fn usage_errors_exit_with_two() {
    let (dir, cfg) = setup();
    assert_eq!(run(None, &["grid"]).status.code(), Some(2));
    assert_eq!(
        run(Some(&dir.path().join("nope.toml")), &["grid"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(Some(&cfg), &["bogus"]).status.code(), Some(2));
    assert_eq!(
        run(Some(&cfg), &["grid", "--profile", "huge"])
            .status
            .code(),
        Some(2)
    );
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "[[task]]\nname = \"x\"\n").unwrap();
    assert_eq!(run(Some(&bad), &["grid"]).status.code(), Some(2));
    let out = run(None, &["meta", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("mtl-oracle grid"));
    assert_eq!(
        run(None, &["report", "--out", dir.path().to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(Some(&cfg), &["features"]).status.code(), Some(2));
}

#[test]
fn train_multi_writes_both_heads() {
    let (dir, cfg) = setup();
    let stdout = ok(&run(Some(&cfg), &["train-multi", "alpha", "gamma"]));
    assert!(
        stdout.starts_with("alpha+gamma: test F1 alpha "),
        "{stdout}"
    );
    let out = dir.path().join("out");
    assert!(out.join("curves/multi/alpha+gamma/alpha.csv").is_file());
    assert!(out.join("curves/multi/alpha+gamma/gamma.csv").is_file());
    let summary: serde_json::Value =
        serde_json::from_str(&read(out.join("results/alpha+gamma.json"))).unwrap();
    assert_eq!(summary["f1"].as_array().unwrap().len(), 2);
    assert_eq!(
        run(Some(&cfg), &["train-multi", "alpha", "alpha"])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn grid_features_meta_report() {
    let (dir, cfg) = setup();
    let out = dir.path().join("out");
    let stdout = ok(&run(Some(&cfg), &["grid"]));
    assert!(stdout.contains("6 of 6 directed gains defined"), "{stdout}");

    let gains = read(out.join("gain_matrix.csv"));
    assert!(gains.starts_with("main,alpha,beta,gamma\nalpha,,"));
    let meta = read(out.join("meta.csv"));
    assert_eq!(meta.lines().count(), 7);
    assert_eq!(meta.lines().next().unwrap().split(',').count(), 46);
    let features = read(out.join("features.csv"));
    let task_features = read(out.join("task_features.csv"));
    assert_eq!(task_features.lines().count(), 4);

    // rerun and recompute are byte-identical
    ok(&run(Some(&cfg), &["grid"]));
    assert_eq!(read(out.join("gain_matrix.csv")), gains);
    assert_eq!(read(out.join("meta.csv")), meta);
    ok(&run(Some(&cfg), &["features"]));
    assert_eq!(read(out.join("features.csv")), features);
    assert_eq!(read(out.join("meta.csv")), meta);

    let stdout = ok(&run(Some(&cfg), &["meta", "--runs", "3"]));
    assert!(stdout.contains("majority baseline"), "{stdout}");
    assert_eq!(read(out.join("coefficients.csv")).lines().count(), 43);
    assert_eq!(read(out.join("meta_report.csv")).lines().count(), 1 + 3 + 2);
    assert!(read(out.join("meta_report.txt")).contains("3 runs of 5-fold CV on 42 features"));

    ok(&run(Some(&cfg), &["meta", "--runs", "3", "--mask", "data"]));
    assert_eq!(read(out.join("coefficients.csv")).lines().count(), 22);
    let coef = read(out.join("coefficients.csv"));
    assert!(!coef.contains("curve_"));
    assert_eq!(
        run(Some(&cfg), &["meta", "--mask", "nonsense"])
            .status
            .code(),
        Some(2)
    );

    ok(&run(
        Some(&cfg),
        &[
            "meta",
            "--runs",
            "2",
            "--mask",
            "jsd,size",
            "--search",
            "--search-runs",
            "1",
        ],
    ));
    assert!(read(out.join("subset_search.txt")).contains("all features:"));

    let stdout = ok(&run(None, &["report", "--out", out.to_str().unwrap()]));
    assert!(stdout.contains("main \\ aux"), "{stdout}");
    assert!(stdout.contains("majority baseline"));
    assert!(out.join("gain_matrix.txt").is_file());
}
