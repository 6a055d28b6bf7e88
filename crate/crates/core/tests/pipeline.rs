use std::path::PathBuf;

use mtl_oracle::config::ExperimentConfig;
use mtl_oracle::data::{Split, UNK_ID};
use mtl_oracle::features::{all_pairs, compute_task_features, PAIR_FEATURES};
use mtl_oracle::meta::build_meta;
use mtl_oracle::nn::{checkpoint_to_string, parse_checkpoint};
use mtl_oracle::trainer::{run_grid, train_single};

fn config(name: &str) -> ExperimentConfig {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name);
    ExperimentConfig::load(path).unwrap()
}

#[test]
fn shipped_configs_load() {
    let desk = config("desk_synth.toml");
    assert_eq!(
        desk.task_names(),
        ["related_fine", "related_coarse", "other_fine", "other_mod"]
    );
    assert_eq!(
        desk.train_config(None, None).unwrap().single_task_batches,
        2_000
    );
    let smoke = config("smoke.toml");
    assert_eq!(
        smoke.train_config(None, None).unwrap().single_task_batches,
        400
    );
}

#[test]
fn conll_task_trains_and_checkpoints() {
    let cfg = config("smoke.toml");
    let mut train = cfg.train_config(None, None).unwrap();
    train.single_task_batches = 200;
    let chunk = cfg.load_task(cfg.task("chunk").unwrap()).unwrap();
    assert_eq!(chunk.train.len(), 40);
    assert_eq!(chunk.test.len(), 15);
    assert_eq!(chunk.default_label.as_deref(), Some("O"));

    let run = train_single(&chunk, &train, None).unwrap();
    assert!(run.f1[0] > 0.5, "chunking F1 {}", run.f1[0]);
    let samples = run.curves[0].samples();
    assert!(samples.last().unwrap().1 < samples[0].1);

    let restored = parse_checkpoint(&checkpoint_to_string(&run.model)).unwrap();
    for s in chunk.encode_with(Split::Test, &run.vocab) {
        assert!(s.tokens.iter().all(|&t| t >= UNK_ID));
        assert_eq!(
            restored.predict(0, &s.tokens).unwrap(),
            run.model.predict(0, &s.tokens).unwrap()
        );
    }
}

#[test]
fn grid_to_meta_dataset() {
    let cfg = config("smoke.toml");
    let mut train = cfg.train_config(None, None).unwrap();
    train.single_task_batches = 160;
    train.multi_task_batches = 320;
    let datasets = cfg.load_tasks().unwrap();
    let grid = run_grid(&datasets, &train, None, 1).unwrap();
    // one run per unordered pair serves both directions
    assert_eq!(grid.pairs.len(), 3);
    assert_eq!(grid.gains.defined_count(), 6);

    let table = cfg.load_embeddings(train.embedding_dim).unwrap();
    let tasks: Vec<_> = datasets
        .iter()
        .zip(&grid.singles)
        .map(|(d, r)| compute_task_features(d, &table, &r.curves[0]).unwrap())
        .collect();
    let pairs = all_pairs(&tasks);
    let meta = build_meta(&grid.gains, &pairs).unwrap();
    assert_eq!(meta.len(), grid.gains.defined_count());
    assert_eq!(meta.feature_names.len(), PAIR_FEATURES);
    for row in meta.normalized() {
        assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}
