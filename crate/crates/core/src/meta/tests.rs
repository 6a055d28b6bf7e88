use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::features::{all_pairs, TaskFeatures};

fn names(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("f{i}")).collect()
}

fn record(i: usize, features: Vec<f64>, gain: f64) -> PairRecord {
    PairRecord {
        main: format!("m{i}"),
        aux: format!("a{i}"),
        features,
        gain,
        label: gain > 0.0,
    }
}

/// `n` rows of `d` features. Unless `shuffle` is set, the first five
/// columns separate the classes with a margin of 0.2 and the rest is noise;
/// with `shuffle` every column is noise and labels are fair coin flips.
fn synthetic(seed: u64, n: usize, d: usize, shuffle: bool) -> MetaDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|i| {
            let positive = if shuffle {
                rng.gen_bool(0.5)
            } else {
                i % 9 < 4
            };
            let x: Vec<f64> = (0..d)
                .map(|j| {
                    let u = rng.gen::<f64>();
                    if j < 5 && !shuffle {
                        0.4 * u + if positive { 0.6 } else { 0.0 }
                    } else {
                        u
                    }
                })
                .collect();
            record(i, x, if positive { 1.0 } else { -1.0 })
        })
        .collect();
    MetaDataset::new(names(d), rows).unwrap()
}

fn task(name: &str, base: f64) -> TaskFeatures {
    let mut v = [0.0; 14];
    for (k, x) in v.iter_mut().enumerate() {
        *x = base * (k + 1) as f64;
    }
    TaskFeatures::from_array(name, v)
}

fn gains(tasks: &[&str], values: &[f64]) -> GainMatrix {
    let mut g = GainMatrix::new(tasks.iter().map(|s| s.to_string()).collect());
    for ((i, j), &v) in g.directed_pairs().into_iter().zip(values) {
        g.set(i, j, v);
    }
    g
}

#[test]
fn build_meta_joins_and_labels() {
    let tf = vec![task("a", 1.0), task("b", 2.0), task("c", 3.0)];
    let g = gains(&["a", "b", "c"], &[-1.0, 0.0, 2.5, -3.0, 1e-9, -0.5]);
    let meta = build_meta(&g, &all_pairs(&tf)).unwrap();
    assert_eq!(meta.len(), 6);
    assert_eq!(meta.feature_names.len(), 42);
    assert_eq!(meta.labels(), vec![false, false, true, false, true, false]);
    assert_eq!(
        (meta.records[2].main.as_str(), meta.records[2].aux.as_str()),
        ("b", "a")
    );
    for row in meta.normalized() {
        assert!(row.iter().all(|v| (0.0..=1.0).contains(v)));
    }
}

#[test]
fn all_negative_gains() {
    let tf = vec![task("a", 1.0), task("b", 2.0)];
    let meta = build_meta(&gains(&["a", "b"], &[-1.0, -2.0]), &all_pairs(&tf)).unwrap();
    assert_eq!(meta.positives(), 0);
}

#[test]
fn missing_pieces_name_the_pair() {
    let tf = vec![task("a", 1.0), task("b", 2.0)];
    let mut pairs = all_pairs(&tf);
    pairs.pop();
    let err = build_meta(&gains(&["a", "b"], &[1.0, 1.0]), &pairs)
        .unwrap_err()
        .to_string();
    assert!(err.contains("b <- a"), "{err}");
    let mut g = GainMatrix::new(vec!["a".into(), "b".into()]);
    g.set(0, 1, 1.0);
    let err = build_meta(&g, &all_pairs(&tf)).unwrap_err().to_string();
    assert!(err.contains("no gain for pair b <- a"), "{err}");
}

#[test]
fn min_max_normalization() {
    let rows = [vec![2.0, 7.0], vec![6.0, 7.0], vec![4.0, 7.0]];
    let norm = Normalizer::fit(rows.iter().map(Vec::as_slice), 2);
    assert_eq!(norm.transform(&rows[2]), vec![0.5, 0.0]);
    assert_eq!(norm.transform(&[10.0, 8.0]), vec![1.0, 0.0]);
    assert_eq!(norm.transform(&[-1.0, 7.0]), vec![0.0, 0.0]);
}

#[test]
fn normalization_survives_overflowing_range() {
    let rows = [vec![-f64::MAX], vec![f64::MAX], vec![0.0]];
    let norm = Normalizer::fit(rows.iter().map(Vec::as_slice), 1);
    let out: Vec<f64> = rows.iter().flat_map(|r| norm.transform(r)).collect();
    assert_eq!(out, vec![0.0, 1.0, 0.5]);
}

#[test]
fn csv_round_trip_is_idempotent() {
    let meta = synthetic(1, 20, 4, false);
    let text = meta.to_csv_string();
    assert!(text.starts_with("main_task,aux_task,f0,f1,f2,f3,gain_pct,label\n"));
    let back = MetaDataset::parse_csv(&text).unwrap();
    assert_eq!(back.labels(), meta.labels());
    assert_eq!(back.to_csv_string(), text);
    // min-max scaling is affine, so it commutes with a second pass
    for (a, b) in back.normalized().iter().zip(meta.normalized()) {
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}

#[test]
fn csv_rejects_bad_input() {
    let bad = [
        "",
        "main,aux,f,gain_pct,label\n",
        "main_task,aux_task,f,gain_pct,label\na,b,x,1,1\n",
        "main_task,aux_task,f,gain_pct,label\na,b,1,1,2\n",
        "main_task,aux_task,f,gain_pct,label\na,b,1,-1,1\n",
        "main_task,aux_task,f,gain_pct,label\na,b,1,1\n",
        "main_task,aux_task,f,gain_pct,label\na,b,inf,1,1\n",
    ];
    for text in bad {
        assert!(MetaDataset::parse_csv(text).is_err(), "{text:?}");
    }
}

#[test]
fn masks() {
    let n = crate::features::pair_feature_names();
    assert_eq!(FeatureMask::All.resolve(&n).unwrap().len(), 42);
    let data = FeatureMask::Data.resolve(&n).unwrap();
    assert_eq!(data.len(), 21);
    assert!(data.iter().all(|&i| !n[i].starts_with("curve")));
    assert_eq!(FeatureMask::Curves.resolve(&n).unwrap().len(), 21);
    assert_eq!(
        FeatureMask::parse("jsd, size__aux")
            .unwrap()
            .resolve(&n)
            .unwrap(),
        vec![6, 14, 20, 34]
    );
    assert!(FeatureMask::parse("nope").unwrap().resolve(&n).is_err());
    assert!(FeatureMask::parse(" , ").is_err());
    assert_eq!(FeatureMask::parse("data").unwrap(), FeatureMask::Data);
}

#[test]
fn separable_meta_data_is_learned() {
    let meta = synthetic(2, 90, 42, false);
    let opts = CvOptions {
        runs: 20,
        ..CvOptions::default()
    };
    let r = cross_validate(&meta, &FeatureMask::All, &opts).unwrap();
    assert!(r.mean_accuracy >= 0.95, "{}", r.mean_accuracy);
    assert_eq!(r.runs(), 20);
    let mean: f64 = r.per_run.iter().map(|s| s.accuracy).sum::<f64>() / 20.0;
    assert!((mean - r.mean_accuracy).abs() < 1e-12);
}

#[test]
fn random_labels_score_near_chance() {
    let meta = synthetic(3, 90, 42, true);
    let opts = CvOptions {
        runs: 20,
        ..CvOptions::default()
    };
    let r = cross_validate(&meta, &FeatureMask::All, &opts).unwrap();
    assert!(
        (0.35..=0.65).contains(&r.mean_accuracy),
        "{}",
        r.mean_accuracy
    );
}

#[test]
fn single_run_is_reproducible() {
    let meta = synthetic(4, 40, 5, false);
    let opts = CvOptions {
        runs: 1,
        seed: 9,
        ..CvOptions::default()
    };
    let a = cross_validate(&meta, &FeatureMask::All, &opts).unwrap();
    let b = cross_validate(&meta, &FeatureMask::All, &opts).unwrap();
    assert_eq!(a, b);
}

#[test]
fn test_fold_never_shapes_normalization() {
    let meta = synthetic(5, 30, 3, false);
    let opts = CvOptions::default();
    let (before, folds) = cv::held_out_predictions(&meta, &opts, 0);
    let mut records = meta.records.clone();
    records[0].features = vec![1e6, -1e6, 1e6];
    let shifted = MetaDataset::new(meta.feature_names.clone(), records).unwrap();
    let (after, _) = cv::held_out_predictions(&shifted, &opts, 0);
    for i in 1..meta.len() {
        if folds[i] == folds[0] {
            assert_eq!(before[i], after[i], "row {i}");
        }
    }
}

#[test]
fn degenerate_training_folds_are_counted() {
    let mut meta = synthetic(6, 10, 2, false);
    for r in &mut meta.records {
        r.gain = -1.0;
        r.label = false;
    }
    let r = cross_validate(
        &meta,
        &FeatureMask::All,
        &CvOptions {
            runs: 2,
            ..CvOptions::default()
        },
    )
    .unwrap();
    assert_eq!(r.degenerate_folds, 10);
    assert_eq!(r.mean_accuracy, 1.0);
}

#[test]
fn cv_preconditions() {
    let meta = synthetic(7, 4, 2, false);
    assert!(cross_validate(&meta, &FeatureMask::All, &CvOptions::default()).is_err());
    let opts = CvOptions {
        folds: 1,
        ..CvOptions::default()
    };
    assert!(cross_validate(&synthetic(7, 10, 2, false), &FeatureMask::All, &opts).is_err());
}

#[test]
fn subset_search_finds_the_predictive_column() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let rows: Vec<PairRecord> = (0..60)
        .map(|i| {
            let mut x: Vec<f64> = (0..6).map(|_| rng.gen::<f64>()).collect();
            let positive = i % 2 == 0;
            x[3] = if positive {
                0.7 + 0.3 * x[3]
            } else {
                0.3 * x[3]
            };
            record(i, x, if positive { 1.0 } else { -1.0 })
        })
        .collect();
    let meta = MetaDataset::new(names(6), rows).unwrap();
    let opts = CvOptions {
        runs: 3,
        ..CvOptions::default()
    };
    let s = feature_subset_search(&meta, &opts, 6).unwrap();
    assert_eq!(s.selected[0], "f3");
    // a perfect first pick leaves nothing to improve
    assert_eq!(s.selected.len(), 1);
    assert_eq!(s.report.mean_accuracy, 1.0);
    assert_eq!(s.path, vec![1.0]);
    assert_eq!(s.all_features.features.len(), 6);
}

#[test]
fn projection_keeps_rows() {
    let meta = synthetic(10, 12, 6, false);
    let p = meta.project(&[4, 1]).unwrap();
    assert_eq!(p.feature_names, vec!["f4", "f1"]);
    assert_eq!(
        p.records[3].features,
        vec![meta.records[3].features[4], meta.records[3].features[1]]
    );
    assert_eq!(p.labels(), meta.labels());
    assert!(meta.project(&[6]).is_err());
}
