use super::*;
use crate::data::{generate_synth, LabelMap, SynthSpec};

fn synth(label_map: LabelMap, seeds: (u64, u64), ambiguity: f64, train: usize) -> Dataset {
    let spec = SynthSpec {
        num_states: 4,
        vocab_size: 24,
        sentence_length: (3, 7),
        train_sentences: train,
        dev_sentences: 0,
        test_sentences: 60,
        label_map,
        transition_seed: seeds.0,
        emission_seed: seeds.1,
        ambiguity,
    };
    generate_synth(&spec).unwrap()
}

fn small_config(batches: usize) -> TrainConfig {
    TrainConfig {
        batch_size: 8,
        single_task_batches: batches,
        multi_task_batches: 2 * batches,
        curve_sample_every: 10,
        seed: 3,
        embedding_dim: 8,
        hidden_dim: 8,
        hidden_per_direction: false,
        optimizer: Adadelta::default(),
    }
}

#[test]
fn learnable_task_reaches_high_f1_at_desk_scale() {
    let d = synth(LabelMap::Identity, (5, 6), 0.0, 200).with_default_label(Some("S0".into()));
    let r = train_single(&d, &TrainConfig::desk(), None).unwrap();
    assert!(r.f1[0] >= 0.9, "F1 {}", r.f1[0]);
    let c = &r.curves[0];
    assert_eq!(c.len(), 100);
    assert!(c.samples().last().unwrap().1 < c.samples()[0].1);
}

#[test]
fn zero_batches_give_empty_curve_and_untrained_score() {
    let d = synth(LabelMap::Identity, (1, 2), 0.2, 30);
    let cfg = small_config(0);
    let r = train_single(&d, &cfg, None).unwrap();
    assert!(r.curves[0].is_empty());
    let test = d.encode(Split::Test);
    let untrained = evaluate(&r.model, 0, &test, None, "t").unwrap();
    assert_eq!(r.f1[0], untrained);

    let m = train_multi(&d, &d, &cfg, None).unwrap();
    assert!(m.curves.iter().all(LossCurve::is_empty));
    assert_eq!(m.f1[0], evaluate(&m.model, 0, &test, None, "t").unwrap());
    assert_eq!(m.f1[1], evaluate(&m.model, 1, &test, None, "t").unwrap());
}

#[test]
fn same_seed_same_run() {
    let d = synth(LabelMap::Modulo { labels: 2 }, (1, 2), 0.2, 30);
    let cfg = small_config(60);
    let a = train_single(&d, &cfg, None).unwrap();
    let b = train_single(&d, &cfg, None).unwrap();
    assert_eq!(a.curves, b.curves);
    assert_eq!(a.f1, b.f1);
    let c = train_single(&d, &cfg.clone().with_seed(4), None).unwrap();
    assert_ne!(a.curves, c.curves);
}

#[test]
fn curve_invariants() {
    let d = synth(LabelMap::Identity, (1, 2), 0.2, 30);
    let r = train_multi(
        &d,
        &synth(LabelMap::Identity, (8, 9), 0.2, 30),
        &small_config(45),
        None,
    )
    .unwrap();
    for c in &r.curves {
        assert_eq!(c.total_batches(), 90);
        assert!(c.samples().windows(2).all(|w| w[0].0 < w[1].0));
        assert!(c
            .samples()
            .iter()
            .all(|s| s.1.is_finite() && s.1 >= 0.0 && s.0 % 10 == 0));
    }
    assert_eq!(r.task_draws.iter().sum::<usize>(), 90);
}

#[test]
fn task_draws_are_fair() {
    // Tiny model, one-token sentences: only the draw statistics matter here.
    let one = |label: &str| crate::data::Sentence {
        tokens: vec!["a".into()],
        labels: vec![label.into()],
    };
    let d = Dataset::new("tiny", vec![one("X"), one("Y")], vec![], vec![one("X")]).unwrap();
    let cfg = TrainConfig {
        batch_size: 1,
        single_task_batches: 25_000,
        multi_task_batches: 50_000,
        curve_sample_every: 1_000,
        seed: 17,
        embedding_dim: 1,
        hidden_dim: 2,
        hidden_per_direction: false,
        optimizer: Adadelta::default(),
    };
    let r = train_multi(&d, &d, &cfg, None).unwrap();
    // Binomial(50000, 1/2): sd ≈ 112, so ±500 is well beyond 3σ.
    for &n in &r.task_draws {
        assert!((24_500..=25_500).contains(&n), "{:?}", r.task_draws);
    }
}

#[test]
fn self_pairing_matches_single_task_training() {
    let d = synth(LabelMap::Identity, (11, 12), 0.3, 60).with_default_label(Some("S0".into()));
    let mut single = Vec::new();
    let mut multi = Vec::new();
    for seed in 0..5 {
        let cfg = small_config(150).with_seed(seed);
        single.push(train_single(&d, &cfg, None).unwrap().f1[0]);
        let m = train_multi(&d, &d, &cfg, None).unwrap();
        multi.push(m.f1[0]);
        multi.push(m.f1[1]);
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let sd = |v: &[f64]| {
        let m = mean(v);
        (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt()
    };
    let diff = (mean(&single) - mean(&multi)).abs();
    let noise = 3.0 * (sd(&single).powi(2) / 5.0 + sd(&multi).powi(2) / 10.0).sqrt();
    assert!(diff <= noise.max(0.02), "single {single:?} multi {multi:?}");
}

#[test]
fn grid_counts() {
    let ds: Vec<Dataset> = (0..3)
        .map(|i| synth(LabelMap::Identity, (i, i + 10), 0.2, 20).with_name(format!("t{i}")))
        .collect();
    let cfg = small_config(20);
    let g = run_grid(&ds[..2], &cfg, None, 2).unwrap();
    assert_eq!(g.singles.len(), 2);
    assert_eq!(g.pairs.len(), 1);
    assert_eq!(g.gains.directed_pairs().len(), 2);

    let g3 = run_grid(&ds, &cfg, None, 1).unwrap();
    assert_eq!(g3.pairs.len(), 3);
    assert_eq!(g3.gains.directed_pairs().len(), 6);
    assert_eq!(g3.gains.defined_count(), 6);
    let again = run_grid(&ds, &cfg, None, 3).unwrap();
    assert_eq!(g3.gains, again.gains);

    let back = GainMatrix::parse_csv(&g3.gains.to_csv_string()).unwrap();
    assert_eq!(back, g3.gains);
    assert!(run_grid(&ds[..1], &cfg, None, 1).is_err());
}

#[test]
fn gain_matrix_csv_layout() {
    let mut g = GainMatrix::new(vec!["a".into(), "b".into()]);
    g.set(0, 1, 5.0);
    g.set(1, 0, -2.5);
    assert_eq!(g.to_csv_string(), "main,a,b\na,,5\nb,-2.5,\n");
    assert!(GainMatrix::parse_csv("main,a,b\na,1,5\nb,-2.5,\n").is_err());
    assert!(GainMatrix::parse_csv("main,a,b\nb,,5\na,-2.5,\n").is_err());
    assert!(GainMatrix::parse_csv("main,a,b\na,,5\n").is_err());
    assert!(GainMatrix::parse_csv("").is_err());
}

#[test]
fn pretrained_rows_are_copied() {
    let d = synth(LabelMap::Identity, (1, 2), 0.2, 20);
    let table =
        crate::data::parse_embeddings("w0 1 2 3 4 5 6 7 8\nw1 8 7 6 5 4 3 2 1\n", 8).unwrap();
    let r = train_single(&d, &small_config(0), Some(&table)).unwrap();
    let id = r.vocab.token_id("w0");
    if id != crate::data::UNK_ID {
        let e = &r.model.body.embeddings.values()[id * 8..(id + 1) * 8];
        assert_eq!(e, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
    }
    let wrong = crate::data::parse_embeddings("w0 1 2\n", 2).unwrap();
    assert!(train_single(&d, &small_config(0), Some(&wrong)).is_err());
}
