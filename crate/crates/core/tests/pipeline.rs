use proptest::prelude::*;

use rfdfar_core::channel::{generate_dataset_with, DatasetConfig, GestureEnvelopeSpec};
use rfdfar_core::cv::{kfold_cv, loso_cv, metrics};
use rfdfar_core::eval::dataset_table;
use rfdfar_core::features::{FeatureKind, FeatureTable};
use rfdfar_core::knn::{fit, KnnModel, Weighting};
use rfdfar_core::preprocess::PreprocessConfig;
use rfdfar_core::trace::{read_trace, write_trace, TraceFormat};
use rfdfar_core::{Exec, GestureLabel, SnrDb, Trace};

fn small(exec: Exec, seed: u64) -> DatasetConfig {
    let gestures = [GestureLabel::HandsDown, GestureLabel::HandsUp];
    let mut cfg = DatasetConfig::new(
        gestures.iter().map(|&g| GestureEnvelopeSpec::preset(g)).collect(),
        SnrDb::new(22.0).unwrap(),
        seed,
    );
    cfg.subjects = 3;
    cfg.repetitions = 2;
    cfg.duration = 0.1;
    cfg.subject_spread = 0.15;
    cfg.exec = exec;
    cfg
}

fn pre() -> PreprocessConfig {
    PreprocessConfig { levels: 8, smooth_len: 51, detect_amplitude: true }
}

#[test]
fn sequential_and_parallel_agree() {
    let cols = FeatureKind::ALL.to_vec();
    let a = dataset_table(&small(Exec::Sequential, 5), &pre(), 5_000, &cols).unwrap();
    let b = dataset_table(&small(Exec::Parallel, 5), &pre(), 5_000, &cols).unwrap();
    assert_eq!(a, b);
    let ka = kfold_cv(&a, 5, 3, Weighting::InverseDistance, 1, Exec::Sequential).unwrap();
    let kb = kfold_cv(&a, 5, 3, Weighting::InverseDistance, 1, Exec::Parallel).unwrap();
    assert_eq!(ka, kb);
    let la = loso_cv(&a, 3, Weighting::Uniform, Exec::Sequential).unwrap();
    let lb = loso_cv(&a, 3, Weighting::Uniform, Exec::Parallel).unwrap();
    assert_eq!(la.per_subject, lb.per_subject);
    assert_eq!(la.pooled, lb.pooled);
}

#[test]
fn traces_round_trip_through_both_formats() {
    let dir = tempfile::tempdir().unwrap();
    let traces = generate_dataset_with(&small(Exec::Sequential, 6)).unwrap();
    let t = &traces[1];
    let csv = dir.path().join("t.csv");
    write_trace(t, &csv, TraceFormat::Csv).unwrap();
    let back = read_trace(&csv).unwrap();
    assert_eq!(back.samples(), t.samples());
    assert_eq!(back.meta, t.meta);

    let bin = dir.path().join("t.bin");
    write_trace(t, &bin, TraceFormat::Binary).unwrap();
    let back = read_trace(&bin).unwrap();
    assert_eq!(back.len(), t.len());
    assert_eq!(back.meta.gesture, t.meta.gesture);
    for (a, b) in back.samples().iter().zip(t.samples()) {
        assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0));
    }
}

#[test]
fn saved_model_predicts_like_the_original() {
    let dir = tempfile::tempdir().unwrap();
    let table = dataset_table(&small(Exec::default(), 7), &pre(), 5_000, &FeatureKind::ALL).unwrap();
    let path = dir.path().join("t.csv");
    table.save(&path).unwrap();
    let loaded = FeatureTable::load(&path).unwrap();
    assert_eq!(loaded, table);

    let model = fit(&table, 4, Weighting::InverseDistance).unwrap();
    let mpath = dir.path().join("m.rfm");
    model.save(&mpath).unwrap();
    let back = KnnModel::load(&mpath).unwrap();
    assert_eq!(model.predict_table(&table).unwrap(), back.predict_table(&table).unwrap());
}

#[test]
fn clean_separable_data_is_classified_well() {
    let mut cfg = small(Exec::default(), 8);
    cfg.snr = SnrDb::new(59.0).unwrap();
    let table = dataset_table(&cfg, &pre(), 5_000, &FeatureKind::DEFAULT).unwrap();
    let cm = kfold_cv(&table, 5, 3, Weighting::InverseDistance, 2, Exec::default()).unwrap();
    assert_eq!(cm.total(), table.len() as u64);
    assert!(metrics(&cm).unwrap().accuracy > 0.9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn csv_round_trip_is_exact(samples in prop::collection::vec(-1e6f64..1e6, 1..200), rate in 1.0f64..1e7) {
        let dir = tempfile::tempdir().unwrap();
        let t = Trace::new(samples, rate).unwrap();
        let p = dir.path().join("x.csv");
        write_trace(&t, &p, TraceFormat::Csv).unwrap();
        let back = read_trace(&p).unwrap();
        prop_assert_eq!(back.samples(), t.samples());
        prop_assert_eq!(back.sample_rate(), rate);
    }

    #[test]
    fn every_row_lands_in_the_confusion_matrix(seed in 0u64..1000, folds in 2usize..6) {
        let table = dataset_table(&small(Exec::Sequential, seed), &pre(), 10_000, &FeatureKind::DEFAULT).unwrap();
        let cm = kfold_cv(&table, folds, 1, Weighting::Uniform, seed, Exec::Sequential).unwrap();
        prop_assert_eq!(cm.total(), table.len() as u64);
    }
}
