use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use rfdfar_core::channel::{DatasetConfig, GestureEnvelopeSpec};
use rfdfar_core::cv::kfold_cv;
use rfdfar_core::eval::{dataset_table, run_sweep_with, SweepSpec};
use rfdfar_core::features::FeatureKind;
use rfdfar_core::knn::Weighting;
use rfdfar_core::preprocess::PreprocessConfig;
use rfdfar_core::{Exec, GestureLabel, SnrDb};

const MODES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn dataset(exec: Exec) -> DatasetConfig {
    let gestures = [GestureLabel::HandsDown, GestureLabel::HandsUp, GestureLabel::Clapping];
    let mut cfg = DatasetConfig::new(
        gestures.iter().map(|&g| GestureEnvelopeSpec::preset(g)).collect(),
        SnrDb::new(22.0).unwrap(),
        42,
    );
    cfg.subjects = 2;
    cfg.repetitions = 2;
    cfg.duration = 0.25;
    cfg.exec = exec;
    cfg
}

fn pre() -> PreprocessConfig {
    PreprocessConfig { levels: 10, smooth_len: 101, detect_amplitude: true }
}

fn features(c: &mut Criterion) {
    let mut g = c.benchmark_group("dataset_table");
    g.sample_size(10);
    for (name, exec) in MODES {
        let cfg = dataset(exec);
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| dataset_table(&cfg, &pre(), 10_000, &FeatureKind::ALL).unwrap())
        });
    }
    g.finish();
}

fn kfold(c: &mut Criterion) {
    let table = dataset_table(&dataset(Exec::default()), &pre(), 1_000, &FeatureKind::ALL).unwrap();
    let mut g = c.benchmark_group("kfold_cv");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| kfold_cv(&table, 10, 6, Weighting::InverseDistance, 1, exec).unwrap())
        });
    }
    g.finish();
}

fn sweep(c: &mut Criterion) {
    let spec = SweepSpec {
        snr_grid: vec![42.0, 12.0],
        subjects: 2,
        repetitions: 2,
        duration_s: 0.2,
        window_size: 10_000,
        levels: 10,
        smooth_len: 101,
        folds: 4,
        ..SweepSpec::default()
    };
    let mut g = c.benchmark_group("sweep");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| run_sweep_with(&spec, exec).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, features, kfold, sweep);
criterion_main!(benches);
