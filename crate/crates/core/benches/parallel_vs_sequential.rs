//! Rayon versus the sequential fallback on the three hot loops: one
//! training epoch, batch prediction and exact k-NN.

use alseg::corpus::{synth_dataset, SynthOptions};
use alseg::exec;
use alseg::learner::{predict_many, train, Example, LearnerConfig};
use alseg::reduce::knn_excluding_self;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ndarray::Array2;
use rand::Rng;
use std::hint::black_box;

const MODES: [(&str, bool); 2] = [("parallel", true), ("sequential", false)];

fn examples() -> Vec<Example> {
    let ds = synth_dataset(&SynthOptions::new(4, 8, 32, 0.1, 1)).unwrap();
    ds.samples.iter().map(Example::from_sample).collect()
}

fn bench_learner(c: &mut Criterion) {
    let ex = examples();
    let refs: Vec<&Example> = ex.iter().collect();
    let cfg = LearnerConfig::default();
    let mut group = c.benchmark_group("learner");
    group.sample_size(10);
    for (mode, on) in MODES {
        exec::set_parallel(on);
        group.bench_function(BenchmarkId::new("train_epoch", mode), |b| {
            b.iter_batched(|| cfg.init_model(), |mut m| train(&mut m, &refs, 1, &cfg).unwrap(), criterion::BatchSize::LargeInput)
        });
        let model = cfg.init_model();
        group.bench_function(BenchmarkId::new("predict_many", mode), |b| {
            b.iter(|| predict_many(black_box(&model), &refs).unwrap())
        });
    }
    group.finish();
    exec::set_parallel(true);
}

fn bench_knn(c: &mut Criterion) {
    let mut r = alseg::rng::seeded(3);
    let x = Array2::from_shape_fn((400, 32), |_| r.random::<f64>());
    let mut group = c.benchmark_group("knn");
    for (mode, on) in MODES {
        exec::set_parallel(on);
        group.bench_function(BenchmarkId::new("400x32_k15", mode), |b| b.iter(|| knn_excluding_self(black_box(&x), 15)));
    }
    group.finish();
    exec::set_parallel(true);
}

criterion_group!(benches, bench_learner, bench_knn);
criterion_main!(benches);
