//! Sequential vs. pooled execution of the Monte Carlo workloads.
//!
//! With the `parallel` feature disabled both variants run on one thread.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use duopoly_core::dynamics::{simulate_stochastic, LearnConfig};
use duopoly_core::experiments::{estimate_selection, phase_sweep, SweepMode};
use duopoly_core::market::GameParams;
use duopoly_core::pool::Workers;
use duopoly_core::rng::RngStream;
use std::hint::black_box;

fn config() -> LearnConfig {
    LearnConfig::new(GameParams::new(1.5).unwrap(), 0.85).with_horizon(5_000)
}

fn single_trajectory(c: &mut Criterion) {
    let mut group = c.benchmark_group("trajectory");
    for b in [1usize, 16, 64] {
        let cfg = config().with_batch_size(b);
        group.bench_with_input(BenchmarkId::from_parameter(b), &cfg, |bench, cfg| {
            bench.iter(|| {
                let mut rng = RngStream::new(1, 0);
                black_box(simulate_stochastic(0.5, cfg, &mut rng).unwrap())
            })
        });
    }
    group.finish();
}

fn selection(c: &mut Criterion) {
    let cfg = config().with_batch_size(16);
    let mut group = c.benchmark_group("selection_64_reps");
    for (name, workers) in [("sequential", Workers::SEQUENTIAL), ("parallel", Workers::all())] {
        group.bench_function(name, |bench| {
            bench.iter(|| black_box(estimate_selection(0.5, &cfg, 64, 7, workers).unwrap()))
        });
    }
    group.finish();
}

fn sweep(c: &mut Criterion) {
    let rho: Vec<f64> = (0..20).map(|i| 0.55 + 0.02 * i as f64).collect();
    let theta0: Vec<f64> = (1..20).map(|i| 0.05 * i as f64).collect();
    let cfg = config().with_horizon(20_000);
    let mut group = c.benchmark_group("deterministic_sweep");
    for (name, workers) in [("sequential", Workers::SEQUENTIAL), ("parallel", Workers::all())] {
        group.bench_function(name, |bench| {
            bench.iter(|| {
                black_box(phase_sweep(1.5, &rho, &theta0, SweepMode::Deterministic, &cfg, 0, workers).unwrap())
            })
        });
    }
    group.finish();
}

criterion_group!(
    name = benches;
    config = Criterion::default().sample_size(10);
    targets = single_trajectory, selection, sweep
);
criterion_main!(benches);
