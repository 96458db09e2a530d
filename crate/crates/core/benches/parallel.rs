//! Sequential vs parallel execution of the chunked workloads.
//!
//! Without the `parallel` feature both variants run sequentially, which
//! makes the overhead of the dispatch layer itself visible.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spherint::asymptote::rank_one_limit_grid;
use spherint::exec::Execution;
use spherint::measure::AtomicMeasure;
use spherint::montecarlo::{additivity_experiment, mc_log_integral, Eigensolver, FreeConvConfig, McConfig, Method};
use spherint::ToleranceConfig;

const MODES: [Execution; 2] = [Execution::Sequential, Execution::Parallel];

fn label(exec: Execution) -> &'static str {
    match exec {
        Execution::Sequential => "sequential",
        Execution::Parallel => "parallel",
    }
}

fn monte_carlo(c: &mut Criterion) {
    let spec = AtomicMeasure::semicircle_grid(400).unwrap().quantile_discretize(400).unwrap();
    let mut group = c.benchmark_group("mc_log_integral");
    for exec in MODES {
        let cfg = McConfig::new(200_000, 1).with_method(Method::Tilted).with_chunks(16).with_exec(exec);
        group.bench_function(BenchmarkId::from_parameter(label(exec)), |b| {
            b.iter(|| mc_log_integral(black_box(&spec), 0.3, &cfg).unwrap())
        });
    }
    group.finish();
}

fn free_convolution(c: &mut Criterion) {
    let mu = AtomicMeasure::bernoulli(-1.0, 1.0, 0.5).unwrap();
    let mut group = c.benchmark_group("additivity_experiment");
    group.sample_size(10);
    for exec in MODES {
        let cfg = FreeConvConfig::new(200, 8, 1).with_solver(Eigensolver::Householder).with_exec(exec);
        group.bench_function(BenchmarkId::from_parameter(label(exec)), |b| {
            b.iter(|| additivity_experiment(&mu, &mu, &[0.1], &[0.3], black_box(&cfg)).unwrap())
        });
    }
    group.finish();
}

fn limit_grid(c: &mut Criterion) {
    let mu = AtomicMeasure::semicircle_grid(2000).unwrap();
    let thetas: Vec<f64> = (0..400).map(|i| -1.0 + 2.0 * i as f64 / 399.0).collect();
    let tol = ToleranceConfig::default();
    let mut group = c.benchmark_group("rank_one_limit_grid");
    for exec in MODES {
        group.bench_function(BenchmarkId::from_parameter(label(exec)), |b| {
            b.iter(|| rank_one_limit_grid(&mu, black_box(&thetas), 1, &tol, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, monte_carlo, free_convolution, limit_grid);
criterion_main!(benches);
