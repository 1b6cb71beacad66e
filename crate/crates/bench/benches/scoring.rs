use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use crps_core::simulation::{simulate, ForecasterKind, Model};
use crps_core::verification::{cvm_log_pvalue, cvm_statistic, score_series};
use crps_core::{crps_closed, crps_quadrature, wcrps_quantile, Distribution, GpTail, WeightFunction};

fn closed_vs_quadrature(c: &mut Criterion) {
    let laws = [
        ("normal", Distribution::normal(0.0, 1.0).unwrap()),
        ("exponential", Distribution::exponential(1.0).unwrap()),
        ("gp", Distribution::gp(1.0, 0.25).unwrap()),
    ];
    let mut g = c.benchmark_group("crps");
    for (name, d) in &laws {
        g.bench_with_input(BenchmarkId::new("closed", name), d, |b, d| {
            b.iter(|| crps_closed(d, black_box(1.3)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("quadrature", name), d, |b, d| {
            b.iter(|| crps_quadrature(d, black_box(1.3), &WeightFunction::Unit).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("quantile_weighted", name), d, |b, d| {
            b.iter(|| wcrps_quantile(d, black_box(1.3), 0.8).unwrap())
        });
    }
    g.finish();
}

fn simulation_and_scoring(c: &mut Criterion) {
    let mut g = c.benchmark_group("pipeline");
    g.sample_size(20);
    g.bench_function("simulate_ge_1e4", |b| {
        b.iter(|| simulate(Model::Ge, ForecasterKind::Unfocused, 10_000, black_box(3)).unwrap())
    });
    let recs = simulate(Model::Ge, ForecasterKind::Ideal, 10_000, 3).unwrap();
    g.bench_function("score_ge_1e4", |b| b.iter(|| score_series(black_box(&recs)).unwrap()));
    g.finish();
}

fn cramer_von_mises(c: &mut Criterion) {
    let tail = GpTail::new(1.0, 0.25, 0.0).unwrap();
    let d = tail.to_distribution();
    let values: Vec<f64> = (1..=10_000).map(|i| d.quantile(i as f64 / 10_001.0).unwrap()).collect();
    c.bench_function("cvm_statistic_1e4", |b| b.iter(|| cvm_statistic(black_box(&values), &tail).unwrap()));
    for t in [0.05, 0.5, 5.0, 500.0] {
        c.bench_with_input(BenchmarkId::new("cvm_log_pvalue", t), &t, |b, &t| b.iter(|| cvm_log_pvalue(black_box(t))));
    }
}

criterion_group!(benches, closed_vs_quadrature, simulation_and_scoring, cramer_von_mises);
criterion_main!(benches);
