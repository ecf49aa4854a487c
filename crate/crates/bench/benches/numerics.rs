use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use dcproc_core::fit::{cvm_test, Bootstrap, Model};
use dcproc_core::model::{dist_c_tilde, g_p_numeric, g_p_pareto, predict, PredictConfig};
use dcproc_core::proc::{hurwitz_zeta, DistSpec, RandomStream};
use dcproc_core::sched::DutyCycleSpec;
use dcproc_core::sim::{filter_full, filter_negligible, SimConfig};

fn zeta(c: &mut Criterion) {
    c.bench_function("hurwitz_zeta s=2.5 a=10", |b| {
        b.iter(|| hurwitz_zeta(black_box(2.5), black_box(10.0)))
    });
    c.bench_function("g_p pareto closed form", |b| {
        b.iter(|| g_p_pareto(black_box(1.5), black_box(1000.0), 20.0, 100.0))
    });
}

fn series(c: &mut Criterion) {
    let heavy = DistSpec::pareto(1.2, 100.0);
    c.bench_function("g_p numeric pareto 1.2", |b| {
        b.iter(|| g_p_numeric(black_box(&heavy), 20.0, 100.0))
    });
    let exp = DistSpec::exponential(0.001);
    c.bench_function("g_p numeric exponential", |b| {
        b.iter(|| g_p_numeric(black_box(&exp), 20.0, 100.0))
    });
}

fn model(c: &mut Criterion) {
    let dc = DutyCycleSpec::deterministic(20.0, 100.0).unwrap();
    let mut cfg = PredictConfig::new(
        Some(DistSpec::exponential(0.001)),
        Some(DistSpec::exponential(0.02)),
        dc,
    );
    cfg.sampler.budget = 100_000;
    let mut g = c.benchmark_group("model");
    g.sample_size(10);
    g.bench_function("c_tilde mixture", |b| {
        b.iter(|| dist_c_tilde(black_box(&DistSpec::exponential(0.02)), 20.0, 100.0))
    });
    g.bench_function("predict full contacts", |b| {
        b.iter(|| predict(black_box(&cfg)))
    });
    g.finish();
}

fn simulate(c: &mut Criterion) {
    let dc = DutyCycleSpec::deterministic(20.0, 100.0).unwrap();
    let s = DistSpec::exponential(0.001);
    let mut g = c.benchmark_group("simulate");
    g.sample_size(10);
    g.bench_function("negligible 1e5", |b| {
        b.iter(|| {
            filter_negligible(
                &s,
                &dc,
                &SimConfig::negligible(100_000),
                RandomStream::new(1),
            )
        })
    });
    g.bench_function("full 1e4", |b| {
        b.iter(|| {
            filter_full(
                &s,
                &DistSpec::exponential(0.02),
                &dc,
                &SimConfig::full(10_000),
                RandomStream::new(2),
            )
        })
    });
    g.finish();
}

fn fit(c: &mut Criterion) {
    let d = DistSpec::pareto(1.9, 245.0).build().unwrap();
    let mut rng = RandomStream::new(3).rng();
    let xs: Vec<f64> = (0..1000).map(|_| d.sample(&mut rng)).collect();
    let mut g = c.benchmark_group("fit");
    g.sample_size(10);
    g.bench_function("pareto mle n=1000", |b| {
        b.iter(|| Model::Pareto.fit(black_box(&xs)))
    });
    let exp = Model::Exponential.fit(&xs).unwrap();
    g.bench_function("cvm bootstrap 500", |b| {
        b.iter(|| cvm_test(&xs, &exp, 0.01, Bootstrap::new(500, 4)))
    });
    g.finish();
}

criterion_group!(benches, zeta, series, model, simulate, fit);
criterion_main!(benches);
