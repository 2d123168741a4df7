use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use eps_select::eps::{decompose, DecompositionConfig};
use eps_select::models;
use eps_select::search::count_all;
use eps_select::selection::{pss_on_decomposition, PssConfig};
use eps_select::strategy::StrategyId;

fn count(c: &mut Criterion) {
    let m = models::nqueens(8);
    let mut g = c.benchmark_group("count_nqueens8");
    for s in [
        StrategyId::FirstFail,
        StrategyId::DomOverWdeg,
        StrategyId::Activity,
    ] {
        g.bench_function(s.token(), |b| {
            b.iter(|| count_all(black_box(&m), s).unwrap())
        });
    }
    g.finish();
}

fn decomposition(c: &mut Criterion) {
    let m = models::allinterval(9);
    c.bench_function("decompose_allinterval9_500", |b| {
        b.iter(|| decompose(black_box(&m), &DecompositionConfig::with_target(500)).unwrap())
    });
}

fn selection(c: &mut Criterion) {
    let m = models::nqueens(9);
    let d = decompose(&m, &DecompositionConfig::with_target(300)).unwrap();
    let cfg = PssConfig::default();
    let mut g = c.benchmark_group("pss");
    g.sample_size(10);
    g.bench_function("nqueens9", |b| {
        b.iter(|| pss_on_decomposition(&m, &d, &cfg).unwrap())
    });
    g.finish();
}

criterion_group!(benches, count, decomposition, selection);
criterion_main!(benches);
