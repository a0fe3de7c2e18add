//! Build-time benchmarks for the tree constructions across fixture
//! families and sizes.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use ramsey_core::embedding::ramsey_embed;
use ramsey_core::fixtures::{generate, FixtureSpec};
use ramsey_core::metric::WeightFunction;
use ramsey_core::multi::build_multi_embedding;
use ramsey_core::ramsey::ramsey_subspace;

fn bench_ramsey(c: &mut Criterion) {
    let mut g = c.benchmark_group("ramsey_subspace");
    for n in [64usize, 256] {
        let x = generate(&FixtureSpec::Planar { n, seed: 7 }).unwrap();
        let w = WeightFunction::unit(n);
        for t in [2usize, 4] {
            g.bench_with_input(BenchmarkId::new(format!("planar_t{t}"), n), &n, |b, _| {
                b.iter(|| ramsey_subspace(&x, &w, t).unwrap())
            });
        }
    }
    g.finish();
}

fn bench_embed(c: &mut Criterion) {
    let mut g = c.benchmark_group("ramsey_embed");
    for n in [64usize, 256] {
        let x = generate(&FixtureSpec::Graph { n, seed: 1 }).unwrap();
        let w = WeightFunction::unit(n);
        g.bench_with_input(BenchmarkId::new("graph_t2", n), &n, |b, _| {
            b.iter(|| ramsey_embed(&x, &w, 2).unwrap())
        });
    }
    g.finish();
}

fn bench_multi(c: &mut Criterion) {
    let mut g = c.benchmark_group("multi_embedding");
    for n in [64usize, 256] {
        let x = generate(&FixtureSpec::Path { n }).unwrap();
        let w = WeightFunction::unit(n);
        g.bench_with_input(BenchmarkId::new("path_eps05", n), &n, |b, _| {
            b.iter(|| build_multi_embedding(&x, &w, 0.5).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, bench_ramsey, bench_embed, bench_multi);
criterion_main!(benches);
