//! Oracle benchmarks: cover construction across sizes, and the constant
//! query path on its own.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ramsey_core::cover::{oracle_build, CoverBuilder};
use ramsey_core::fixtures::{generate, FixtureSpec};
use ramsey_core::metric::WeightFunction;

fn bench_build(c: &mut Criterion) {
    let mut g = c.benchmark_group("oracle_build");
    g.sample_size(10);
    for n in [64usize, 256, 1024] {
        let x = generate(&FixtureSpec::Planar { n, seed: 7 }).unwrap();
        let w = WeightFunction::unit(n);
        g.bench_with_input(BenchmarkId::new("planar_t2", n), &n, |b, _| {
            b.iter(|| oracle_build(&x, &w, CoverBuilder::Basic { t: 2 }).unwrap())
        });
    }
    g.finish();
}

fn bench_query(c: &mut Criterion) {
    let mut g = c.benchmark_group("oracle_query");
    for n in [256usize, 1024] {
        let x = generate(&FixtureSpec::Planar { n, seed: 7 }).unwrap();
        let w = WeightFunction::unit(n);
        let o = oracle_build(&x, &w, CoverBuilder::Basic { t: 2 }).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pairs: Vec<(usize, usize)> = (0..1024)
            .map(|_| (rng.gen_range(0..n), rng.gen_range(0..n)))
            .collect();
        g.bench_with_input(BenchmarkId::new("planar_t2", n), &n, |b, _| {
            b.iter(|| {
                let mut acc = 0.0;
                for &(a, bq) in &pairs {
                    acc += o.query(a, bq).unwrap();
                }
                acc
            })
        });
    }
    g.finish();
}

criterion_group!(benches, bench_build, bench_query);
criterion_main!(benches);
