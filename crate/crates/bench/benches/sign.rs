use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use slp_bench::{random_b2, sqrt_identity, tower};
use slp_core::decide_sign;
use slp_core::transforms::{eliminate_roots, regularize};

fn sign(c: &mut Criterion) {
    let id = sqrt_identity();
    c.bench_function("decide_sign/sqrt_identity", |b| {
        b.iter(|| decide_sign(&id).unwrap())
    });
    let mut g = c.benchmark_group("decide_sign/tower");
    for n in [4, 8, 12] {
        let t = tower(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &t, |b, t| {
            b.iter(|| decide_sign(t).unwrap())
        });
    }
    g.finish();
}

fn transforms(c: &mut Criterion) {
    let cases = random_b2(16, 20);
    c.bench_function("regularize/random16", |b| {
        b.iter(|| {
            cases
                .iter()
                .map(|x| regularize(x).map(|o| o.size()).unwrap_or(0))
                .sum::<usize>()
        })
    });
    c.bench_function("eliminate_roots/random16", |b| {
        b.iter(|| {
            cases
                .iter()
                .map(|x| eliminate_roots(x).map(|o| o.size()).unwrap_or(0))
                .sum::<usize>()
        })
    });
}

criterion_group!(benches, sign, transforms);
criterion_main!(benches);
