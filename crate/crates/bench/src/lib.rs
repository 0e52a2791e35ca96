//! Shared fixtures for the benchmarks.

use std::sync::Arc;

use slp_core::circuit::{parse, parse_basis, Basis, Builder, Circuit};
use slp_core::harness::{random_circuit, GeneratorParams, Q_SQRT2_BASIS};

/// `√2 + √3 - √(5 + 2√6)`, which is zero.
pub fn sqrt_identity() -> Circuit {
    parse(
        "z = const 0\no = const 1\nm2 = const -2\nm3 = const -3\nm6 = const -6\n\
         r2 = root2 m2 z o\nr3 = root2 m3 z o\nr6 = root2 m6 z o\ntwo = const 2\n\
         t = mul two r6\nfive = const 5\ns = add five t\nns = sub z s\nrr = root2 ns z o\n\
         a = add r2 r3\nd = sub a rr\nout d",
    )
    .expect("fixture parses")
}

/// `2^(2^n) - 1` by repeated squaring.
pub fn tower(n: usize) -> Circuit {
    let mut b = Builder::new(Arc::new(Basis::b(0)));
    let one = b.one();
    let mut x = b.add(one, one);
    for _ in 0..n {
        x = b.mul(x, x);
    }
    let out = b.sub(x, one);
    b.finish(out).expect("fixture is valid")
}

/// Random circuits over `B2` of the given size.
pub fn random_b2(size: usize, count: u64) -> Vec<Circuit> {
    (0..count)
        .filter_map(|s| random_circuit(&GeneratorParams::new(Basis::b(2), size, s)).ok())
        .collect()
}

/// Random circuits over the piecewise-linear `Q(√2)` basis.
pub fn random_pwl(size: usize, count: u64) -> Vec<Circuit> {
    let basis = parse_basis(Q_SQRT2_BASIS).expect("bundled basis parses");
    (0..count)
        .filter_map(|s| random_circuit(&GeneratorParams::new(basis.clone(), size, s)).ok())
        .collect()
}
