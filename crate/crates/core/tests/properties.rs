use std::sync::Arc;

use num_rational::BigRational;
use num_traits::Signed;
use proptest::prelude::*;

use slp_core::circuit::{
    depth_normalize, parse, parse_basis, serialize, substitute, validate, Basis, Builder, GateId,
};
use slp_core::eval::exact::{eval_rational, pow2_rational};
use slp_core::eval::oracle::{oracle_eval, oracle_sign};
use slp_core::eval::{decide_sign, eval_interval, Sign};
use slp_core::harness::{random_circuit, GeneratorParams, Q_SQRT2_BASIS};
use slp_core::numberfield::{nf_sign, pwl_eval_circuit, NfElement};
use slp_core::poly::ratio;
use slp_core::transforms::{build_newton_iterate, delta_power};
use slp_core::{gap_exponent, height_bound};

fn b2(size: usize, seed: u64) -> slp_core::Circuit {
    random_circuit(&GeneratorParams::new(Basis::b(2), size, seed)).unwrap()
}

fn ring(size: usize, seed: u64) -> slp_core::Circuit {
    let mut p = GeneratorParams::new(Basis::ring(), size, seed);
    p.weights.remove(&slp_core::harness::GenKind::Const);
    random_circuit(&p).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip(size in 1usize..50, seed: u64) {
        let c = b2(size, seed);
        let text = serialize(&c);
        prop_assert_eq!(parse(&text).unwrap(), c);
    }

    #[test]
    fn generated_circuits_are_valid(size in 1usize..40, seed: u64) {
        let c = b2(size, seed);
        prop_assert!(validate(&c).is_empty());
        prop_assert_eq!(c.size(), size);
        for (i, g) in c.gates().iter().enumerate() {
            prop_assert!(g.inputs.iter().all(|x| x.index() < i));
        }
    }

    #[test]
    fn sign_matches_oracle(size in 1usize..16, seed: u64) {
        let c = b2(size, seed);
        prop_assert_eq!(decide_sign(&c).unwrap(), oracle_sign(&c).unwrap());
    }

    #[test]
    fn zero_is_exact_on_root_free_circuits(size in 1usize..20, seed: u64) {
        let c = ring(size, seed);
        let s = decide_sign(&c).unwrap();
        prop_assert_eq!(s == Sign::Zero, eval_rational(&c).unwrap() == BigRational::from_integer(0.into()));
    }

    #[test]
    fn intervals_enclose_the_oracle(size in 1usize..12, seed: u64, bits in 8u64..128) {
        let c = b2(size, seed);
        let x = eval_interval(&c, bits).unwrap();
        let y = oracle_eval(&c, -(bits as i64) - 40).unwrap();
        prop_assert!(x.lo() <= y.hi() && y.lo() <= x.hi(), "{} vs {}", x, y);
    }

    #[test]
    fn flipping_a_guard_swaps_branches(size in 2usize..12, seed: u64) {
        let c = b2(size, seed);
        let n = c.size() as u32;
        let mut b = Builder::extend(&c);
        let (g, x, y, z) = (GateId(seed as u32 % n), GateId(0), GateId(n / 2), GateId(n - 1));
        let plain = b.ch(g, x, y, z);
        let neg = b.neg(g);
        let flipped = b.ch(neg, z, y, x);
        let d = b.sub(plain, flipped);
        prop_assert_eq!(decide_sign(&b.finish(d).unwrap()).unwrap(), Sign::Zero);
    }

    #[test]
    fn heights_are_monotone(size in 2usize..20, seed: u64) {
        let c = b2(size, seed);
        let h = height_bound(&c).unwrap();
        for (i, g) in c.gates().iter().enumerate() {
            // A choice gate's value is one of its branches; the guard does not flow into it.
            let skip = usize::from(g.kind == slp_core::GateKind::Ch);
            for x in &g.inputs[skip..] {
                prop_assert!(h[i].deg_bound() >= h[x.index()].deg_bound());
                prop_assert!(h[i].log_h >= h[x.index()].log_h);
            }
        }
    }

    #[test]
    fn gap_bounds_rational_values(size in 1usize..20, seed: u64) {
        let c = ring(size, seed);
        let v = eval_rational(&c).unwrap();
        let (e, m) = gap_exponent(&c).unwrap();
        if v != BigRational::from_integer(0.into()) {
            let e: i64 = e.try_into().unwrap();
            prop_assert!(v.abs() >= pow2_rational(-e));
            if let Ok(m) = i64::try_from(m) {
                prop_assert!(v.abs() <= pow2_rational(m));
            }
        }
    }

    #[test]
    fn depth_normalize_preserves_value(size in 1usize..20, seed: u64) {
        let c = ring(size, seed);
        let d = depth_normalize(&c).unwrap();
        prop_assert_eq!(eval_rational(&d).unwrap(), eval_rational(&c).unwrap());
        prop_assert!(d.size() <= c.size() + c.size() * c.size());
    }

    #[test]
    fn identity_substitution_preserves_values(size in 2usize..20, seed: u64) {
        let c = ring(size, seed);
        let Some(target) = c.gates().iter().rposition(|g| g.inputs.len() == 2) else { return Ok(()) };
        let mut b = Builder::new(c.basis().clone());
        let (x, y) = (b.input(0), b.input(1));
        let kind = c.gates()[target].kind.clone();
        let out = b.push(kind, vec![x, y]);
        let t = b.into_template(2, out);
        let s = substitute(&c, GateId(target as u32), &t).unwrap();
        prop_assert_eq!(eval_rational(&s).unwrap(), eval_rational(&c).unwrap());
    }

    #[test]
    fn difference_operator_reaches_degree_two(d in 2usize..7, lead in 1i64..5, num in 1i64..4, den in 1i64..4) {
        let mut coeffs = vec![0i64; d + 1];
        coeffs[d] = lead;
        coeffs[1] = -3;
        let p = slp_core::poly::Poly::from_ints(&coeffs);
        prop_assert_eq!(delta_power(&p, &ratio(num, den), d - 2).degree(), Some(2));
    }

    #[test]
    fn newton_steps_move_toward_the_root(x0 in 2i64..40) {
        let t = build_newton_iterate(2, 3).unwrap();
        let mut b = Builder::new(Arc::new(Basis::b(1)));
        let args: Vec<GateId> = [x0, -2, 0, 1].iter().map(|&v| b.rational(ratio(v, 1))).collect();
        let out = b.instantiate(&t, &args);
        let z = eval_rational(&b.finish(out).unwrap()).unwrap();
        prop_assert!(&z * &z >= ratio(2, 1));
        prop_assert!(z < ratio(x0, 1));
    }

    #[test]
    fn field_axioms(xs in prop::collection::vec((-30i64..30, 1i64..8), 6)) {
        let field = parse_basis(Q_SQRT2_BASIS).unwrap().field().unwrap().clone();
        let el = |i: usize| NfElement::from_coords(&field, vec![ratio(xs[i].0, xs[i].1), ratio(xs[i + 1].0, xs[i + 1].1)]);
        let (a, b, c) = (el(0), el(2), el(4));
        prop_assert_eq!(a.add(&b).unwrap().add(&c).unwrap(), a.add(&b.add(&c).unwrap()).unwrap());
        prop_assert_eq!(a.mul(&b).unwrap().mul(&c).unwrap(), a.mul(&b.mul(&c).unwrap()).unwrap());
        prop_assert_eq!(a.mul(&b.add(&c).unwrap()).unwrap(), a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap());
        if !a.is_zero() {
            prop_assert_eq!(a.mul(&a.inverse().unwrap()).unwrap(), field.one());
        }
        prop_assert_eq!(nf_sign(&a.neg()), nf_sign(&a).negate());
    }

    #[test]
    fn pwl_agrees_with_interval_oracle(size in 1usize..30, seed: u64) {
        let basis = parse_basis(Q_SQRT2_BASIS).unwrap();
        let c = random_circuit(&GeneratorParams::new(basis, size, seed)).unwrap();
        let v = pwl_eval_circuit(&c).unwrap();
        let (lo, hi) = field_enclosure(&v);
        let x = oracle_eval(&c, -200).unwrap();
        prop_assert!(x.lo().to_rational() <= hi && lo <= x.hi().to_rational());
    }
}

/// Enclosure of an element of `Q(√2)` from a rational bracket of `√2`.
fn field_enclosure(v: &NfElement) -> (BigRational, BigRational) {
    let (lo, hi) = v.field().refine(220);
    v.enclose(&lo, &hi)
}
