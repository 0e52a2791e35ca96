//! The nine acceptance criteria. Each test writes one PASS/FAIL line to
//! stdout (bypassing capture) before asserting.

use std::io::Write as _;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use slp_core::circuit::{
    parse, parse_basis, serialize, validate, Basis, Builder, Circuit, GateId, GateKind,
};
use slp_core::eval::exact::{eval_rational, pow2_rational};
use slp_core::eval::float::{float_enclosure, float_sign};
use slp_core::eval::oracle::{oracle_eval, oracle_rational, oracle_sign};
use slp_core::eval::{decide_sign, Dyadic, DyadicInterval, Sign};
use slp_core::gap_exponent;
use slp_core::harness::{
    case_params, growth_exponent, parse_weights, random_circuit, GeneratorParams, Pass,
    Q_CBRT2_BASIS, Q_SQRT2_BASIS,
};
use slp_core::numberfield::{pwl_decide_sign, NfElement, NumberField};
use slp_core::poly::{rat, ratio, Poly};
use slp_core::transforms::{
    build_newton_iterate, eliminate_roots, mul_from_poly_traced, regularize, regularize_size_bound,
    scaling_factor, square_from_unary_traced, UnaryAlmostSquareSpec,
};

fn report(n: u32, name: &str, failures: &[String], detail: &str, started: Instant) {
    let verdict = if failures.is_empty() { "PASS" } else { "FAIL" };
    let line = format!(
        "criterion {n} {verdict}: {name}: {detail} ({:.1}s)\n",
        started.elapsed().as_secs_f64()
    );
    let mut out = std::io::stdout().lock();
    let _ = out.write_all(line.as_bytes());
    for f in failures.iter().take(5) {
        let _ = writeln!(out, "    {f}");
    }
    let _ = out.flush();
    drop(out);
    assert!(
        failures.is_empty(),
        "criterion {n}: {} failures, first: {}",
        failures.len(),
        failures[0]
    );
}

fn big_stack<T: Send + 'static>(f: impl FnOnce() -> T + Send + 'static) -> T {
    thread::Builder::new()
        .stack_size(256 << 20)
        .spawn(f)
        .expect("spawn")
        .join()
        .unwrap_or_else(|e| std::panic::resume_unwind(e))
}

fn rq(x: &Dyadic) -> BigRational {
    x.to_rational()
}

fn pow2_big(e: &BigInt) -> Option<BigRational> {
    e.to_i64().filter(|e| e.abs() <= 1 << 26).map(pow2_rational)
}

/// `[⌊log2 |q|⌋, ⌈log2 |q|⌉]` up to one, for nonzero `q`.
fn log2_range(q: &BigRational) -> (i64, i64) {
    let n = q.numer().bits() as i64;
    let d = q.denom().bits() as i64;
    (n - 1 - d, n - d + 1)
}

// ---------------------------------------------------------------------------
// 1. Zero-bound soundness

enum Verdict {
    Ok,
    Violated(String),
    Undecided,
}

/// Decides `2^-E <= |v| <= 2^M` from an enclosure of `|v|`.
fn in_range(lo: &BigRational, hi: &BigRational, e: &BigInt, m: &BigInt) -> Verdict {
    let (lo_log, _) = if lo.is_zero() {
        (i64::MIN, 0)
    } else {
        log2_range(lo)
    };
    let (_, hi_log) = log2_range(hi);
    let lower = if BigInt::from(lo_log) >= -e {
        Some(true)
    } else if BigInt::from(hi_log) < -e {
        Some(false)
    } else {
        pow2_big(&-e).and_then(|g| {
            if lo >= &g {
                Some(true)
            } else if hi < &g {
                Some(false)
            } else {
                None
            }
        })
    };
    let upper = if BigInt::from(hi_log) <= *m {
        Some(true)
    } else if BigInt::from(lo_log) > *m {
        Some(false)
    } else {
        pow2_big(m).and_then(|g| {
            if hi <= &g {
                Some(true)
            } else if lo > &g {
                Some(false)
            } else {
                None
            }
        })
    };
    match (lower, upper) {
        (Some(false), _) => Verdict::Violated(format!("|v| < 2^-{e}")),
        (_, Some(false)) => Verdict::Violated(format!("|v| > 2^{m}")),
        (Some(true), Some(true)) => Verdict::Ok,
        _ => Verdict::Undecided,
    }
}

fn abs_range(x: &DyadicInterval) -> (BigRational, BigRational) {
    let (lo, hi) = (rq(x.lo()), rq(x.hi()));
    if x.contains_zero() {
        (BigRational::zero(), lo.abs().max(hi.abs()))
    } else if lo.is_positive() {
        (lo, hi)
    } else {
        (hi.abs(), lo.abs())
    }
}

fn zero_bound_case(c: &Circuit) -> Result<bool, String> {
    let (e, m) = gap_exponent(c).map_err(|x| x.to_string())?;
    if oracle_sign(c).map_err(|x| x.to_string())? == Sign::Zero {
        return Ok(false);
    }
    if let Some(q) = oracle_rational(c).map_err(|x| x.to_string())? {
        let a = q.abs();
        return match in_range(&a, &a, &e, &m) {
            Verdict::Ok => Ok(true),
            Verdict::Violated(w) => Err(w),
            Verdict::Undecided => Err("undecided on an exact value".into()),
        };
    }
    // Escalate the enclosure width down to 2^(-E-10).
    let floor: BigInt = -(&e + BigInt::from(10));
    let mut w: i64 = -64;
    loop {
        let target = if BigInt::from(w) <= floor {
            floor.to_i64().ok_or("E out of range")?
        } else {
            w
        };
        let x = oracle_eval(c, target).map_err(|x| x.to_string())?;
        let (lo, hi) = abs_range(&x);
        match in_range(&lo, &hi, &e, &m) {
            Verdict::Ok => return Ok(true),
            Verdict::Violated(why) => return Err(why),
            Verdict::Undecided if target == w => w *= 2,
            Verdict::Undecided => return Err(format!("undecided at width 2^{target}")),
        }
    }
}

#[test]
fn c1_zero_bound_soundness() {
    big_stack(|| {
        let t = Instant::now();
        let params = GeneratorParams::new(Basis::b(2), 25, 0x5eed_0001).with_root_cap(3);
        let results: Vec<Result<bool, String>> = (0..1000u64)
            .into_par_iter()
            .map(|i| {
                let p = case_params(&params, i);
                let c = random_circuit(&p).map_err(|e| e.to_string())?;
                zero_bound_case(&c)
                    .map_err(|e| format!("seed {} size {}: {e}\n{}", p.seed, p.size, serialize(&c)))
            })
            .collect();
        let checked = results.iter().filter(|r| matches!(r, Ok(true))).count();
        let failures: Vec<String> = results.into_iter().filter_map(Result::err).collect();
        report(
            1,
            "zero-bound soundness",
            &failures,
            &format!(
                "1000 circuits, {checked} nonzero checked, {} violations",
                failures.len()
            ),
            t,
        );
    });
}

// ---------------------------------------------------------------------------
// 2. Sum-of-square-roots regression

/// `√n` or `√(a + b√m)`.
#[derive(Clone, Debug)]
enum Term {
    Root(i64),
    Nested(i64, i64, i64),
}

fn sqrt_of(b: &mut Builder, x: GateId) -> GateId {
    let zero = b.zero();
    let one = b.one();
    let neg = b.sub(zero, x);
    b.root(&[neg, zero, one])
}

fn term(b: &mut Builder, t: &Term) -> GateId {
    match *t {
        Term::Root(n) => {
            let x = b.rational(rat(n));
            sqrt_of(b, x)
        }
        Term::Nested(a, k, m) => {
            let mx = b.rational(rat(m));
            let r = sqrt_of(b, mx);
            let kk = b.rational(rat(k));
            let kr = b.mul(kk, r);
            let aa = b.rational(rat(a));
            let s = b.add(aa, kr);
            sqrt_of(b, s)
        }
    }
}

fn difference(s1: &[Term], s2: &[Term]) -> Circuit {
    let mut b = Builder::new(Arc::new(Basis::b(2)));
    let sum = |b: &mut Builder, s: &[Term]| {
        let mut acc = b.zero();
        for t in s {
            let g = term(b, t);
            acc = b.add(acc, g);
        }
        acc
    };
    let x = sum(&mut b, s1);
    let y = sum(&mut b, s2);
    let d = b.sub(x, y);
    b.finish(d).expect("valid")
}

fn engineered() -> Vec<(Vec<Term>, Vec<Term>)> {
    use Term::*;
    vec![
        (vec![Root(2), Root(3)], vec![Nested(5, 2, 6)]),
        (vec![Root(8)], vec![Root(2), Root(2)]),
        (vec![Root(12)], vec![Root(3), Root(3)]),
        (vec![Root(18)], vec![Root(2), Root(8)]),
        (vec![Root(27)], vec![Root(3), Root(12)]),
        (vec![Nested(3, 2, 2)], vec![Root(1), Root(2)]),
        (vec![Nested(7, 4, 3)], vec![Root(4), Root(3)]),
        (vec![Nested(11, 6, 2)], vec![Root(9), Root(2)]),
        (
            vec![Root(5), Root(7), Root(11)],
            vec![Root(11), Root(5), Root(7)],
        ),
        (vec![Root(24), Root(6)], vec![Root(54)]),
        (vec![Root(20), Root(5)], vec![Root(45)]),
        (vec![Nested(5, -2, 6), Root(2)], vec![Root(3)]),
    ]
}

#[test]
fn c2_sum_of_square_roots() {
    big_stack(|| {
        let t = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
        let side = |rng: &mut ChaCha8Rng| -> Vec<Term> {
            let k = rng.gen_range(1..=3);
            (0..k).map(|_| Term::Root(rng.gen_range(0..=30))).collect()
        };
        let mut pairs: Vec<(Vec<Term>, Vec<Term>)> =
            (0..500).map(|_| (side(&mut rng), side(&mut rng))).collect();
        let n_engineered = engineered().len();
        pairs.extend(engineered());
        let results: Vec<Result<Sign, String>> = pairs
            .par_iter()
            .enumerate()
            .map(|(i, (s1, s2))| {
                let c = difference(s1, s2);
                let x = oracle_eval(&c, -512).map_err(|e| e.to_string())?;
                let expected = x.strict_sign().unwrap_or(Sign::Zero);
                let got = decide_sign(&c).map_err(|e| e.to_string())?;
                if i >= 500 && expected != Sign::Zero {
                    return Err(format!(
                        "engineered pair {s1:?} vs {s2:?} is not equal per oracle"
                    ));
                }
                if got != expected {
                    return Err(format!(
                        "{s1:?} - {s2:?}: oracle {expected}, decide_sign {got}"
                    ));
                }
                Ok(got)
            })
            .collect();
        let zeros = results
            .iter()
            .filter(|r| matches!(r, Ok(Sign::Zero)))
            .count();
        let failures: Vec<String> = results.into_iter().filter_map(Result::err).collect();
        report(
            2,
            "sum-of-square-roots regression",
            &failures,
            &format!(
                "500 sampled + {n_engineered} engineered pairs, {zeros} ZERO, {} disagreements",
                failures.len()
            ),
            t,
        );
    });
}

// ---------------------------------------------------------------------------
// 3. Regularization

fn regularize_case(c: &Circuit) -> Result<(), String> {
    let r = regularize(c).map_err(|e| format!("pass: {e}"))?;
    let x = oracle_eval(c, -210).map_err(|e| e.to_string())?;
    let y = oracle_eval(&r, -210).map_err(|e| e.to_string())?;
    if (rq(x.lo()) - rq(y.lo())).abs() > pow2_rational(-200) {
        return Err(format!("value {x} became {y}"));
    }
    for (i, g) in r.gates().iter().enumerate() {
        if g.kind == GateKind::Ch {
            let s = decide_sign(&r.subcircuit(g.inputs[0])).map_err(|e| e.to_string())?;
            if s == Sign::Zero {
                return Err(format!("guard of g{i} is zero"));
            }
        }
    }
    let bound = regularize_size_bound(c).map_err(|e| e.to_string())?;
    if r.size() > bound {
        return Err(format!("size {} exceeds bound {bound}", r.size()));
    }
    Ok(())
}

#[test]
fn c3_regularization() {
    big_stack(|| {
        let t = Instant::now();
        let params = GeneratorParams::new(Basis::b(2), 25, 0x5eed_0003);
        let failures: Vec<String> = (0..300u64)
            .into_par_iter()
            .filter_map(|i| {
                let p = case_params(&params, i);
                let c = random_circuit(&p).ok()?;
                regularize_case(&c)
                    .err()
                    .map(|e| format!("seed {} size {}: {e}", p.seed, p.size))
            })
            .collect();
        report(
            3,
            "regularization",
            &failures,
            &format!("300 circuits, {} violations", failures.len()),
            t,
        );
    });
}

// ---------------------------------------------------------------------------
// 4. Newton elimination

#[test]
fn c4_newton_elimination() {
    big_stack(|| {
        let t = Instant::now();
        let mut weights = slp_core::harness::default_weights(&Basis::b(2));
        weights.extend(parse_weights("root2:4").unwrap());
        let params = GeneratorParams::new(Basis::b(2), 20, 0x5eed_0004).with_weights(weights);
        let results: Vec<Result<(usize, usize, bool, bool), String>> = (0..200u64)
            .into_par_iter()
            .map(|i| {
                let p = case_params(&params, i);
                let c = random_circuit(&p).map_err(|e| e.to_string())?;
                let fail = |e: String| format!("seed {} size {}: {e}", p.seed, p.size);
                let out = eliminate_roots(&c).map_err(|e| fail(e.to_string()))?;
                if out.max_root_degree() > 1
                    || **out.basis() != Basis::b(1)
                    || !validate(&out).is_empty()
                {
                    return Err(fail("output is not a valid B1 circuit".into()));
                }
                let want = oracle_sign(&c).map_err(|e| fail(e.to_string()))? == Sign::Pos;
                let got = decide_sign(&out).map_err(|e| fail(e.to_string()))? == Sign::Pos;
                if want != got {
                    return Err(fail(format!(
                        "input positive {want}, output positive {got}"
                    )));
                }
                let live_root = c.max_root_degree() == 2;
                Ok((c.size(), out.size(), want, live_root))
            })
            .collect();
        let ok: Vec<(usize, usize, bool, bool)> = results
            .iter()
            .filter_map(|r| r.as_ref().ok().copied())
            .collect();
        let failures: Vec<String> = results.into_iter().filter_map(Result::err).collect();
        let pairs: Vec<(usize, usize)> = ok.iter().map(|r| (r.0, r.1)).collect();
        let exponent = growth_exponent(&pairs).map_or("n/a".into(), |e| format!("{e:.3}"));
        let positive = ok.iter().filter(|r| r.2).count();
        let with_roots = ok.iter().filter(|r| r.3).count();
        report(
            4,
            "Newton elimination",
            &failures,
            &format!(
                "200 circuits ({positive} positive, {with_roots} with root2), {} disagreements, size growth exponent {exponent}",
                failures.len()
            ),
            t,
        );
    });
}

// ---------------------------------------------------------------------------
// 5. Newton contraction

struct Quadratic {
    coeffs: [BigRational; 3],
    a: BigRational,
    b: BigRational,
    c: BigRational,
}

fn root_circuit(coeffs: &[BigRational; 3]) -> Circuit {
    let mut b = Builder::new(Arc::new(Basis::b(2)));
    let g: Vec<GateId> = coeffs.iter().map(|q| b.rational(q.clone())).collect();
    let r = b.root(&g);
    b.finish(r).unwrap()
}

fn is_square(n: &BigInt) -> bool {
    let r = n.sqrt();
    &(&r * &r) == n
}

fn quadratic(rng: &mut ChaCha8Rng) -> Quadratic {
    loop {
        let a2 = rng.gen_range(1i64..=6);
        let a1 = rng.gen_range(-12i64..=12);
        let a0 = rng.gen_range(-12i64..=12);
        let disc = BigInt::from(a1 * a1 - 4 * a0 * a2);
        if !disc.is_positive() || is_square(&disc) {
            continue;
        }
        let coeffs = [rat(a0), rat(a1), rat(a2)];
        let z = oracle_eval(&root_circuit(&coeffs), -300).unwrap();
        let (zl, zh) = (rq(z.lo()), rq(z.hi()));
        // Vertex: f' > 0 to its right.
        let a = ratio(-a1, 2 * a2);
        let h = &zl - &a;
        let t = ratio(rng.gen_range(70..=99), 100);
        let b = &a + &h * t;
        let top = (rat(3) * &b - &a) / rat(2);
        let s = ratio(rng.gen_range(5..=100), 100);
        let c = &zh + (&top - &zh) * s;
        return Quadratic { coeffs, a, b, c };
    }
}

/// The approximate-zero hypotheses, checked exactly; the second-derivative
/// condition holds for every quadratic with `a2 > 0`.
fn hypotheses(q: &Quadratic, zl: &BigRational, zh: &BigRational) -> bool {
    let [_, a1, a2] = &q.coeffs;
    let deriv = |x: &BigRational| rat(2) * a2 * x + a1;
    let e = (rat(2) * a2).to_integer().bits() as i64 - 1;
    let f2 = rat(2) * a2;
    q.a < q.b
        && q.b < q.c
        && &q.c - &q.b <= (&q.b - &q.a) / rat(2)
        && &q.b <= zl
        && zh <= &q.c
        && deriv(&q.a) >= rat(0)
        && deriv(&q.c) > rat(0)
        && pow2_rational(e) <= f2
        && f2 <= pow2_rational(e + 1)
}

fn newton_iterate(q: &Quadratic, k: usize) -> BigRational {
    if k == 0 {
        return q.c.clone();
    }
    let t = build_newton_iterate(2, k).unwrap();
    let mut b = Builder::new(Arc::new(Basis::b(1)));
    let args: Vec<GateId> = std::iter::once(&q.c)
        .chain(q.coeffs.iter())
        .map(|x| b.rational(x.clone()))
        .collect();
    let out = b.instantiate(&t, &args);
    eval_rational(&b.finish(out).unwrap()).unwrap()
}

#[test]
fn c5_newton_contraction() {
    big_stack(|| {
        let t = Instant::now();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0005);
        let instances: Vec<Quadratic> = (0..100).map(|_| quadratic(&mut rng)).collect();
        let failures: Vec<String> = instances
            .par_iter()
            .enumerate()
            .flat_map_iter(|(n, q)| {
                let z = oracle_eval(&root_circuit(&q.coeffs), -256).unwrap();
                let (zl, zh) = (rq(z.lo()), rq(z.hi()));
                let mut errs = Vec::new();
                if !hypotheses(q, &zl, &zh) {
                    errs.push(format!("instance {n}: hypotheses do not hold"));
                    return errs;
                }
                let zeta = (&zl + &zh) / rat(2);
                let slack = pow2_rational(-250);
                let d0 = (&q.c - &zeta).abs();
                for i in 0..=5usize {
                    let di = (newton_iterate(q, i) - &zeta).abs();
                    let bound = pow2_rational(1 - (1i64 << i)) * &d0 + &slack;
                    if di > bound {
                        errs.push(format!(
                            "instance {n}, iterate {i}: |z_i - ζ| exceeds 2^(1-2^i)|z_0 - ζ|"
                        ));
                    }
                }
                errs
            })
            .collect();
        report(
            5,
            "Newton contraction",
            &failures,
            &format!(
                "100 quadratics, iterates 0..=5 at 256 bits, {} violations",
                failures.len()
            ),
            t,
        );
    });
}

// ---------------------------------------------------------------------------
// 6. Multiplication from a polynomial gate

#[test]
fn c6_mul_from_poly() {
    big_stack(|| {
        let t = Instant::now();
        let polys = [
            ("x^2", Poly::from_ints(&[0, 0, 1])),
            ("x^3", Poly::from_ints(&[0, 0, 0, 1])),
            ("x^3-x+1", Poly::from_ints(&[1, -1, 0, 1])),
        ];
        let alphas = [rat(1), ratio(1, 2)];
        let mut failures = Vec::new();
        let mut spot = 0;
        for (pi, (pname, p)) in polys.iter().enumerate() {
            for (ai, alpha) in alphas.iter().enumerate() {
                let pass = Pass::MulPoly {
                    p: p.clone(),
                    alpha: alpha.clone(),
                };
                let params = pass.generator(15, 0x5eed_0006 + (pi * 2 + ai) as u64);
                let results: Vec<Result<usize, String>> = (0..500u64)
                    .into_par_iter()
                    .map(|i| {
                        let cp = case_params(&params, i);
                        let fail =
                            |e: String| format!("p = {pname}, α = {alpha}, seed {}: {e}", cp.seed);
                        let c = random_circuit(&cp).map_err(|e| fail(e.to_string()))?;
                        let tr =
                            mul_from_poly_traced(&c, p, alpha).map_err(|e| fail(e.to_string()))?;
                        let want = Sign::of(&eval_rational(&c).map_err(|e| fail(e.to_string()))?);
                        let got =
                            Sign::of(&eval_rational(&tr.circuit).map_err(|e| fail(e.to_string()))?);
                        if want != got {
                            return Err(fail(format!("sign {want} became {got}")));
                        }
                        // Scaling invariant on the two highest layered gates of the first 50 cases.
                        let mut checked = 0;
                        if i < 50 {
                            let gates = (0..tr.levels.len())
                                .rev()
                                .filter_map(|g| tr.levels[g].map(|l| (g, l)));
                            for (g, level) in gates.take(2) {
                                let orig =
                                    eval_rational(&tr.normalized.subcircuit(GateId(g as u32)))
                                        .unwrap();
                                let img =
                                    eval_rational(&tr.circuit.subcircuit(tr.image[g])).unwrap();
                                if img != orig * scaling_factor(&tr.a, alpha, level) {
                                    return Err(fail(format!(
                                        "scaling invariant fails at gate {g}, depth {level}"
                                    )));
                                }
                                checked += 1;
                            }
                        }
                        Ok(checked)
                    })
                    .collect();
                let mut config_spot = 0;
                for r in results {
                    match r {
                        Ok(k) => config_spot += k,
                        Err(e) => failures.push(e),
                    }
                }
                if config_spot < 50 {
                    failures.push(format!(
                        "p = {pname}, α = {alpha}: only {config_spot} gates spot-checked"
                    ));
                }
                spot += config_spot;
            }
        }
        report(
            6,
            "mul_from_poly",
            &failures,
            &format!(
                "6 configurations x 500 circuits, {spot} scaled gates checked, {} failures",
                failures.len()
            ),
            t,
        );
    });
}

// ---------------------------------------------------------------------------
// 7. Squaring from a unary almost-square gate

/// `|value / u_n - n| < 1`, certified by relative-precision intervals.
fn within_one(circuit: &Circuit, seed: GateId, n: &BigRational) -> Result<bool, String> {
    let v = float_enclosure(circuit, 64, 1 << 14).map_err(|e| e.to_string())?;
    let u = float_enclosure(&circuit.with_output(seed), 64, 1 << 14).map_err(|e| e.to_string())?;
    let q = v.div(&u, 256).ok_or("u_n straddles zero")?;
    let d = q.sub(&DyadicInterval::from_rational(n, 256), 256);
    let one = Dyadic::from_int(1);
    Ok(d.hi() < &one && d.lo() > &one.neg())
}

#[test]
fn c7_square_from_unary() {
    big_stack(|| {
        let t = Instant::now();
        let spec = UnaryAlmostSquareSpec::new(
            rat(1),
            ratio(1, 2),
            Poly::from_ints(&[0, 0, 1, 1]),
            ratio(1, 4),
        )
        .expect("spec holds");
        let pass = Pass::SqFromF(spec.clone());
        let params = pass.generator(10, 0x5eed_0007);
        let results: Vec<Result<(usize, usize), String>> = (0..300u64)
            .into_par_iter()
            .map(|i| {
                let cp = case_params(&params, i);
                let fail = |e: String| format!("seed {} size {}: {e}", cp.seed, cp.size);
                let c = random_circuit(&cp).map_err(|e| fail(e.to_string()))?;
                let tr = square_from_unary_traced(&c, &spec).map_err(|e| fail(e.to_string()))?;
                let input = Sign::of(&eval_rational(&c).map_err(|e| fail(e.to_string()))?);
                let n = eval_rational(&tr.n).map_err(|e| fail(e.to_string()))?;
                let got = float_sign(&tr.circuit, 1 << 14).map_err(|e| fail(e.to_string()))?;
                if (input == Sign::Pos) != (got == Sign::Pos) {
                    return Err(fail(format!("input {input}, output {got}")));
                }
                if Sign::of(&n) != got {
                    return Err(fail(format!("2c - 1 is {}, output {got}", Sign::of(&n))));
                }
                if !within_one(&tr.circuit, tr.seed(), &n).map_err(fail)? {
                    return Err(fail("|value/u_n - n| >= 1".into()));
                }
                if tr.calls > tr.norm * tr.norm {
                    return Err(fail(format!(
                        "{} calls exceed ‖n‖² = {}",
                        tr.calls,
                        tr.norm * tr.norm
                    )));
                }
                Ok((tr.calls, tr.norm))
            })
            .collect();
        let max_calls = results
            .iter()
            .filter_map(|r| r.as_ref().ok())
            .map(|r| r.0)
            .max()
            .unwrap_or(0);
        let failures: Vec<String> = results.into_iter().filter_map(Result::err).collect();
        report(
            7,
            "square_from_unary",
            &failures,
            &format!(
                "300 circuits, max {max_calls} recursive calls, {} failures",
                failures.len()
            ),
            t,
        );
    });
}

// ---------------------------------------------------------------------------
// 8. Piecewise-linear bases

fn pwl_time(circuits: &[Circuit]) -> Duration {
    (0..5)
        .map(|_| {
            let t = Instant::now();
            for c in circuits {
                let _ = pwl_decide_sign(c);
            }
            t.elapsed()
        })
        .min()
        .unwrap()
}

#[test]
fn c8_pwl_tractable_case() {
    big_stack(|| {
        let t = Instant::now();
        let mut failures = Vec::new();
        let mut ratios = Vec::new();
        for (bi, (name, text)) in [("Q(√2)", Q_SQRT2_BASIS), ("Q(∛2)", Q_CBRT2_BASIS)]
            .into_iter()
            .enumerate()
        {
            let basis = parse_basis(text).unwrap();
            let params = GeneratorParams::new(basis.clone(), 40, 0x5eed_0008 + bi as u64);
            let errs: Vec<String> = (0..500u64)
                .into_par_iter()
                .filter_map(|i| {
                    let cp = case_params(&params, i);
                    let c = random_circuit(&cp).ok()?;
                    let fail =
                        |e: String| Some(format!("{name}, seed {} size {}: {e}", cp.seed, cp.size));
                    let x = match oracle_eval(&c, -200) {
                        Ok(x) => x,
                        Err(e) => return fail(e.to_string()),
                    };
                    let want = x.strict_sign().unwrap_or(Sign::Zero);
                    match pwl_decide_sign(&c) {
                        Ok(got) if got == want => None,
                        Ok(got) => fail(format!("oracle {want}, pwl {got}")),
                        Err(e) => fail(e.to_string()),
                    }
                })
                .collect();
            failures.extend(errs);

            let fixed = |size: usize| -> Vec<Circuit> {
                (0..20u64)
                    .filter_map(|s| {
                        random_circuit(&GeneratorParams::new(basis.clone(), size, 1000 + s)).ok()
                    })
                    .collect()
            };
            let (small, large) = (fixed(40), fixed(160));
            let ratio = pwl_time(&large).as_secs_f64() / pwl_time(&small).as_secs_f64();
            if ratio > 4.0 * 1.5 {
                failures.push(format!("{name}: 4x gates took {ratio:.2}x time"));
            }
            ratios.push(format!("{name} {ratio:.2}x"));
        }
        report(
            8,
            "PWL tractable case",
            &failures,
            &format!(
                "2 bases x 500 circuits, {} failures, time for 4x gates: {}",
                failures.len(),
                ratios.join(", ")
            ),
            t,
        );
    });
}

// ---------------------------------------------------------------------------
// 9. Field axioms and round trip

fn random_element(field: &Arc<NumberField>, rng: &mut ChaCha8Rng) -> NfElement {
    let coords = (0..field.degree())
        .map(|_| {
            if rng.gen_bool(0.2) {
                BigRational::zero()
            } else {
                ratio(rng.gen_range(-20..=20), rng.gen_range(1..=9))
            }
        })
        .collect();
    NfElement::from_coords(field, coords)
}

fn axioms(a: &NfElement, b: &NfElement, c: &NfElement) -> Vec<&'static str> {
    let f = a.field();
    let (zero, one) = (f.zero(), f.one());
    let mut bad = Vec::new();
    let mut check = |ok: bool, what: &'static str| {
        if !ok {
            bad.push(what)
        }
    };
    let add = |x: &NfElement, y: &NfElement| x.add(y).unwrap();
    let mul = |x: &NfElement, y: &NfElement| x.mul(y).unwrap();
    check(
        add(&add(a, b), c) == add(a, &add(b, c)),
        "additive associativity",
    );
    check(add(a, b) == add(b, a), "additive commutativity");
    check(
        mul(&mul(a, b), c) == mul(a, &mul(b, c)),
        "multiplicative associativity",
    );
    check(mul(a, b) == mul(b, a), "multiplicative commutativity");
    check(
        mul(a, &add(b, c)) == add(&mul(a, b), &mul(a, c)),
        "distributivity",
    );
    check(add(a, &zero) == *a && mul(a, &one) == *a, "identities");
    check(
        a.sub(a).unwrap().is_zero() && add(a, &a.neg()).is_zero(),
        "additive inverse",
    );
    if !a.is_zero() {
        check(
            mul(a, &a.inverse().unwrap()) == one,
            "multiplicative inverse",
        );
    }
    if !b.is_zero() {
        check(mul(&a.div(b).unwrap(), b) == *a, "division");
    }
    check(a.is_zero() == (a.sign() == Sign::Zero), "zero test");
    bad
}

#[test]
fn c9_field_axioms_and_round_trip() {
    big_stack(|| {
        let t = Instant::now();
        let mut failures = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0009);
        let fields: Vec<Arc<NumberField>> = [Q_SQRT2_BASIS, Q_CBRT2_BASIS]
            .iter()
            .map(|t| parse_basis(t).unwrap().field().unwrap().clone())
            .collect();
        for i in 0..1000 {
            let f = &fields[i % 2];
            let (a, b, c) = (
                random_element(f, &mut rng),
                random_element(f, &mut rng),
                random_element(f, &mut rng),
            );
            for what in axioms(&a, &b, &c) {
                failures.push(format!("triple {i}: {what}"));
            }
        }

        let bases: Vec<Basis> = vec![
            Basis::b(2),
            Basis::b(1),
            Basis::ring(),
            Basis::sqring(),
            parse_basis(Q_SQRT2_BASIS).unwrap(),
            parse_basis(Q_CBRT2_BASIS).unwrap(),
            UnaryAlmostSquareSpec::standard().basis(),
        ];
        let mut round_trips = 0;
        for i in 0..1000u64 {
            let basis = bases[i as usize % bases.len()].clone();
            let size = 1 + (i as usize * 7) % 30;
            let Ok(c) = random_circuit(&GeneratorParams::new(basis, size, 0x5eed_0009 ^ i)) else {
                failures.push(format!("circuit {i}: generation failed"));
                continue;
            };
            let text = serialize(&c);
            match parse(&text) {
                Ok(back) if back == c && serialize(&back) == text => round_trips += 1,
                Ok(_) => failures.push(format!(
                    "circuit {i}: round trip changed the circuit\n{text}"
                )),
                Err(e) => failures.push(format!("circuit {i}: {e}\n{text}")),
            }
        }
        report(
            9,
            "field axioms and round trip",
            &failures,
            &format!(
                "1000 triples, {round_trips}/1000 round trips, {} failures",
                failures.len()
            ),
            t,
        );
    });
}

#[test]
fn unit_helpers() {
    assert!(matches!(
        in_range(&rat(1), &rat(1), &BigInt::from(3), &BigInt::from(3)),
        Verdict::Ok
    ));
    assert!(matches!(
        in_range(
            &ratio(1, 64),
            &ratio(1, 64),
            &BigInt::from(3),
            &BigInt::from(3)
        ),
        Verdict::Violated(_)
    ));
    assert!(matches!(
        in_range(&rat(64), &rat(64), &BigInt::from(3), &BigInt::from(3)),
        Verdict::Violated(_)
    ));
}
