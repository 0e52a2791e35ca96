//! Simulating multiplication with a fixed polynomial gate.

use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;

use super::TransformError;
use crate::circuit::{
    depth_normalize_traced, Basis, BasisFn, Builder, Circuit, ConstValue, GateId, GateKind,
};
use crate::poly::Poly;

const ALPHA: &str = "alpha";
const P: &str = "p";

/// `Δ_α^k[p]` with `Δ_α[f](x) = f(x + α) - f(x)`.
pub fn delta_power(p: &Poly, alpha: &BigRational, k: usize) -> Poly {
    let mut q = p.clone();
    for _ in 0..k {
        q = q.shift(alpha).sub(&q);
    }
    q
}

/// Leading coefficient `a` of `r(x) = q(2x) - 2q(x) + q(0) = a x^2` for
/// `q = Δ_α^(d-2)[p]`. Its sign decides whether `r` is negated.
pub fn normal_form_coefficient(
    p: &Poly,
    alpha: &BigRational,
) -> Result<BigRational, TransformError> {
    let d = check_params(p, alpha)?;
    let q = delta_power(p, alpha, d - 2);
    let two = BigRational::from_integer(BigInt::from(2));
    let r = q
        .dilate(&two)
        .sub(&q.scale(&two))
        .add(&Poly::constant(q.coeff(0)));
    debug_assert_eq!(r.degree(), Some(2));
    Ok(r.coeff(2))
}

/// `(2a)^(2^depth - 1) α^(2^depth)`: the factor between a gate at `depth`
/// of the normalized input and its image.
pub fn scaling_factor(a: &BigRational, alpha: &BigRational, depth: u32) -> BigRational {
    let mut k = alpha.clone();
    let two_a = a * BigRational::from_integer(BigInt::from(2));
    for _ in 0..depth {
        k = &two_a * &k * &k;
    }
    k
}

fn check_params(p: &Poly, alpha: &BigRational) -> Result<usize, TransformError> {
    match p.degree() {
        Some(d) if d >= 2 => {}
        _ => {
            return Err(TransformError::Parameter(
                "p must have degree at least 2".into(),
            ))
        }
    }
    if !alpha.is_positive() {
        return Err(TransformError::Parameter("alpha must be positive".into()));
    }
    Ok(p.degree().unwrap())
}

/// Output of [`mul_from_poly_traced`].
#[derive(Clone, Debug)]
pub struct MulPolyTrace {
    pub circuit: Circuit,
    /// Depth-normalized input.
    pub normalized: Circuit,
    /// Level of each gate of `normalized`, `None` for its zero gate.
    pub levels: Vec<Option<u32>>,
    /// Image of each gate of `normalized` in `circuit`.
    pub image: Vec<GateId>,
    /// `|a|`, the coefficient used by the scaled simulation.
    pub a: BigRational,
}

struct Emitter {
    d: usize,
    alpha: GateId,
    q0: Option<GateId>,
    negate: bool,
}

impl Emitter {
    fn q(&self, b: &mut Builder, x: GateId, k: usize) -> GateId {
        if k == 0 {
            return b.apply(P, &[x]);
        }
        let xa = b.add(x, self.alpha);
        let hi = self.q(b, xa, k - 1);
        let lo = self.q(b, x, k - 1);
        b.sub(hi, lo)
    }

    /// `|a| x^2`
    fn r(&mut self, b: &mut Builder, x: GateId) -> GateId {
        let q0 = match self.q0 {
            Some(g) => g,
            None => {
                let z = b.zero();
                let g = self.q(b, z, self.d - 2);
                self.q0 = Some(g);
                g
            }
        };
        let x2 = b.add(x, x);
        let q2 = self.q(b, x2, self.d - 2);
        let q1 = self.q(b, x, self.d - 2);
        let twice = b.add(q1, q1);
        if self.negate {
            let u = b.sub(twice, q2);
            b.sub(u, q0)
        } else {
            let s = b.sub(q2, twice);
            b.add(s, q0)
        }
    }

    /// `2|a| x y`
    fn t(&mut self, b: &mut Builder, x: GateId, y: GateId) -> GateId {
        let s = b.add(x, y);
        let rs = self.r(b, s);
        let rx = self.r(b, x);
        let ry = self.r(b, y);
        let u = b.sub(rs, rx);
        b.sub(u, ry)
    }
}

/// Rewrites a `{0, 1, +, -, ×}` circuit into one over
/// `{0, alpha, +, -, p}` with the same sign.
pub fn mul_from_poly(
    c: &Circuit,
    p: &Poly,
    alpha: &BigRational,
) -> Result<Circuit, TransformError> {
    mul_from_poly_traced(c, p, alpha).map(|t| t.circuit)
}

pub fn mul_from_poly_traced(
    c: &Circuit,
    p: &Poly,
    alpha: &BigRational,
) -> Result<MulPolyTrace, TransformError> {
    let d = check_params(p, alpha)?;
    for (i, g) in c.gates().iter().enumerate() {
        if !matches!(
            g.kind,
            GateKind::ConstZero
                | GateKind::ConstOne
                | GateKind::Add
                | GateKind::Sub
                | GateKind::Mul
        ) {
            return Err(TransformError::Disallowed {
                gate: GateId(i as u32),
                kind: g.kind.mnemonic(),
            });
        }
    }
    let a = normal_form_coefficient(p, alpha)?;
    let nf = depth_normalize_traced(c)?;
    let basis = Basis::new("mulpoly", Default::default())
        .with_constant(ALPHA, ConstValue::Rational(alpha.clone()))
        .with_function(P, BasisFn::Polynomial(p.clone()));
    let mut b = Builder::new(Arc::new(basis));
    let alpha_gate = b.named(ALPHA);
    let mut em = Emitter {
        d,
        alpha: alpha_gate,
        q0: None,
        negate: a.is_negative(),
    };
    // k_i = scaling factor of level i, built on demand.
    let mut ks: Vec<GateId> = vec![alpha_gate];
    let mut image: Vec<GateId> = Vec::with_capacity(nf.circuit.size());
    for (i, g) in nf.circuit.gates().iter().enumerate() {
        let x = |k: usize| image[g.inputs[k].index()];
        let id = match g.kind {
            GateKind::ConstZero => b.zero(),
            GateKind::ConstOne => alpha_gate,
            GateKind::Mul => {
                let (u, v) = (x(0), x(1));
                em.t(&mut b, u, v)
            }
            GateKind::Add | GateKind::Sub => {
                let level = nf.levels[i].expect("arithmetic gate has a level") as usize;
                while ks.len() < level {
                    let last = *ks.last().unwrap();
                    let next = em.t(&mut b, last, last);
                    ks.push(next);
                }
                let (u, v) = (x(0), x(1));
                let s = if g.kind == GateKind::Add {
                    b.add(u, v)
                } else {
                    b.sub(u, v)
                };
                let k = ks[level - 1];
                em.t(&mut b, k, s)
            }
            _ => unreachable!(),
        };
        image.push(id);
    }
    let out = image[nf.circuit.output().index()];
    Ok(MulPolyTrace {
        circuit: b.finish(out)?,
        normalized: nf.circuit,
        levels: nf.levels,
        image,
        a: a.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse;
    use crate::eval::exact::eval_rational;
    use crate::poly::{rat, ratio};

    #[test]
    fn delta_degrees() {
        for d in 2..=5usize {
            let mut coeffs = vec![0i64; d + 1];
            coeffs[d] = 1;
            coeffs[0] = 3;
            let p = Poly::from_ints(&coeffs);
            for alpha in [rat(1), ratio(1, 2)] {
                assert_eq!(delta_power(&p, &alpha, d - 2).degree(), Some(2));
            }
        }
    }

    #[test]
    fn cube_normal_form() {
        let p = Poly::from_ints(&[0, 0, 0, 1]);
        let q = delta_power(&p, &rat(1), 1);
        assert_eq!(q, Poly::from_ints(&[1, 3, 3]));
        assert_eq!(normal_form_coefficient(&p, &rat(1)).unwrap(), rat(6));
        let sq = Poly::from_ints(&[0, 0, 1]);
        assert_eq!(normal_form_coefficient(&sq, &rat(1)).unwrap(), rat(2));
    }

    #[test]
    fn two_is_scaled() {
        let c = parse("g0 = const 1\ng1 = add g0 g0\nout g1").unwrap();
        let p = Poly::from_ints(&[0, 0, 1]);
        let t = mul_from_poly_traced(&c, &p, &rat(1)).unwrap();
        let v = eval_rational(&t.circuit).unwrap();
        assert_eq!(v, rat(2) * scaling_factor(&rat(2), &rat(1), 1));
    }

    #[test]
    fn minus_one_with_cube() {
        let c = parse("g0 = const 0\ng1 = const 1\ng2 = sub g0 g1\nout g2").unwrap();
        let p = Poly::from_ints(&[0, 0, 0, 1]);
        let out = mul_from_poly(&c, &p, &rat(1)).unwrap();
        assert!(eval_rational(&out).unwrap() < rat(0));
    }

    #[test]
    fn zero_maps_to_zero() {
        let c = parse("g0 = const 0\nout g0").unwrap();
        let out = mul_from_poly(&c, &Poly::from_ints(&[1, -1, 0, 1]), &ratio(1, 2)).unwrap();
        assert_eq!(eval_rational(&out).unwrap(), rat(0));
    }

    #[test]
    fn negative_leading_coefficient() {
        let c =
            parse("g0 = const 1\ng1 = add g0 g0\ng2 = mul g1 g1\ng3 = sub g0 g2\nout g3").unwrap();
        let p = Poly::from_ints(&[0, 0, -1]);
        let t = mul_from_poly_traced(&c, &p, &rat(1)).unwrap();
        assert_eq!(t.a, rat(2));
        let v = eval_rational(&t.circuit).unwrap();
        assert!(v < rat(0));
        for (g, level) in t.levels.iter().enumerate() {
            let orig = eval_rational(&t.normalized.subcircuit(GateId(g as u32))).unwrap();
            let img = eval_rational(&t.circuit.subcircuit(t.image[g])).unwrap();
            let s = level.map_or(rat(1), |l| scaling_factor(&t.a, &rat(1), l));
            assert_eq!(img, orig * s);
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        let c = parse("g0 = const 1\nout g0").unwrap();
        assert!(mul_from_poly(&c, &Poly::from_ints(&[0, 1]), &rat(1)).is_err());
        assert!(mul_from_poly(&c, &Poly::from_ints(&[0, 0, 1]), &rat(0)).is_err());
        let c = parse("g0 = const 1\ng1 = root1 g0 g0\nout g1").unwrap();
        assert!(matches!(
            mul_from_poly(&c, &Poly::from_ints(&[0, 0, 1]), &rat(1)),
            Err(TransformError::Disallowed { .. })
        ));
    }
}
