//! Elimination of `root2` gates by compiled Newton iteration.

use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

use super::regularize::{ensure_b2, output_basis, regularize};
use super::{Powers, TransformError};
use crate::circuit::{Basis, Builder, Circuit, GateId, GateKind, Template};
use crate::zerobound::{height_bound, HeightBound};

/// Largest per-root-gate exponent the construction accepts.
const MAX_BUDGET: u64 = 1 << 40;

fn template_builder() -> Builder {
    Builder::new(Arc::new(Basis::b(1)))
}

/// One Newton step `x - p(x) / p'(x)` for `p = a0 + a1 x + a2 x^2`, written
/// as `root1(a0 - a2 x^2, 2 a2 x + a1)`.
fn newton_step(b: &mut Builder, x: GateId, a0: GateId, a1: GateId, a2: GateId) -> GateId {
    let x2 = b.mul(x, x);
    let a2x2 = b.mul(a2, x2);
    let num = b.sub(a0, a2x2);
    let a2x = b.mul(a2, x);
    let t = b.add(a2x, a2x);
    let den = b.add(t, a1);
    b.root(&[num, den])
}

/// Template `N^k_d(x0, a0 .. a_d)`: `k` Newton iterations for the
/// polynomial `Σ a_i x^i` starting at `x0`, over `B_{d-1}`.
pub fn build_newton_iterate(d: u32, k: usize) -> Result<Template, TransformError> {
    if d != 2 {
        return Err(TransformError::Unsupported(format!(
            "Newton template for degree {d}"
        )));
    }
    if k == 0 {
        return Err(TransformError::Parameter(
            "iteration count must be positive".into(),
        ));
    }
    let mut b = template_builder();
    let inputs: Vec<GateId> = (0..4).map(|i| b.input(i)).collect();
    let mut x = inputs[0];
    for _ in 0..k {
        x = newton_step(&mut b, x, inputs[1], inputs[2], inputs[3]);
    }
    Ok(b.into_template(4, x))
}

/// Template `g(t)` returning a power of two `X` with `f_t(X) f_t(2X) <= 0`,
/// where `f` is a template whose input 0 is `x` and whose remaining inputs
/// are the parameters `t`. Requires `f_t` monotone on `[2^lo, 2^hi]` with
/// `f_t(2^lo) f_t(2^hi) <= 0`. The exponent is found digit by digit from
/// the most significant one, so the size grows with `log2(hi - lo)`.
pub fn build_bisection(f: &Template, lo: i64, hi: i64) -> Result<Template, TransformError> {
    if f.arity() == 0 {
        return Err(TransformError::Parameter(
            "bisection needs a template with an x input".into(),
        ));
    }
    if lo >= hi {
        return Err(TransformError::Parameter(format!(
            "empty exponent range [{lo}, {hi}]"
        )));
    }
    let m = f.arity() - 1;
    let mut b = template_builder();
    let params: Vec<GateId> = (0..m).map(|i| b.input(i)).collect();
    let mut powers = Powers::default();
    let call = |b: &mut Builder, x: GateId| {
        let mut args = vec![x];
        args.extend(&params);
        b.instantiate(f, &args)
    };
    let start = powers.pow2(&mut b, &BigInt::from(lo));
    let f0 = call(&mut b, start);
    let limit = powers.pow2(&mut b, &BigInt::from(hi - 1));
    let span = (hi - lo) as u64;
    let digits = 64 - (span - 1).leading_zeros() as usize;
    let mut x = start;
    for j in (0..digits).rev() {
        let step = powers.tower(&mut b, j);
        let cand = b.mul(x, step);
        let v = call(&mut b, cand);
        let same = b.mul(v, f0);
        let take = b.ch(same, x, x, cand);
        let room = b.sub(limit, cand);
        x = b.ch(room, x, take, take);
    }
    Ok(b.into_template(m, x))
}

/// Per-circuit replacement for the uniform constants of the perturbation
/// argument. Every compiled `root2` gate is accurate to `2^-per_root_gate_exp`;
/// gate `g` of the regularized circuit is then computed with error at most
/// `2^(amplification[g] - per_root_gate_exp)` (`None`: computed exactly).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ErrorBudget {
    pub per_root_gate_exp: BigInt,
    pub output_gap_exp: BigInt,
    pub amplification: Vec<Option<BigInt>>,
}

fn opt_max(xs: impl IntoIterator<Item = Option<BigInt>>) -> Option<BigInt> {
    xs.into_iter().flatten().max()
}

fn root2_derivative_gap(h: &[HeightBound], a: &[GateId], g: usize) -> BigInt {
    let d = HeightBound::int(2)
        .mul(&h[a[2].index()])
        .mul(&h[g])
        .add(&h[a[1].index()]);
    d.gap_exp()
}

impl ErrorBudget {
    /// Budget for a regularized `B_2` circuit.
    pub fn compute(cbar: &Circuit) -> Result<ErrorBudget, TransformError> {
        let h = height_bound(cbar)?;
        let e = |g: GateId| h[g.index()].gap_exp();
        let m = |g: GateId| h[g.index()].mag_exp();
        let mut amp: Vec<Option<BigInt>> = Vec::with_capacity(cbar.size());
        let mut need: Vec<BigInt> = vec![BigInt::one()];
        for (i, gate) in cbar.gates().iter().enumerate() {
            let a = &gate.inputs;
            let av = |k: usize| amp[a[k].index()].clone();
            let v = match gate.kind {
                GateKind::Add | GateKind::Sub => opt_max([av(0), av(1)]).map(|x| x + 1),
                GateKind::Mul => {
                    opt_max([av(1).map(|x| m(a[0]) + x), av(0).map(|x| m(a[1]) + x)]).map(|x| x + 2)
                }
                GateKind::Ch => {
                    if let Some(x) = av(0) {
                        need.push(x + 1);
                    }
                    opt_max([av(1), av(2), av(3)])
                }
                GateKind::Root(1) => {
                    let e1 = e(a[1]);
                    if let Some(x) = av(1) {
                        need.push(&x + &e1 + 1);
                    }
                    opt_max([av(0).map(|x| x + &e1), av(1).map(|x| m(a[0]) + x + 2 * &e1)])
                        .map(|x| x + 3)
                }
                GateKind::Root(2) => {
                    let zeta = GateId(i as u32);
                    match opt_max([av(0), av(1), av(2)]) {
                        None => Some(BigInt::one()),
                        Some(ain) => {
                            let eg = root2_derivative_gap(&h, a, i);
                            let mz2 = 2 * m(zeta);
                            need.push(&ain + &mz2 + 2 * &eg + m(a[2]) + 8);
                            if let Some(x) = av(2) {
                                need.push(x + e(a[2]) + 1);
                            }
                            let base: BigInt = ain + mz2 + eg + 6;
                            Some(base.max(BigInt::zero()) + 1)
                        }
                    }
                }
                GateKind::Root(d) => return Err(TransformError::Unsupported(format!("root{d}"))),
                _ if gate.kind.is_constant() => None,
                _ => {
                    return Err(TransformError::Disallowed {
                        gate: GateId(i as u32),
                        kind: gate.kind.mnemonic(),
                    })
                }
            };
            if let Some(x) = &v {
                need.push(x.clone());
            }
            amp.push(v);
        }
        let out = cbar.output();
        let output_gap_exp = e(out);
        if let Some(x) = &amp[out.index()] {
            need.push(x + &output_gap_exp + 2);
        }
        Ok(ErrorBudget {
            per_root_gate_exp: need.into_iter().max().unwrap(),
            output_gap_exp,
            amplification: amp,
        })
    }
}

fn small(n: &BigInt) -> Result<i64, TransformError> {
    match n.to_u64() {
        Some(x) if x <= MAX_BUDGET => Ok(x as i64),
        _ => Err(TransformError::BudgetOverflow(n.clone())),
    }
}

fn ceil_log2(n: u64) -> usize {
    64 - n.saturating_sub(1).leading_zeros() as usize
}

/// Rewrites a `B_2` circuit into a `B_1` circuit that is positive exactly
/// when the input is. The output carries the half-gap shift, so its
/// zero/negative distinction is not meaningful.
pub fn eliminate_roots(c: &Circuit) -> Result<Circuit, TransformError> {
    eliminate_roots_traced(c).map(|(out, _)| out)
}

/// As [`eliminate_roots`], also returning the budget used.
pub fn eliminate_roots_traced(c: &Circuit) -> Result<(Circuit, ErrorBudget), TransformError> {
    ensure_b2(c)?;
    let cbar = regularize(c)?;
    let budget = ErrorBudget::compute(&cbar)?;
    let t = small(&budget.per_root_gate_exp)?;
    let h = height_bound(&cbar)?;

    // f(a + x) = x^2 + f(a) around the vertex a of a monic quadratic.
    let shifted = {
        let mut b = template_builder();
        let x = b.input(0);
        let fa = b.input(1);
        let xx = b.mul(x, x);
        let out = b.add(xx, fa);
        b.into_template(2, out)
    };

    let mut b = Builder::new(output_basis(&cbar, 1));
    let mut powers = Powers::default();
    let mut map: Vec<GateId> = Vec::with_capacity(cbar.size());
    for (i, gate) in cbar.gates().iter().enumerate() {
        let a: Vec<GateId> = gate.inputs.iter().map(|x| map[x.index()]).collect();
        let id = match &gate.kind {
            GateKind::Root(2) => {
                let m_zeta: BigInt = h[i].mag_exp();
                let m_vertex: BigInt =
                    h[gate.inputs[1].index()].mag_exp() + h[gate.inputs[2].index()].gap_exp() + 1;
                let emax = {
                    let z: BigInt = m_zeta + 1;
                    small(&(z.max(m_vertex) + 2))
                }?;
                let seed = Seed {
                    t,
                    emax,
                    shifted: &shifted,
                };
                seed.compile(&mut b, &mut powers, a[0], a[1], a[2])?
            }
            GateKind::ConstZero => b.zero(),
            GateKind::ConstOne => b.one(),
            GateKind::ConstRational(q) => b.rational(q.clone()),
            GateKind::ConstNamed(n) => b.named(n),
            kind => b.push(kind.clone(), a),
        };
        map.push(id);
    }
    let out = map[cbar.output().index()];
    let shift = powers.pow2(&mut b, &(-&budget.output_gap_exp - 1));
    let result = b.sub(out, shift);
    Ok((b.finish(result)?, budget))
}

struct Seed<'t> {
    t: i64,
    emax: i64,
    shifted: &'t Template,
}

impl Seed<'_> {
    /// Approximation of the largest root of `a0 + a1 x + a2 x^2` within
    /// `2^-t`, assuming `a2 != 0`, a positive discriminant and a root of
    /// distance at most `2^emax` from the vertex.
    fn compile(
        &self,
        b: &mut Builder,
        powers: &mut Powers,
        a0: GateId,
        a1: GateId,
        a2: GateId,
    ) -> Result<GateId, TransformError> {
        // Monic form x^2 + q x + c0.
        let n1 = b.neg(a1);
        let q = b.root(&[n1, a2]);
        let n0 = b.neg(a0);
        let c0 = b.root(&[n0, a2]);
        let two = powers.tower(b, 0);
        let vertex = b.root(&[q, two]);
        let vv = b.mul(vertex, vertex);
        let qv = b.mul(q, vertex);
        let s = b.add(vv, qv);
        let fa = b.add(s, c0);

        let eps = powers.pow2(b, &BigInt::from(-self.t));
        let f_eps = b.instantiate(self.shifted, &[eps, fa]);
        let near = b.add(vertex, eps);

        // X with f(a + X) < 0 <= f(a + 2X).
        let bisect = build_bisection(self.shifted, -self.t, self.emax)?;
        let x = b.instantiate(&bisect, &[fa]);
        let lo = b.add(vertex, x);
        let x2 = b.add(x, x);
        let hi = b.add(vertex, x2);
        let half = powers.pow2(b, &BigInt::from(-1));
        let hx = b.mul(x, half);
        let y = b.add(x, hx);
        let mid = b.add(lo, hx);
        let f_mid = b.instantiate(self.shifted, &[y, fa]);
        // [lo, mid] or [mid, hi]; the seed is the right end.
        let start = b.ch(f_mid, hi, mid, mid);

        let k = ceil_log2((self.t + self.emax + 2) as u64) + 2;
        let newton = build_newton_iterate(2, k)?;
        let one = b.one();
        let refined = b.instantiate(&newton, &[start, c0, q, one]);
        Ok(b.ch(f_eps, refined, near, near))
    }
}
