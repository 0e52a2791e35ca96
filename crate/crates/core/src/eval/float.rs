//! Forward interval evaluation with a fixed number of mantissa bits.
//!
//! Exponents are unbounded in practice, so values far below any absolute
//! precision (iterated squarings of small constants) keep their relative
//! accuracy. No zero bounds are involved: a sign is reported only when the
//! enclosure excludes zero or collapses to the point zero.

use num_traits::Zero;

use super::{Dyadic, DyadicInterval, EvalError, Sign};
use crate::circuit::{BasisFn, Circuit, ConstValue, GateId, GateKind};

fn unsupported(gate: usize, what: String) -> EvalError {
    EvalError::Unsupported {
        gate: GateId(gate as u32),
        what,
    }
}

/// Enclosures of every gate at `prec` mantissa bits. `Ok(None)` when a
/// choice or division guard cannot be resolved at this precision.
pub fn float_enclosures(c: &Circuit, prec: u64) -> Result<Option<Vec<DyadicInterval>>, EvalError> {
    let basis = c.basis();
    let mut vals: Vec<DyadicInterval> = Vec::with_capacity(c.size());
    for (i, g) in c.gates().iter().enumerate() {
        let v = |k: usize| &vals[g.inputs[k].index()];
        let x = match &g.kind {
            GateKind::ConstZero => DyadicInterval::zero(prec),
            GateKind::ConstOne => DyadicInterval::point(Dyadic::from_int(1), prec),
            GateKind::ConstRational(q) => DyadicInterval::from_rational(q, prec),
            GateKind::ConstNamed(n) => match basis.constant(n) {
                Some(ConstValue::Rational(q)) => DyadicInterval::from_rational(q, prec),
                _ => return Err(unsupported(i, format!("constant {n}"))),
            },
            GateKind::Add => v(0).add(v(1), prec),
            GateKind::Sub => v(0).sub(v(1), prec),
            GateKind::Mul => v(0).mul(v(1), prec),
            GateKind::Ch => match v(0).strict_sign() {
                Some(Sign::Neg) => v(1).clone(),
                Some(Sign::Zero) => v(2).clone(),
                Some(Sign::Pos) => v(3).clone(),
                None => return Ok(None),
            },
            GateKind::Root(1) => match v(1).strict_sign() {
                Some(Sign::Zero) => DyadicInterval::zero(prec),
                Some(_) => v(0).neg().div(v(1), prec).expect("divisor excludes zero"),
                None => return Ok(None),
            },
            GateKind::Apply(name) => match basis.function(name).and_then(BasisFn::polynomial) {
                Some(p) => {
                    let x = v(0);
                    let mut acc = DyadicInterval::zero(prec);
                    for coeff in p.coeffs().iter().rev() {
                        acc = acc.mul(x, prec);
                        if !coeff.is_zero() {
                            acc = acc.add(&DyadicInterval::from_rational(coeff, prec), prec);
                        }
                    }
                    acc
                }
                None => return Err(unsupported(i, format!("function {name}"))),
            },
            kind => return Err(unsupported(i, kind.mnemonic())),
        };
        vals.push(x);
    }
    Ok(Some(vals))
}

/// Output enclosure, doubling the precision from 64 bits until every guard
/// resolves and the enclosure is no wider than `2^-rel_bits` times its
/// magnitude, or `max_prec` is reached.
pub fn float_enclosure(
    c: &Circuit,
    rel_bits: u64,
    max_prec: u64,
) -> Result<DyadicInterval, EvalError> {
    let mut prec = 64.max(rel_bits + 8);
    loop {
        if let Some(mut vals) = float_enclosures(c, prec)? {
            let out = vals.swap_remove(c.output().index());
            if relative_width_ok(&out, rel_bits) {
                return Ok(out);
            }
        }
        if prec >= max_prec {
            return Err(EvalError::PrecisionExhausted {
                gate: c.output(),
                cap: max_prec,
            });
        }
        prec = (prec * 2).min(max_prec);
    }
}

fn relative_width_ok(x: &DyadicInterval, rel_bits: u64) -> bool {
    if x.lo().is_zero() && x.hi().is_zero() {
        return true;
    }
    if x.contains_zero() {
        return false;
    }
    let mag = x.lo().abs().min(x.hi().abs());
    let w = x.width();
    w.is_zero() || w.top() + (rel_bits as i64) < mag.top()
}

/// Sign of the output when some precision up to `max_prec` separates it
/// from zero. Values that are exactly zero are only recognized when the
/// enclosure collapses to a point.
pub fn float_sign(c: &Circuit, max_prec: u64) -> Result<Sign, EvalError> {
    let mut prec = 64;
    loop {
        if let Some(vals) = float_enclosures(c, prec)? {
            if let Some(s) = vals[c.output().index()].strict_sign() {
                return Ok(s);
            }
        }
        if prec >= max_prec {
            return Err(EvalError::PrecisionExhausted {
                gate: c.output(),
                cap: max_prec,
            });
        }
        prec = (prec * 2).min(max_prec);
    }
}
