//! Per-gate zero-gap and magnitude certificates from Weil-height and degree
//! bounds.
//!
//! For a gate with value `v != 0`, algebraic of degree at most `deg` and
//! absolute height at most `2^logH`, we have `2^-E <= |v| <= 2^M` with
//! `E = M = ceil(deg * logH) + 1`.

use std::fmt;
use std::sync::Arc;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::circuit::{BasisFn, Circuit, ConstValue, GateId, GateKind};
use crate::poly::is_power_of_two;

/// Fractional bits of `LogBound`.
const FRAC_BITS: u32 = 8;
const UNIT: i64 = 1 << FRAC_BITS;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BoundError {
    #[error("{gate}: {kind} has no height bound")]
    Unsupported { gate: GateId, kind: String },
}

/// Upper bound on `log2 H`, in fixed point with 8 fractional bits.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LogBound(BigInt);

impl LogBound {
    pub fn zero() -> Self {
        LogBound(BigInt::zero())
    }

    pub fn from_int(n: i64) -> Self {
        LogBound(BigInt::from(n) * UNIT)
    }

    /// Upper bound on `log2 |n|` for `n != 0`; exact on powers of two.
    fn log2_int(n: &BigInt) -> LogBound {
        let n = n.abs();
        if n.is_zero() || n.is_one() {
            return LogBound::zero();
        }
        let bits = n.bits() as i64;
        if is_power_of_two(&n) {
            return LogBound::from_int(bits - 1);
        }
        // log2 n <= (bits - 53) + log2(top + 1), with top the leading 53 bits;
        // exact top when nothing was shifted out.
        let shift = (bits - 53).max(0);
        let mut top = (&n >> shift as usize).to_u64().unwrap() as f64;
        if shift > 0 {
            top += 1.0;
        }
        let frac = (top.log2() * UNIT as f64).ceil() as i64 + 1;
        LogBound(BigInt::from(shift) * UNIT + frac)
    }

    /// `log2 max(|p|, |q|)` for `p/q` in lowest terms.
    pub fn of_rational(q: &BigRational) -> LogBound {
        let a = LogBound::log2_int(q.numer());
        let b = LogBound::log2_int(q.denom());
        a.max(b)
    }

    pub fn plus(&self, other: &LogBound) -> LogBound {
        LogBound(&self.0 + &other.0)
    }

    pub fn plus_int(&self, n: i64) -> LogBound {
        LogBound(&self.0 + BigInt::from(n) * UNIT)
    }

    /// `ceil(deg * self)`
    pub fn scaled_ceil(&self, deg: &BigUint) -> BigInt {
        let prod = &self.0 * BigInt::from(deg.clone());
        let (q, r) = prod.div_mod_floor(&BigInt::from(UNIT));
        if r.is_zero() {
            q
        } else {
            q + 1
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::INFINITY) / UNIT as f64
    }
}

impl fmt::Debug for LogBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}", self.to_f64())
    }
}

/// Height and degree bound of one (possibly virtual) expression.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct HeightBound {
    pub log_h: LogBound,
    /// Root gates of degree at least 2 the value depends on, sorted by gate.
    support: Arc<Vec<(u32, u32)>>,
}

impl HeightBound {
    pub fn constant(q: &BigRational) -> Self {
        HeightBound {
            log_h: LogBound::of_rational(q),
            support: Arc::new(Vec::new()),
        }
    }

    pub fn int(n: i64) -> Self {
        HeightBound::constant(&BigRational::from_integer(BigInt::from(n)))
    }

    fn union(a: &Arc<Vec<(u32, u32)>>, b: &Arc<Vec<(u32, u32)>>) -> Arc<Vec<(u32, u32)>> {
        if b.is_empty() || Arc::ptr_eq(a, b) {
            return a.clone();
        }
        if a.is_empty() {
            return b.clone();
        }
        let mut v: Vec<(u32, u32)> = a.iter().chain(b.iter()).copied().collect();
        v.sort_unstable();
        v.dedup();
        Arc::new(v)
    }

    /// `a ± b`: `H <= 2 H(a) H(b)`.
    pub fn add(&self, other: &HeightBound) -> Self {
        HeightBound {
            log_h: self.log_h.plus(&other.log_h).plus_int(1),
            support: Self::union(&self.support, &other.support),
        }
    }

    /// `a × b` and `a / b`: `H <= H(a) H(b)`.
    pub fn mul(&self, other: &HeightBound) -> Self {
        HeightBound {
            log_h: self.log_h.plus(&other.log_h),
            support: Self::union(&self.support, &other.support),
        }
    }

    /// A value equal to one of the given ones.
    pub fn choice(options: &[&HeightBound]) -> Self {
        let mut out = options[0].clone();
        for o in &options[1..] {
            out.log_h = out.log_h.max(o.log_h.clone());
            out.support = Self::union(&out.support, &o.support);
        }
        out
    }

    /// Largest real root of a degree-`delta` polynomial at gate `gate`:
    /// `H <= 2^delta ∏ H(a_i)`.
    pub fn root(gate: u32, delta: u32, coeffs: &[&HeightBound]) -> Self {
        let mut log_h = LogBound::from_int(delta as i64);
        let mut support = Arc::new(Vec::new());
        for c in coeffs {
            log_h = log_h.plus(&c.log_h);
            support = Self::union(&support, &c.support);
        }
        if delta >= 2 {
            support = Self::union(&support, &Arc::new(vec![(gate, delta)]));
        }
        HeightBound { log_h, support }
    }

    /// Horner evaluation of a rational polynomial at this value.
    pub fn poly(&self, coeffs: &[BigRational]) -> Self {
        let mut acc: Option<HeightBound> = None;
        for c in coeffs.iter().rev() {
            let next = match acc {
                None => HeightBound::constant(c),
                Some(a) => {
                    let ax = a.mul(self);
                    if c.is_zero() {
                        ax
                    } else {
                        ax.add(&HeightBound::constant(c))
                    }
                }
            };
            acc = Some(next);
        }
        acc.unwrap_or_else(|| HeightBound::int(0))
    }

    /// Product of the root degrees in the support.
    pub fn deg_bound(&self) -> BigUint {
        self.support
            .iter()
            .fold(BigUint::one(), |acc, &(_, d)| acc * BigUint::from(d))
    }

    /// `ceil(deg * logH) + 1`
    pub fn gap_exp(&self) -> BigInt {
        self.log_h.scaled_ceil(&self.deg_bound()) + 1
    }

    /// Same quantity as `gap_exp`; the bound is symmetric.
    pub fn mag_exp(&self) -> BigInt {
        self.gap_exp()
    }
}

/// Per-gate bounds, `None` where no bound is available (PWL applications,
/// number-field constants, placeholders).
pub fn height_bound_partial(circuit: &Circuit) -> Vec<Option<HeightBound>> {
    let basis = circuit.basis();
    let mut out: Vec<Option<HeightBound>> = Vec::with_capacity(circuit.size());
    for (i, g) in circuit.gates().iter().enumerate() {
        let inp: Option<Vec<&HeightBound>> =
            g.inputs.iter().map(|x| out[x.index()].as_ref()).collect();
        let hb = match (&g.kind, inp) {
            (GateKind::ConstZero | GateKind::ConstOne, _) => Some(HeightBound::int(0)),
            (GateKind::ConstRational(q), _) => Some(HeightBound::constant(q)),
            (GateKind::ConstNamed(name), _) => match basis.constant(name) {
                Some(ConstValue::Rational(q)) => Some(HeightBound::constant(q)),
                _ => None,
            },
            (GateKind::Add | GateKind::Sub, Some(v)) => Some(v[0].add(v[1])),
            (GateKind::Mul, Some(v)) => Some(v[0].mul(v[1])),
            (GateKind::Root(d), Some(v)) => Some(HeightBound::root(i as u32, *d, &v)),
            (GateKind::Apply(name), Some(v)) => basis
                .function(name)
                .and_then(BasisFn::polynomial)
                .map(|p| v[0].poly(p.coeffs())),
            // Only the branches matter for the value of a choice gate.
            (GateKind::Ch, _) => {
                let br: Option<Vec<&HeightBound>> = g.inputs[1..]
                    .iter()
                    .map(|x| out[x.index()].as_ref())
                    .collect();
                br.map(|b| HeightBound::choice(&b))
            }
            _ => None,
        };
        out.push(hb);
    }
    out
}

/// Per-gate `(logH, degBound)` for circuits over `B_d`, rational constants
/// and unary polynomial functions.
pub fn height_bound(circuit: &Circuit) -> Result<Vec<HeightBound>, BoundError> {
    height_bound_partial(circuit)
        .into_iter()
        .enumerate()
        .map(|(i, h)| {
            h.ok_or_else(|| BoundError::Unsupported {
                gate: GateId(i as u32),
                kind: circuit.gates()[i].kind.mnemonic(),
            })
        })
        .collect()
}

/// Per-gate certificate for a whole circuit.
#[derive(Clone, Debug)]
pub struct GapCertificate {
    pub bounds: Vec<HeightBound>,
}

impl GapCertificate {
    pub fn new(circuit: &Circuit) -> Result<Self, BoundError> {
        Ok(GapCertificate {
            bounds: height_bound(circuit)?,
        })
    }

    pub fn gap_exp(&self, g: GateId) -> BigInt {
        self.bounds[g.index()].gap_exp()
    }

    pub fn mag_exp(&self, g: GateId) -> BigInt {
        self.bounds[g.index()].mag_exp()
    }

    pub fn log_h(&self, g: GateId) -> &LogBound {
        &self.bounds[g.index()].log_h
    }

    pub fn deg_bound(&self, g: GateId) -> BigUint {
        self.bounds[g.index()].deg_bound()
    }
}

/// `(E, M)` for the output gate.
pub fn gap_exponent(circuit: &Circuit) -> Result<(BigInt, BigInt), BoundError> {
    let b = height_bound(circuit)?;
    let out = &b[circuit.output().index()];
    Ok((out.gap_exp(), out.mag_exp()))
}
