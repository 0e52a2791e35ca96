//! Exact evaluation of circuits whose values are rational.
//!
//! Values stay dyadic as long as every operation allows it, which avoids gcd
//! work on the large power-of-two denominators produced by the transforms.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed};
use thiserror::Error;

use super::{Dyadic, Sign};
use crate::circuit::{BasisFn, Circuit, ConstValue, GateId, GateKind};
use crate::poly::{rational_bits, rational_sqrt};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExactError {
    #[error("{gate}: value is irrational")]
    NotRational { gate: GateId },
    #[error("{gate}: {kind} cannot be evaluated exactly")]
    Unsupported { gate: GateId, kind: String },
    #[error("{gate}: value needs more than {cap} bits")]
    TooLarge { gate: GateId, cap: u64 },
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Exact {
    Dyadic(Dyadic),
    Rational(BigRational),
}

impl Exact {
    pub fn zero() -> Exact {
        Exact::Dyadic(Dyadic::zero())
    }

    pub fn from_rational(q: BigRational) -> Exact {
        match Dyadic::from_dyadic_rational(&q) {
            Some(d) => Exact::Dyadic(d.normalized()),
            None => Exact::Rational(q),
        }
    }

    pub fn sign(&self) -> Sign {
        match self {
            Exact::Dyadic(d) => d.signum(),
            Exact::Rational(q) => Sign::of(q),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.sign() == Sign::Zero
    }

    pub fn to_rational(&self) -> BigRational {
        match self {
            Exact::Dyadic(d) => d.to_rational(),
            Exact::Rational(q) => q.clone(),
        }
    }

    pub fn bits(&self) -> u64 {
        match self {
            Exact::Dyadic(d) => d.bit_size(),
            Exact::Rational(q) => rational_bits(q),
        }
    }

    pub fn neg(&self) -> Exact {
        match self {
            Exact::Dyadic(d) => Exact::Dyadic(d.neg()),
            Exact::Rational(q) => Exact::Rational(-q),
        }
    }

    pub fn add(&self, other: &Exact) -> Exact {
        match (self, other) {
            (Exact::Dyadic(a), Exact::Dyadic(b)) => Exact::Dyadic(a.add_exact(b).normalized()),
            _ => Exact::from_rational(self.to_rational() + other.to_rational()),
        }
    }

    pub fn sub(&self, other: &Exact) -> Exact {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Exact) -> Exact {
        match (self, other) {
            (Exact::Dyadic(a), Exact::Dyadic(b)) => Exact::Dyadic(a.mul_exact(b).normalized()),
            _ => Exact::from_rational(self.to_rational() * other.to_rational()),
        }
    }

    /// `None` when dividing by zero.
    pub fn div(&self, other: &Exact) -> Option<Exact> {
        if other.is_zero() {
            return None;
        }
        if let Exact::Dyadic(b) = other {
            if b.mantissa().abs().is_one() {
                let inv = Exact::Dyadic(Dyadic::new(b.mantissa().clone(), -b.exponent()));
                return Some(self.mul(&inv));
            }
        }
        Some(Exact::from_rational(
            self.to_rational() / other.to_rational(),
        ))
    }

    fn scale_int(&self, k: i64) -> Exact {
        self.mul(&Exact::Dyadic(Dyadic::from_int(k)))
    }
}

impl From<BigRational> for Exact {
    fn from(q: BigRational) -> Self {
        Exact::from_rational(q)
    }
}

/// Largest real root of a rational polynomial of degree at most 2, or 0.
/// `Err(())` when the root is irrational.
fn rational_root(a: &[Exact]) -> Result<Exact, ()> {
    let linear = |a0: &Exact, a1: &Exact| match a1.is_zero() {
        true => Exact::zero(),
        false => a0.neg().div(a1).unwrap(),
    };
    match a.len() {
        2 => Ok(linear(&a[0], &a[1])),
        3 => {
            if a[2].is_zero() {
                return Ok(linear(&a[0], &a[1]));
            }
            let disc = a[1].mul(&a[1]).sub(&a[0].mul(&a[2]).scale_int(4));
            let two_a2 = a[2].scale_int(2);
            match disc.sign() {
                Sign::Neg => Ok(Exact::zero()),
                Sign::Zero => Ok(a[1].neg().div(&two_a2).unwrap()),
                Sign::Pos => {
                    let s = rational_sqrt(&disc.to_rational()).ok_or(())?;
                    let s = Exact::from_rational(s);
                    let s = if a[2].sign() == Sign::Pos { s } else { s.neg() };
                    Ok(a[1].neg().add(&s).div(&two_a2).unwrap())
                }
            }
        }
        _ => Err(()),
    }
}

fn apply_poly(coeffs: &[BigRational], x: &Exact) -> Exact {
    let mut acc = Exact::zero();
    for c in coeffs.iter().rev() {
        acc = acc.mul(x).add(&Exact::from_rational(c.clone()));
    }
    acc
}

/// Per-gate exact values. Gates whose value is irrational, unsupported or
/// larger than `cap` bits carry an error; a choice gate only needs its guard
/// and the selected branch.
pub fn exact_values(circuit: &Circuit, cap: Option<u64>) -> Vec<Result<Exact, ExactError>> {
    let basis = circuit.basis();
    let mut vals: Vec<Result<Exact, ExactError>> = Vec::with_capacity(circuit.size());
    for (i, g) in circuit.gates().iter().enumerate() {
        let gate = GateId(i as u32);
        let unsupported = || ExactError::Unsupported {
            gate,
            kind: g.kind.mnemonic(),
        };
        let arg = |k: usize| vals[g.inputs[k].index()].clone();
        let v: Result<Exact, ExactError> = (|| match &g.kind {
            GateKind::ConstZero => Ok(Exact::zero()),
            GateKind::ConstOne => Ok(Exact::Dyadic(Dyadic::from_int(1))),
            GateKind::ConstRational(q) => Ok(Exact::from_rational(q.clone())),
            GateKind::ConstNamed(name) => match basis.constant(name) {
                Some(ConstValue::Rational(q)) => Ok(Exact::from_rational(q.clone())),
                _ => Err(unsupported()),
            },
            GateKind::Add => Ok(arg(0)?.add(&arg(1)?)),
            GateKind::Sub => Ok(arg(0)?.sub(&arg(1)?)),
            GateKind::Mul => Ok(arg(0)?.mul(&arg(1)?)),
            GateKind::Ch => {
                let k = match arg(0)?.sign() {
                    Sign::Neg => 1,
                    Sign::Zero => 2,
                    Sign::Pos => 3,
                };
                arg(k)
            }
            GateKind::Root(_) => {
                let a: Vec<Exact> = (0..g.inputs.len()).map(arg).collect::<Result<_, _>>()?;
                rational_root(&a).map_err(|_| {
                    if a.len() <= 3 {
                        ExactError::NotRational { gate }
                    } else {
                        unsupported()
                    }
                })
            }
            GateKind::Apply(name) => match basis.function(name).and_then(BasisFn::polynomial) {
                Some(p) => Ok(apply_poly(p.coeffs(), &arg(0)?)),
                None => Err(unsupported()),
            },
            GateKind::Input(_) => Err(unsupported()),
        })();
        let v = match (v, cap) {
            (Ok(x), Some(cap)) if x.bits() > cap => Err(ExactError::TooLarge { gate, cap }),
            (v, _) => v,
        };
        vals.push(v);
    }
    vals
}

pub fn eval_exact(circuit: &Circuit) -> Result<Exact, ExactError> {
    exact_values(circuit, None).swap_remove(circuit.output().index())
}

/// Exact value of a circuit whose value is rational.
pub fn eval_rational(circuit: &Circuit) -> Result<BigRational, ExactError> {
    eval_exact(circuit).map(|e| e.to_rational())
}

/// Exact value of `2^e` as a rational, `e` possibly negative.
pub fn pow2_rational(e: i64) -> BigRational {
    if e >= 0 {
        BigRational::from_integer(BigInt::one() << e as usize)
    } else {
        BigRational::new(BigInt::one(), BigInt::one() << (-e) as usize)
    }
}
