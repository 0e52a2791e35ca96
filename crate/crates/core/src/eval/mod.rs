//! Certified evaluation and sign decision.

pub mod dyadic;
mod evaluator;
pub mod exact;
pub mod float;
pub mod oracle;

pub use dyadic::{Dyadic, DyadicInterval, Round};
pub use evaluator::{root_enclosure, CoefficientSource, EvalConfig, Evaluator, ExactCoefficients};
pub use oracle::oracle_eval;

use std::fmt;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::circuit::{Circuit, GateId};

use crate::zerobound::BoundError;

const FLOAT_FIRST_BITS: u64 = 512;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum Sign {
    Neg,
    Zero,
    Pos,
}

impl Sign {
    pub fn of(q: &BigRational) -> Sign {
        if q.is_zero() {
            Sign::Zero
        } else if q.is_positive() {
            Sign::Pos
        } else {
            Sign::Neg
        }
    }

    pub fn negate(self) -> Sign {
        match self {
            Sign::Neg => Sign::Pos,
            Sign::Zero => Sign::Zero,
            Sign::Pos => Sign::Neg,
        }
    }

    pub fn times(self, other: Sign) -> Sign {
        match (self, other) {
            (Sign::Zero, _) | (_, Sign::Zero) => Sign::Zero,
            (a, b) if a == b => Sign::Pos,
            _ => Sign::Neg,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Sign::Neg => "NEG",
            Sign::Zero => "ZERO",
            Sign::Pos => "POS",
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("{gate}: precision cap of {cap} bits reached")]
    PrecisionExhausted { gate: GateId, cap: u64 },
    #[error("{gate}: {what} is not supported by this evaluator")]
    Unsupported { gate: GateId, what: String },
    #[error(transparent)]
    Bound(#[from] BoundError),
}

/// Enclosure of the circuit value at working precision `bits + 16`.
pub fn eval_interval(circuit: &Circuit, bits: u64) -> Result<DyadicInterval, EvalError> {
    let mut ev = Evaluator::new(circuit, EvalConfig::default());
    ev.interval(circuit.output(), bits + 16)
}

/// Exact three-way sign of the circuit value.
/// Piecewise-linear bases are decided exactly in their number field.
/// Otherwise a cheap fixed-precision pass settles most nonzero values first.
pub fn decide_sign(circuit: &Circuit) -> Result<Sign, EvalError> {
    if circuit.basis().field().is_some() {
        return crate::numberfield::pwl_decide_sign(circuit).map_err(|e| EvalError::Unsupported {
            gate: circuit.output(),
            what: e.to_string(),
        });
    }
    if let Ok(s) = float::float_sign(circuit, FLOAT_FIRST_BITS) {
        return Ok(s);
    }
    Evaluator::new(circuit, EvalConfig::default()).decide_sign()
}
