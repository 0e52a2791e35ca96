//! Circuit-to-circuit reductions between bases.

mod mulpoly;
mod newton;
mod regularize;
mod sqfromf;

pub use mulpoly::{
    delta_power, mul_from_poly, mul_from_poly_traced, normal_form_coefficient, scaling_factor,
    MulPolyTrace,
};
pub use newton::{
    build_bisection, build_newton_iterate, eliminate_roots, eliminate_roots_traced, ErrorBudget,
};
pub use regularize::{regularize, regularize_size_bound, strict_guards, REGULARIZE_SIZE_CONSTANT};
pub use sqfromf::{square_from_unary, square_from_unary_traced, SqTrace, UnaryAlmostSquareSpec};

use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::circuit::{Builder, CircuitError, GateId};
use crate::zerobound::BoundError;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TransformError {
    #[error("{gate}: {kind} is not allowed in the input of this pass")]
    Disallowed { gate: GateId, kind: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("error budget exponent {0} does not fit the construction")]
    BudgetOverflow(BigInt),
    #[error(transparent)]
    Bound(#[from] BoundError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Powers of two inside one builder: the chain `2^(2^j)` by iterated
/// squaring, and `2^e` for any integer `e` as a product over the binary
/// digits of `|e|` (a division by `root1` for negative `e`).
#[derive(Default)]
pub(crate) struct Powers {
    chain: Vec<GateId>,
    memo: HashMap<BigInt, GateId>,
}

impl Powers {
    /// `2^(2^j)`
    pub(crate) fn tower(&mut self, b: &mut Builder, j: usize) -> GateId {
        if self.chain.is_empty() {
            let one = b.one();
            let two = b.add(one, one);
            self.chain.push(two);
        }
        while self.chain.len() <= j {
            let last = *self.chain.last().unwrap();
            let sq = b.mul(last, last);
            self.chain.push(sq);
        }
        self.chain[j]
    }

    /// `2^e`; negative exponents need `root1` in the basis.
    pub(crate) fn pow2(&mut self, b: &mut Builder, e: &BigInt) -> GateId {
        if let Some(&g) = self.memo.get(e) {
            return g;
        }
        let g = if e.is_zero() {
            b.one()
        } else if e.is_negative() {
            let pos = self.pow2(b, &-e);
            let one = b.one();
            let m1 = b.neg(one);
            b.root(&[m1, pos])
        } else {
            let mut acc: Option<GateId> = None;
            for j in 0..e.bits() as usize {
                if e.bit(j as u64) {
                    let p = self.tower(b, j);
                    acc = Some(match acc {
                        None => p,
                        Some(a) => b.mul(a, p),
                    });
                }
            }
            acc.unwrap()
        };
        self.memo.insert(e.clone(), g);
        g
    }
}
