//! Straight-line programs over semialgebraic bases.
//!
//! Closed arithmetic circuits over `B_d = {0, 1, +, -, ×, ch, r_1 .. r_d}`
//! and related bases: certified sign decision backed by per-circuit zero
//! bounds, circuit-to-circuit reductions between bases, and exact
//! evaluation over piecewise-linear bases with number-field coefficients.

pub mod circuit;
pub mod eval;
pub mod harness;
pub mod numberfield;
pub mod poly;
pub mod transforms;
pub mod zerobound;

pub use circuit::{parse, serialize, Basis, Builder, Circuit, GateId, GateKind, Template};
pub use eval::{decide_sign, eval_interval, oracle_eval, DyadicInterval, Sign};
pub use zerobound::{gap_exponent, height_bound, GapCertificate};
