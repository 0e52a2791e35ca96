//! Random circuit generation and differential testing of the passes.

mod generate;
mod verify;

pub use generate::{
    default_weights, format_weights, parse_weights, random_circuit, GenError, GenKind,
    GeneratorParams, Weights,
};
pub use verify::{
    case_params, differential_verify, growth_exponent, reference_sign, replay, run_case,
    CaseOutcome, Contract, Disagreement, Pass, PassFn, SizeStats, VerifyReport,
};

/// Piecewise-linear basis over `Q(√2)` with `abs`, `max` and constants.
pub const Q_SQRT2_BASIS: &str = include_str!("../../bases/q_sqrt2.basis");
/// Piecewise-linear basis over `Q(∛2)` with `abs`, `max` and constants.
pub const Q_CBRT2_BASIS: &str = include_str!("../../bases/q_cbrt2.basis");
/// `f(x) = x^2 + x^3` with `α = 1`, `β = 1/2` and `k = 1/4`.
pub const SQFROMF_BASIS: &str = include_str!("../../bases/sqfromf.basis");
