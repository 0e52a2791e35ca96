use std::fmt::Write as _;

use num_rational::BigRational;
use num_traits::Signed;
use rayon::prelude::*;
use serde::Serialize;

use super::generate::{random_circuit, GenKind, GeneratorParams};
use crate::circuit::{serialize, Basis, Circuit};
use crate::eval::dyadic::decimal_string;
use crate::eval::exact::{eval_rational, pow2_rational};
use crate::eval::oracle::{oracle_eval, oracle_sign};
use crate::eval::{decide_sign, Sign};
use crate::numberfield::pwl_decide_sign;
use crate::poly::{rat, Poly};
use crate::transforms::{
    eliminate_roots, mul_from_poly, regularize, square_from_unary, TransformError,
    UnaryAlmostSquareSpec,
};

/// What a pass promises about its output.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Contract {
    /// Same value, compared within `2^-200`.
    ValueEquality,
    /// Same three-way sign.
    SignEquality,
    /// Positive iff the input is.
    Positivity,
}

pub type PassFn = fn(&Circuit) -> Result<Circuit, TransformError>;

#[derive(Clone, Debug)]
pub enum Pass {
    Regularize,
    Newton,
    MulPoly {
        p: Poly,
        alpha: BigRational,
    },
    SqFromF(UnaryAlmostSquareSpec),
    /// Any circuit rewrite with a stated contract; used for fixtures.
    Custom {
        name: String,
        run: PassFn,
        contract: Contract,
    },
}

impl Pass {
    /// `regularize`, `newton`, `mulpoly` (`p = x^2`, `α = 1`) or `sqfromf`
    /// (the standard spec).
    pub fn by_name(name: &str) -> Option<Pass> {
        Some(match name {
            "regularize" => Pass::Regularize,
            "newton" => Pass::Newton,
            "mulpoly" => Pass::MulPoly {
                p: Poly::from_ints(&[0, 0, 1]),
                alpha: rat(1),
            },
            "sqfromf" => Pass::SqFromF(UnaryAlmostSquareSpec::standard()),
            _ => return None,
        })
    }

    pub fn name(&self) -> &str {
        match self {
            Pass::Regularize => "regularize",
            Pass::Newton => "newton",
            Pass::MulPoly { .. } => "mulpoly",
            Pass::SqFromF(_) => "sqfromf",
            Pass::Custom { name, .. } => name,
        }
    }

    pub fn contract(&self) -> Contract {
        match self {
            Pass::Regularize => Contract::ValueEquality,
            Pass::Newton | Pass::SqFromF(_) => Contract::Positivity,
            Pass::MulPoly { .. } => Contract::SignEquality,
            Pass::Custom { contract, .. } => *contract,
        }
    }

    /// Input basis the pass is meant for.
    pub fn input_basis(&self) -> Basis {
        match self {
            Pass::Regularize | Pass::Newton | Pass::Custom { .. } => Basis::b(2),
            Pass::MulPoly { .. } => Basis::ring(),
            Pass::SqFromF(_) => Basis::sqring(),
        }
    }

    /// Generator parameters matching the pass's input contract. The
    /// reductions between ring-like bases admit only `0` and `1` as constants.
    pub fn generator(&self, size: usize, seed: u64) -> GeneratorParams {
        let params = GeneratorParams::new(self.input_basis(), size, seed);
        match self {
            Pass::MulPoly { .. } | Pass::SqFromF(_) => {
                let mut w = params.weights.clone();
                w.remove(&GenKind::Const);
                params.with_weights(w)
            }
            _ => params,
        }
    }

    pub fn apply(&self, c: &Circuit) -> Result<Circuit, TransformError> {
        match self {
            Pass::Regularize => regularize(c),
            Pass::Newton => eliminate_roots(c),
            Pass::MulPoly { p, alpha } => mul_from_poly(c, p, alpha),
            Pass::SqFromF(spec) => square_from_unary(c, spec),
            Pass::Custom { run, .. } => run(c),
        }
    }
}

/// Certified sign of any supported circuit: exact number-field arithmetic
/// for piecewise-linear bases, the tower oracle where it applies, else
/// the adaptive evaluator.
pub fn reference_sign(c: &Circuit) -> Result<Sign, String> {
    if c.basis().field().is_some() {
        return pwl_decide_sign(c).map_err(|e| e.to_string());
    }
    match c.max_root_degree() {
        0 => match eval_rational(c) {
            Ok(q) => Ok(Sign::of(&q)),
            Err(_) => decide_sign(c).map_err(|e| e.to_string()),
        },
        _ => oracle_sign(c).map_err(|e| e.to_string()),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Disagreement {
    pub seed: u64,
    pub size: usize,
    pub circuit: String,
    pub expected: String,
    pub got: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseOutcome {
    pub seed: u64,
    pub size: usize,
    pub output_size: Option<usize>,
    pub agree: bool,
    pub expected: String,
    pub got: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SizeStats {
    pub min: usize,
    pub median: usize,
    pub max: usize,
    /// Least-squares slope of `log(output size)` against `log(input size)`.
    pub growth_exponent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub pass: String,
    pub contract: Contract,
    pub cases: usize,
    pub agreements: usize,
    pub disagreements: Vec<Disagreement>,
    pub sizes: Option<SizeStats>,
    #[serde(skip)]
    pub outcomes: Vec<CaseOutcome>,
}

const VALUE_BITS: i64 = 200;

fn sign_str(s: Sign) -> String {
    s.as_str().to_string()
}

fn positive(s: Sign) -> String {
    if s == Sign::Pos { "POS" } else { "NONPOS" }.to_string()
}

/// Expected and observed descriptions, and whether they agree.
fn check(contract: Contract, input: &Circuit, output: &Circuit) -> (String, String, bool) {
    let err = |e: String| (String::new(), format!("error: {e}"), false);
    match contract {
        Contract::ValueEquality => {
            let (a, b) = match (
                oracle_eval(input, -VALUE_BITS - 10),
                oracle_eval(output, -VALUE_BITS - 10),
            ) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => return err(e.to_string()),
            };
            let (a, b) = (a.lo().to_rational(), b.lo().to_rational());
            let ok = (&a - &b).abs() <= pow2_rational(-VALUE_BITS);
            (decimal_string(&a, 30), decimal_string(&b, 30), ok)
        }
        Contract::SignEquality => match (reference_sign(input), certified_sign(output)) {
            (Ok(a), Ok(b)) => (sign_str(a), sign_str(b), a == b),
            (Err(e), _) | (_, Err(e)) => err(e),
        },
        Contract::Positivity => match (reference_sign(input), certified_sign(output)) {
            (Ok(a), Ok(b)) => (
                positive(a),
                positive(b),
                (a == Sign::Pos) == (b == Sign::Pos),
            ),
            (Err(e), _) | (_, Err(e)) => err(e),
        },
    }
}

/// Sign of a pass output through the library's own decision procedures.
fn certified_sign(c: &Circuit) -> Result<Sign, String> {
    decide_sign(c).map_err(|e| e.to_string())
}

/// Generator parameters of case `index`: a derived seed and a size drawn
/// uniformly from `1..=params.size`.
pub fn case_params(params: &GeneratorParams, index: u64) -> GeneratorParams {
    let seed = splitmix(params.seed.wrapping_add(index));
    let size = 1 + (splitmix(seed) % params.size.max(1) as u64) as usize;
    params.clone().with_seed(seed).with_size(size)
}

fn splitmix(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Runs one case from its own generator parameters.
pub fn run_case(pass: &Pass, params: &GeneratorParams) -> (CaseOutcome, Option<Circuit>) {
    let outcome = |output_size, agree, expected: String, got: String| CaseOutcome {
        seed: params.seed,
        size: params.size,
        output_size,
        agree,
        expected,
        got,
    };
    let input = match random_circuit(params) {
        Ok(c) => c,
        Err(e) => {
            return (
                outcome(None, false, String::new(), format!("generator: {e}")),
                None,
            )
        }
    };
    match pass.apply(&input) {
        Ok(out) => {
            let (expected, got, agree) = check(pass.contract(), &input, &out);
            (outcome(Some(out.size()), agree, expected, got), Some(input))
        }
        Err(e) => (
            outcome(None, false, String::new(), format!("pass: {e}")),
            Some(input),
        ),
    }
}

/// Runs `count` generated cases through `pass` and checks its contract
/// against independent evaluation. Cases run in parallel; the report is
/// ordered by case index.
pub fn differential_verify(pass: &Pass, params: &GeneratorParams, count: usize) -> VerifyReport {
    let results: Vec<(CaseOutcome, Option<Circuit>)> = (0..count as u64)
        .into_par_iter()
        .map(|i| run_case(pass, &case_params(params, i)))
        .collect();
    let mut disagreements = Vec::new();
    let mut outcomes = Vec::with_capacity(count);
    for (o, input) in results {
        if !o.agree {
            disagreements.push(Disagreement {
                seed: o.seed,
                size: o.size,
                circuit: input.as_ref().map(serialize).unwrap_or_default(),
                expected: o.expected.clone(),
                got: o.got.clone(),
            });
        }
        outcomes.push(o);
    }
    VerifyReport {
        pass: pass.name().to_string(),
        contract: pass.contract(),
        cases: count,
        agreements: count - disagreements.len(),
        disagreements,
        sizes: size_stats(&outcomes),
        outcomes,
    }
}

/// Reruns a recorded disagreement.
pub fn replay(pass: &Pass, params: &GeneratorParams, d: &Disagreement) -> CaseOutcome {
    run_case(pass, &params.clone().with_seed(d.seed).with_size(d.size)).0
}

fn size_stats(outcomes: &[CaseOutcome]) -> Option<SizeStats> {
    let pairs: Vec<(usize, usize)> = outcomes
        .iter()
        .filter_map(|o| o.output_size.map(|s| (o.size, s)))
        .collect();
    if pairs.is_empty() {
        return None;
    }
    let mut outs: Vec<usize> = pairs.iter().map(|p| p.1).collect();
    outs.sort_unstable();
    Some(SizeStats {
        min: outs[0],
        median: outs[outs.len() / 2],
        max: outs[outs.len() - 1],
        growth_exponent: growth_exponent(&pairs),
    })
}

/// Slope of the least-squares line through `(log x, log y)` over pairs
/// with `x >= 2`.
pub fn growth_exponent(pairs: &[(usize, usize)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = pairs
        .iter()
        .filter(|(x, y)| *x >= 2 && *y >= 1)
        .map(|&(x, y)| ((x as f64).ln(), (y as f64).ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (pts.len() >= 2 && sxx > 0.0).then(|| sxy / sxx)
}

impl VerifyReport {
    /// Human-readable report.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "pass {}: {} cases, {} agreements, {} disagreements",
            self.pass,
            self.cases,
            self.agreements,
            self.disagreements.len()
        );
        if let Some(z) = &self.sizes {
            let _ = write!(
                s,
                "output size: min {} median {} max {}",
                z.min, z.median, z.max
            );
            match z.growth_exponent {
                Some(e) => {
                    let _ = writeln!(s, ", growth exponent {e:.3}");
                }
                None => s.push('\n'),
            }
        }
        for d in &self.disagreements {
            let _ = writeln!(
                s,
                "disagreement seed {} size {}: expected {}, got {}",
                d.seed, d.size, d.expected, d.got
            );
            for line in d.circuit.lines() {
                let _ = writeln!(s, "    {line}");
            }
        }
        s
    }

    /// One JSON record per case followed by a summary record.
    pub fn records(&self) -> String {
        let mut s = String::new();
        for o in &self.outcomes {
            let mut v = serde_json::to_value(o).expect("serializable");
            v["record"] = "case".into();
            s.push_str(&v.to_string());
            s.push('\n');
        }
        let mut v = serde_json::to_value(self).expect("serializable");
        v["record"] = "summary".into();
        s.push_str(&v.to_string());
        s.push('\n');
        s
    }
}
