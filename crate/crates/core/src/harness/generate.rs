use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::circuit::{Basis, Builder, Circuit, GateId, GateKind};
use crate::poly::{parse_rational, ratio};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GenError {
    #[error("size must be positive")]
    EmptySize,
    #[error("all gate weights are zero")]
    ZeroWeights,
    #[error("unsatisfiable constraints: {0}")]
    Unsatisfiable(String),
    #[error("unknown gate kind {0:?}")]
    UnknownKind(String),
    #[error("bad weight {0:?}")]
    BadWeight(String),
}

/// Gate kinds the generator draws from.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum GenKind {
    Const0,
    Const1,
    /// Small rational constant.
    Const,
    /// A named constant of the basis.
    ConstRef,
    Add,
    Sub,
    Mul,
    Ch,
    Root(u32),
    /// A function of the basis.
    Apply,
}

impl GenKind {
    fn is_constant(self) -> bool {
        matches!(
            self,
            GenKind::Const0 | GenKind::Const1 | GenKind::Const | GenKind::ConstRef
        )
    }

    fn admitted(self, basis: &Basis) -> bool {
        let ops = basis.ops();
        match self {
            GenKind::Const0 | GenKind::Const1 | GenKind::Const | GenKind::Add | GenKind::Sub => {
                true
            }
            GenKind::ConstRef => basis.constants().next().is_some(),
            GenKind::Mul => ops.mul,
            GenKind::Ch => ops.ch,
            GenKind::Root(d) => d >= 1 && d <= ops.max_root,
            GenKind::Apply => basis.functions().next().is_some(),
        }
    }
}

impl fmt::Display for GenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GenKind::Const0 => f.write_str("const0"),
            GenKind::Const1 => f.write_str("const1"),
            GenKind::Const => f.write_str("const"),
            GenKind::ConstRef => f.write_str("constref"),
            GenKind::Add => f.write_str("add"),
            GenKind::Sub => f.write_str("sub"),
            GenKind::Mul => f.write_str("mul"),
            GenKind::Ch => f.write_str("ch"),
            GenKind::Root(d) => write!(f, "root{d}"),
            GenKind::Apply => f.write_str("apply"),
        }
    }
}

impl FromStr for GenKind {
    type Err = GenError;

    fn from_str(s: &str) -> Result<Self, GenError> {
        Ok(match s {
            "const0" => GenKind::Const0,
            "const1" => GenKind::Const1,
            "const" => GenKind::Const,
            "constref" => GenKind::ConstRef,
            "add" => GenKind::Add,
            "sub" => GenKind::Sub,
            "mul" => GenKind::Mul,
            "ch" => GenKind::Ch,
            "apply" => GenKind::Apply,
            _ => match s.strip_prefix("root").and_then(|d| d.parse().ok()) {
                Some(d) => GenKind::Root(d),
                None => return Err(GenError::UnknownKind(s.into())),
            },
        })
    }
}

pub type Weights = BTreeMap<GenKind, BigRational>;

/// Parses `kind:weight,kind:weight,..`.
pub fn parse_weights(text: &str) -> Result<Weights, GenError> {
    let mut w = Weights::new();
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let (k, v) = item
            .split_once(':')
            .ok_or_else(|| GenError::BadWeight(item.into()))?;
        let v = parse_rational(v.trim()).ok_or_else(|| GenError::BadWeight(item.into()))?;
        if v.is_negative() {
            return Err(GenError::BadWeight(item.into()));
        }
        w.insert(k.trim().parse()?, v);
    }
    Ok(w)
}

pub fn format_weights(w: &Weights) -> String {
    w.iter()
        .map(|(k, v)| format!("{k}:{}", crate::poly::format_rational(v)))
        .collect::<Vec<_>>()
        .join(",")
}

/// Weights for every kind the basis admits, favouring constants and
/// additive gates so that values stay in a testable range.
pub fn default_weights(basis: &Basis) -> Weights {
    let mut w = Weights::new();
    let mut put = |k: GenKind, n: i64| {
        if k.admitted(basis) {
            w.insert(k, ratio(n, 1));
        }
    };
    put(GenKind::Const0, 1);
    put(GenKind::Const1, 4);
    put(GenKind::Const, 3);
    put(GenKind::ConstRef, 3);
    put(GenKind::Add, 4);
    put(GenKind::Sub, 4);
    put(GenKind::Mul, 3);
    put(GenKind::Ch, 2);
    for d in 1..=basis.ops().max_root {
        put(GenKind::Root(d), 2);
    }
    put(GenKind::Apply, 3);
    w
}

#[derive(Clone, Debug)]
pub struct GeneratorParams {
    pub size: usize,
    pub basis: Arc<Basis>,
    pub weights: Weights,
    pub root_cap: usize,
    pub seed: u64,
}

impl GeneratorParams {
    /// Default weights for `basis`, at most 3 root gates.
    pub fn new(basis: Basis, size: usize, seed: u64) -> Self {
        GeneratorParams {
            size,
            weights: default_weights(&basis),
            basis: Arc::new(basis),
            root_cap: 3,
            seed,
        }
    }

    pub fn with_weights(mut self, weights: Weights) -> Self {
        self.weights = weights;
        self
    }

    pub fn with_root_cap(mut self, cap: usize) -> Self {
        self.root_cap = cap;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_size(mut self, size: usize) -> Self {
        self.size = size;
        self
    }
}

fn small_rational(rng: &mut ChaCha8Rng) -> BigRational {
    let num = rng.gen_range(-4i64..=4);
    let den = [1, 1, 1, 2, 3][rng.gen_range(0..5)];
    ratio(num, den)
}

/// An earlier gate, biased towards the most recent few.
fn pick(rng: &mut ChaCha8Rng, i: usize) -> GateId {
    let j = if rng.gen_bool(0.5) {
        i - 1 - rng.gen_range(0..i.min(4))
    } else {
        rng.gen_range(0..i)
    };
    GateId(j as u32)
}

/// A random valid circuit with exactly `size` gates whose output is the
/// last gate. Deterministic in the parameters.
pub fn random_circuit(params: &GeneratorParams) -> Result<Circuit, GenError> {
    if params.size == 0 {
        return Err(GenError::EmptySize);
    }
    let basis = &params.basis;
    let mut kinds: Vec<(GenKind, f64)> = Vec::new();
    for (k, w) in &params.weights {
        if w.is_zero() {
            continue;
        }
        if !k.admitted(basis) {
            return Err(GenError::Unsatisfiable(format!(
                "{k} is not admitted by basis {}",
                basis.name()
            )));
        }
        kinds.push((*k, w.to_f64().unwrap_or(f64::MAX)));
    }
    if kinds.is_empty() {
        return Err(GenError::ZeroWeights);
    }
    let consts: Vec<(String, usize)> = basis.constants().map(|(n, _)| (n.clone(), 0)).collect();
    let functions: Vec<(String, usize)> = basis
        .functions()
        .map(|(n, f)| (n.clone(), f.arity()))
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut b = Builder::new(basis.clone());
    let mut roots = 0;
    let mut last = GateId(0);
    for i in 0..params.size {
        let allowed: Vec<&(GenKind, f64)> = kinds
            .iter()
            .filter(|(k, _)| {
                (i > 0 || k.is_constant())
                    && (!matches!(k, GenKind::Root(_)) || roots < params.root_cap)
            })
            .collect();
        if allowed.is_empty() {
            let why = if i == 0 {
                "no constant kind has positive weight"
            } else {
                "root cap exhausted"
            };
            return Err(GenError::Unsatisfiable(why.into()));
        }
        let dist = WeightedIndex::new(allowed.iter().map(|(_, w)| *w))
            .map_err(|_| GenError::ZeroWeights)?;
        let kind = allowed[dist.sample(&mut rng)].0;
        let (gk, inputs) = match kind {
            GenKind::Const0 => (GateKind::ConstZero, vec![]),
            GenKind::Const1 => (GateKind::ConstOne, vec![]),
            GenKind::Const => (GateKind::rational(small_rational(&mut rng)), vec![]),
            GenKind::ConstRef => {
                let (n, _) = &consts[rng.gen_range(0..consts.len())];
                (GateKind::ConstNamed(n.clone()), vec![])
            }
            GenKind::Add => (GateKind::Add, vec![pick(&mut rng, i), pick(&mut rng, i)]),
            GenKind::Sub => (GateKind::Sub, vec![pick(&mut rng, i), pick(&mut rng, i)]),
            GenKind::Mul => (GateKind::Mul, vec![pick(&mut rng, i), pick(&mut rng, i)]),
            GenKind::Ch => (GateKind::Ch, (0..4).map(|_| pick(&mut rng, i)).collect()),
            GenKind::Root(d) => {
                roots += 1;
                (
                    GateKind::Root(d),
                    (0..=d).map(|_| pick(&mut rng, i)).collect(),
                )
            }
            GenKind::Apply => {
                let (n, arity) = &functions[rng.gen_range(0..functions.len())];
                (
                    GateKind::Apply(n.clone()),
                    (0..*arity).map(|_| pick(&mut rng, i)).collect(),
                )
            }
        };
        // `push` bypasses the builder's constant sharing so every draw is a gate.
        last = b.push(gk, inputs);
    }
    b.finish(last)
        .map_err(|e| GenError::Unsatisfiable(format!("generated an invalid circuit: {e}")))
}
