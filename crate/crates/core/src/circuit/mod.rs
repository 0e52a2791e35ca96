//! Closed arithmetic circuits over semialgebraic bases: data model,
//! construction, validation and splicing.

mod basis;
mod normalize;
mod text;

pub use basis::{Basis, BasisFn, ConstValue, Ops};
pub use normalize::{depth_normalize, depth_normalize_traced, NormalForm};
pub use text::{parse, parse_basis, parse_unchecked, serialize, ParseError};

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::poly::format_rational;

/// Dense gate index; gates only refer to smaller indices.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct GateId(pub u32);

impl GateId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for GateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}", self.0)
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum GateKind {
    ConstZero,
    ConstOne,
    ConstRational(BigRational),
    ConstNamed(String),
    Add,
    Sub,
    Mul,
    /// `ch(x, n, z, p)`: `n`, `z` or `p` by the sign of `x`.
    Ch,
    /// Largest real root of `a0 + a1 x + ... + aδ x^δ`, or 0 if there is none.
    Root(u32),
    Apply(String),
    /// Template placeholder; never valid in a closed circuit.
    Input(usize),
}

impl GateKind {
    /// Number of inputs implied by the kind, or `None` for `Apply`, whose
    /// arity comes from the basis.
    pub fn fixed_arity(&self) -> Option<usize> {
        match self {
            GateKind::ConstZero
            | GateKind::ConstOne
            | GateKind::ConstRational(_)
            | GateKind::ConstNamed(_)
            | GateKind::Input(_) => Some(0),
            GateKind::Add | GateKind::Sub | GateKind::Mul => Some(2),
            GateKind::Ch => Some(4),
            GateKind::Root(d) => Some(*d as usize + 1),
            GateKind::Apply(_) => None,
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(
            self,
            GateKind::ConstZero
                | GateKind::ConstOne
                | GateKind::ConstRational(_)
                | GateKind::ConstNamed(_)
        )
    }

    pub fn mnemonic(&self) -> String {
        match self {
            GateKind::ConstZero => "const 0".into(),
            GateKind::ConstOne => "const 1".into(),
            GateKind::ConstRational(q) => format!("const {}", format_rational(q)),
            GateKind::ConstNamed(s) => format!("constref {s}"),
            GateKind::Add => "add".into(),
            GateKind::Sub => "sub".into(),
            GateKind::Mul => "mul".into(),
            GateKind::Ch => "ch".into(),
            GateKind::Root(d) => format!("root{d}"),
            GateKind::Apply(f) => format!("apply {f}"),
            GateKind::Input(i) => format!("input {i}"),
        }
    }

    /// Constant kind for a rational, using the dedicated 0 and 1 kinds.
    pub fn rational(q: BigRational) -> GateKind {
        if q.is_zero() {
            GateKind::ConstZero
        } else if q.is_one() {
            GateKind::ConstOne
        } else {
            GateKind::ConstRational(q)
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Gate {
    pub kind: GateKind,
    pub inputs: Vec<GateId>,
}

impl Gate {
    pub fn new(kind: GateKind, inputs: Vec<GateId>) -> Self {
        Gate { kind, inputs }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Violation {
    Empty,
    DanglingOutput(GateId),
    Arity {
        gate: GateId,
        expected: usize,
        found: usize,
    },
    Dangling {
        gate: GateId,
        input: GateId,
    },
    Order {
        gate: GateId,
        input: GateId,
    },
    UnknownConstant {
        gate: GateId,
        name: String,
    },
    UnknownFunction {
        gate: GateId,
        name: String,
    },
    Disallowed {
        gate: GateId,
        kind: String,
    },
    OpenInput {
        gate: GateId,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Empty => write!(f, "circuit has no gates"),
            Violation::DanglingOutput(g) => write!(f, "output {g} does not exist"),
            Violation::Arity {
                gate,
                expected,
                found,
            } => {
                write!(f, "{gate}: expected {expected} inputs, found {found}")
            }
            Violation::Dangling { gate, input } => {
                write!(f, "{gate}: input {input} does not exist")
            }
            Violation::Order { gate, input } => write!(f, "{gate}: input {input} is not earlier"),
            Violation::UnknownConstant { gate, name } => {
                write!(f, "{gate}: unknown constant {name}")
            }
            Violation::UnknownFunction { gate, name } => {
                write!(f, "{gate}: unknown function {name}")
            }
            Violation::Disallowed { gate, kind } => write!(f, "{gate}: {kind} is not in the basis"),
            Violation::OpenInput { gate } => {
                write!(f, "{gate}: input placeholder in a closed circuit")
            }
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("invalid circuit: {}", join(.0))]
    Invalid(Vec<Violation>),
    #[error("template takes {template} inputs but the target has {target}")]
    ArityMismatch { template: usize, target: usize },
    #[error("{gate}: {kind} is not supported here")]
    Unsupported { gate: GateId, kind: String },
    #[error("gate {0} does not exist")]
    NoSuchGate(GateId),
}

fn join(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

/// An immutable closed circuit. Cloning is cheap for the basis and linear
/// in the gate count for the gates.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Circuit {
    gates: Vec<Gate>,
    output: GateId,
    basis: Arc<Basis>,
}

impl Circuit {
    pub fn new(gates: Vec<Gate>, output: GateId, basis: Arc<Basis>) -> Result<Self, CircuitError> {
        let c = Circuit::new_unchecked(gates, output, basis);
        let v = validate(&c);
        if v.is_empty() {
            Ok(c)
        } else {
            Err(CircuitError::Invalid(v))
        }
    }

    /// Builds without validation so that `validate` can report on it.
    pub fn new_unchecked(gates: Vec<Gate>, output: GateId, basis: Arc<Basis>) -> Self {
        Circuit {
            gates,
            output,
            basis,
        }
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn gate(&self, id: GateId) -> &Gate {
        &self.gates[id.index()]
    }

    pub fn output(&self) -> GateId {
        self.output
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    /// Number of gates.
    pub fn size(&self) -> usize {
        self.gates.len()
    }

    /// Same gates and basis with a different output gate.
    pub fn with_output(&self, output: GateId) -> Circuit {
        Circuit {
            gates: self.gates.clone(),
            output,
            basis: self.basis.clone(),
        }
    }

    /// The sub-circuit computing `g`, keeping only its ancestors.
    pub fn subcircuit(&self, g: GateId) -> Circuit {
        let mut live = vec![false; g.index() + 1];
        live[g.index()] = true;
        for i in (0..=g.index()).rev() {
            if live[i] {
                for x in &self.gates[i].inputs {
                    live[x.index()] = true;
                }
            }
        }
        let mut map = vec![GateId(0); g.index() + 1];
        let mut gates = Vec::new();
        for i in 0..=g.index() {
            if live[i] {
                let gate = &self.gates[i];
                map[i] = GateId(gates.len() as u32);
                gates.push(Gate::new(
                    gate.kind.clone(),
                    gate.inputs.iter().map(|x| map[x.index()]).collect(),
                ));
            }
        }
        Circuit {
            output: map[g.index()],
            gates,
            basis: self.basis.clone(),
        }
    }

    /// Largest root degree used, 0 if there are no root gates.
    pub fn max_root_degree(&self) -> u32 {
        self.gates
            .iter()
            .filter_map(|g| match g.kind {
                GateKind::Root(d) => Some(d),
                _ => None,
            })
            .max()
            .unwrap_or(0)
    }

    pub fn count_kind(&self, pred: impl Fn(&GateKind) -> bool) -> usize {
        self.gates.iter().filter(|g| pred(&g.kind)).count()
    }
}

/// Every structural and basis violation of `circuit`; empty iff valid.
pub fn validate(circuit: &Circuit) -> Vec<Violation> {
    check_gates(&circuit.gates, circuit.output, &circuit.basis, 0)
}

/// `inputs` leading gates may be `Input` placeholders (templates).
fn check_gates(gates: &[Gate], output: GateId, basis: &Basis, inputs: usize) -> Vec<Violation> {
    let mut out = Vec::new();
    if gates.is_empty() {
        out.push(Violation::Empty);
    }
    for (i, gate) in gates.iter().enumerate() {
        let id = GateId(i as u32);
        let disallowed = |kind: &GateKind| Violation::Disallowed {
            gate: id,
            kind: kind.mnemonic(),
        };
        let expected = match &gate.kind {
            GateKind::Apply(name) => match basis.function(name) {
                Some(f) => Some(f.arity()),
                None => {
                    out.push(Violation::UnknownFunction {
                        gate: id,
                        name: name.clone(),
                    });
                    None
                }
            },
            k => k.fixed_arity(),
        };
        if let Some(expected) = expected {
            if expected != gate.inputs.len() {
                out.push(Violation::Arity {
                    gate: id,
                    expected,
                    found: gate.inputs.len(),
                });
            }
        }
        match &gate.kind {
            GateKind::ConstNamed(name) if basis.constant(name).is_none() => {
                out.push(Violation::UnknownConstant {
                    gate: id,
                    name: name.clone(),
                });
            }
            GateKind::Mul if !basis.ops().mul => out.push(disallowed(&gate.kind)),
            GateKind::Ch if !basis.ops().ch => out.push(disallowed(&gate.kind)),
            GateKind::Root(d) if *d == 0 || *d > basis.ops().max_root => {
                out.push(disallowed(&gate.kind))
            }
            GateKind::Input(k) if i >= inputs || *k != i => {
                out.push(Violation::OpenInput { gate: id })
            }
            _ => {}
        }
        for &x in &gate.inputs {
            if x.index() >= gates.len() {
                out.push(Violation::Dangling { gate: id, input: x });
            } else if x.index() >= i {
                out.push(Violation::Order { gate: id, input: x });
            }
        }
    }
    if output.index() >= gates.len() && !gates.is_empty() {
        out.push(Violation::DanglingOutput(output));
    }
    out
}

/// An open circuit whose first `arity` gates are `Input(0..arity)`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Template {
    arity: usize,
    gates: Vec<Gate>,
    output: GateId,
}

impl Template {
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn output(&self) -> GateId {
        self.output
    }

    /// Gates excluding the input placeholders.
    pub fn size(&self) -> usize {
        self.gates.len() - self.arity
    }

    /// Violations against `basis`, treating placeholders as legitimate.
    pub fn validate(&self, basis: &Basis) -> Vec<Violation> {
        check_gates(&self.gates, self.output, basis, self.arity)
    }
}

/// Single-owner, append-only circuit builder.
pub struct Builder {
    basis: Arc<Basis>,
    gates: Vec<Gate>,
    consts: HashMap<GateKind, GateId>,
}

impl Builder {
    pub fn new(basis: Arc<Basis>) -> Self {
        Builder {
            basis,
            gates: Vec::new(),
            consts: HashMap::new(),
        }
    }

    /// Starts from the gates of an existing circuit.
    pub fn extend(circuit: &Circuit) -> Self {
        Builder {
            basis: circuit.basis.clone(),
            gates: circuit.gates.clone(),
            consts: HashMap::new(),
        }
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn gate(&self, id: GateId) -> &Gate {
        &self.gates[id.index()]
    }

    pub fn push(&mut self, kind: GateKind, inputs: Vec<GateId>) -> GateId {
        let id = GateId(self.gates.len() as u32);
        self.gates.push(Gate::new(kind, inputs));
        id
    }

    /// Constant gates are shared within one builder.
    fn constant(&mut self, kind: GateKind) -> GateId {
        if let Some(&id) = self.consts.get(&kind) {
            return id;
        }
        let id = self.push(kind.clone(), vec![]);
        self.consts.insert(kind, id);
        id
    }

    pub fn zero(&mut self) -> GateId {
        self.constant(GateKind::ConstZero)
    }

    pub fn one(&mut self) -> GateId {
        self.constant(GateKind::ConstOne)
    }

    pub fn rational(&mut self, q: BigRational) -> GateId {
        self.constant(GateKind::rational(q))
    }

    pub fn named(&mut self, name: &str) -> GateId {
        self.constant(GateKind::ConstNamed(name.to_string()))
    }

    pub fn input(&mut self, i: usize) -> GateId {
        self.push(GateKind::Input(i), vec![])
    }

    pub fn add(&mut self, a: GateId, b: GateId) -> GateId {
        self.push(GateKind::Add, vec![a, b])
    }

    pub fn sub(&mut self, a: GateId, b: GateId) -> GateId {
        self.push(GateKind::Sub, vec![a, b])
    }

    pub fn mul(&mut self, a: GateId, b: GateId) -> GateId {
        self.push(GateKind::Mul, vec![a, b])
    }

    pub fn neg(&mut self, a: GateId) -> GateId {
        let z = self.zero();
        self.sub(z, a)
    }

    pub fn ch(&mut self, x: GateId, n: GateId, z: GateId, p: GateId) -> GateId {
        self.push(GateKind::Ch, vec![x, n, z, p])
    }

    /// `coeffs[0]` is the constant coefficient.
    pub fn root(&mut self, coeffs: &[GateId]) -> GateId {
        self.push(GateKind::Root(coeffs.len() as u32 - 1), coeffs.to_vec())
    }

    pub fn apply(&mut self, name: &str, args: &[GateId]) -> GateId {
        self.push(GateKind::Apply(name.to_string()), args.to_vec())
    }

    /// Copies the template body with its placeholders bound to `args`;
    /// returns the gate holding the template output.
    pub fn instantiate(&mut self, t: &Template, args: &[GateId]) -> GateId {
        assert_eq!(t.arity, args.len(), "template arity mismatch");
        let mut map: Vec<GateId> = Vec::with_capacity(t.gates.len());
        for gate in &t.gates {
            let id = match gate.kind {
                GateKind::Input(i) => args[i],
                _ => {
                    let inputs = gate.inputs.iter().map(|x| map[x.index()]).collect();
                    self.push(gate.kind.clone(), inputs)
                }
            };
            map.push(id);
        }
        map[t.output.index()]
    }

    pub fn finish(self, output: GateId) -> Result<Circuit, CircuitError> {
        Circuit::new(self.gates, output, self.basis)
    }

    pub fn finish_unchecked(self, output: GateId) -> Circuit {
        Circuit::new_unchecked(self.gates, output, self.basis)
    }

    /// Turns the builder into a template. The first `arity` gates must be
    /// `input(0) .. input(arity - 1)` in order.
    pub fn into_template(self, arity: usize, output: GateId) -> Template {
        for (i, g) in self.gates.iter().take(arity).enumerate() {
            assert_eq!(
                g.kind,
                GateKind::Input(i),
                "template inputs must come first"
            );
        }
        Template {
            arity,
            gates: self.gates,
            output,
        }
    }
}

/// Replaces gate `target` by the body of `template`, wired to the target's
/// inputs. The new circuit has `size - 1 + template.size()` gates; gates
/// before the target keep their ids, later ones are shifted.
pub fn substitute(
    circuit: &Circuit,
    target: GateId,
    template: &Template,
) -> Result<Circuit, CircuitError> {
    let gate = circuit
        .gates
        .get(target.index())
        .ok_or(CircuitError::NoSuchGate(target))?;
    if gate.inputs.len() != template.arity {
        return Err(CircuitError::ArityMismatch {
            template: template.arity,
            target: gate.inputs.len(),
        });
    }
    let mut b = Builder::new(circuit.basis.clone());
    let mut map: Vec<GateId> = Vec::with_capacity(circuit.size());
    for (i, g) in circuit.gates.iter().enumerate() {
        let inputs: Vec<GateId> = g.inputs.iter().map(|x| map[x.index()]).collect();
        let id = if i == target.index() {
            b.instantiate(template, &inputs)
        } else {
            b.push(g.kind.clone(), inputs)
        };
        map.push(id);
    }
    b.finish(map[circuit.output.index()])
}
