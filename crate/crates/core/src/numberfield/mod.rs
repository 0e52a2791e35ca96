//! Exact arithmetic in real number fields and evaluation of circuits over
//! piecewise-linear bases with number-field coefficients.

mod field;
mod pwl;

pub use field::{nf_sign, NfElement, NumberField};
pub use pwl::{AffineForm, Cell, Condition, PwlFunction, Relation};

use thiserror::Error;

use crate::circuit::{BasisFn, Circuit, ConstValue, GateId, GateKind};
use crate::eval::Sign;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NfError {
    #[error("elements belong to different number fields")]
    FieldMismatch,
    #[error("minimal polynomial must be monic of positive degree")]
    BadMinPoly,
    #[error("isolating interval endpoints must give opposite signs")]
    BadIsolation,
    #[error("division by zero")]
    DivisionByZero,
    #[error("minimal polynomial is reducible")]
    Reducible,
    #[error("expected {expected} arguments, found {found}")]
    Arity { expected: usize, found: usize },
    #[error("no cell guard is satisfied")]
    NoCell,
    #[error("{0} cell guards are satisfied")]
    ManyCells(usize),
    #[error("too many distinct guard forms ({0}) for exhaustive partition check")]
    TooManyForms(usize),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PwlError {
    #[error("basis declares no number field")]
    NoField,
    #[error("gate {gate}: {source}")]
    Field {
        gate: GateId,
        #[source]
        source: NfError,
    },
    #[error("gate {gate}: unsupported gate kind {kind}")]
    Unsupported { gate: GateId, kind: String },
    #[error("gate {gate}: unknown symbol {name}")]
    Unknown { gate: GateId, name: String },
}

/// Exact value of a circuit over a piecewise-linear basis.
pub fn pwl_eval_circuit(circuit: &Circuit) -> Result<NfElement, PwlError> {
    let basis = circuit.basis();
    let field = basis.field().ok_or(PwlError::NoField)?;
    let mut vals: Vec<NfElement> = Vec::with_capacity(circuit.size());
    for (i, gate) in circuit.gates().iter().enumerate() {
        let id = GateId(i as u32);
        let wrap = |source| PwlError::Field { gate: id, source };
        let arg = |k: usize| &vals[gate.inputs[k].index()];
        let v = match &gate.kind {
            GateKind::ConstZero => field.zero(),
            GateKind::ConstOne => field.one(),
            GateKind::ConstRational(q) => field.rational(q.clone()),
            GateKind::ConstNamed(name) => match basis.constant(name) {
                Some(ConstValue::Rational(q)) => field.rational(q.clone()),
                Some(ConstValue::Field(e)) => e.clone(),
                None => {
                    return Err(PwlError::Unknown {
                        gate: id,
                        name: name.clone(),
                    })
                }
            },
            GateKind::Add => arg(0).add(arg(1)).map_err(wrap)?,
            GateKind::Sub => arg(0).sub(arg(1)).map_err(wrap)?,
            GateKind::Apply(name) => match basis.function(name) {
                Some(BasisFn::Pwl(f)) => {
                    let args: Vec<NfElement> = gate
                        .inputs
                        .iter()
                        .map(|g| vals[g.index()].clone())
                        .collect();
                    f.apply(&args).map_err(wrap)?
                }
                _ => {
                    return Err(PwlError::Unknown {
                        gate: id,
                        name: name.clone(),
                    })
                }
            },
            kind => {
                return Err(PwlError::Unsupported {
                    gate: id,
                    kind: kind.mnemonic(),
                })
            }
        };
        vals.push(v);
    }
    Ok(vals.swap_remove(circuit.output().index()))
}

/// Sign of the exact value of a circuit over a piecewise-linear basis.
pub fn pwl_decide_sign(circuit: &Circuit) -> Result<Sign, PwlError> {
    Ok(nf_sign(&pwl_eval_circuit(circuit)?))
}
