use std::collections::BTreeMap;
use std::sync::Arc;

use num_rational::BigRational;

use crate::numberfield::{NfElement, NumberField, PwlFunction};
use crate::poly::Poly;

/// Gate kinds admitted besides constants, `+` and `-`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Default)]
pub struct Ops {
    pub mul: bool,
    pub ch: bool,
    /// Largest admitted root degree; 0 forbids root gates.
    pub max_root: u32,
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum ConstValue {
    Rational(BigRational),
    Field(NfElement),
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub enum BasisFn {
    /// Unary polynomial with rational coefficients.
    Polynomial(Poly),
    /// Unary `f` with `|f(x) - alpha x^2| <= |x|^3` on `[-beta, beta]`,
    /// evaluated through its defining polynomial.
    UnaryAlmostSquare {
        alpha: BigRational,
        beta: BigRational,
        poly: Poly,
    },
    Pwl(PwlFunction),
}

impl BasisFn {
    pub fn arity(&self) -> usize {
        match self {
            BasisFn::Polynomial(_) | BasisFn::UnaryAlmostSquare { .. } => 1,
            BasisFn::Pwl(f) => f.arity(),
        }
    }

    /// The rational polynomial behind a unary function, if any.
    pub fn polynomial(&self) -> Option<&Poly> {
        match self {
            BasisFn::Polynomial(p) | BasisFn::UnaryAlmostSquare { poly: p, .. } => Some(p),
            BasisFn::Pwl(_) => None,
        }
    }
}

/// Named gate vocabulary of a circuit: admitted operations, constants and
/// basis functions, and the number field for piecewise-linear bases.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Basis {
    name: String,
    ops: Ops,
    field: Option<Arc<NumberField>>,
    constants: BTreeMap<String, ConstValue>,
    functions: BTreeMap<String, BasisFn>,
}

impl Basis {
    pub fn new(name: impl Into<String>, ops: Ops) -> Self {
        Basis {
            name: name.into(),
            ops,
            field: None,
            constants: BTreeMap::new(),
            functions: BTreeMap::new(),
        }
    }

    /// `{0, 1, +, -, ×, ch, r_1 .. r_d}`
    pub fn b(d: u32) -> Self {
        Basis::new(
            format!("B{d}"),
            Ops {
                mul: true,
                ch: true,
                max_root: d,
            },
        )
    }

    /// `{0, 1, +, -, ×}`
    pub fn ring() -> Self {
        Basis::new(
            "ring",
            Ops {
                mul: true,
                ch: false,
                max_root: 0,
            },
        )
    }

    /// `{0, 1, +, -, sq}` with `sq(x) = x^2`.
    pub fn sqring() -> Self {
        Basis::new("sqring", Ops::default())
            .with_function("sq", BasisFn::Polynomial(Poly::from_ints(&[0, 0, 1])))
    }

    /// Built-in bases by name: `B<d>`, `ring`, `sqring`.
    pub fn builtin(name: &str) -> Option<Basis> {
        match name {
            "ring" => Some(Basis::ring()),
            "sqring" => Some(Basis::sqring()),
            _ => {
                let d = name.strip_prefix('B')?.parse::<u32>().ok()?;
                Some(Basis::b(d))
            }
        }
    }

    pub fn with_constant(mut self, name: impl Into<String>, value: ConstValue) -> Self {
        self.constants.insert(name.into(), value);
        self
    }

    pub fn with_function(mut self, name: impl Into<String>, f: BasisFn) -> Self {
        self.functions.insert(name.into(), f);
        self
    }

    pub fn with_field(mut self, field: Arc<NumberField>) -> Self {
        self.field = Some(field);
        self
    }

    pub fn with_ops(mut self, ops: Ops) -> Self {
        self.ops = ops;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ops(&self) -> Ops {
        self.ops
    }

    pub fn field(&self) -> Option<&Arc<NumberField>> {
        self.field.as_ref()
    }

    pub fn constant(&self, name: &str) -> Option<&ConstValue> {
        self.constants.get(name)
    }

    pub fn function(&self, name: &str) -> Option<&BasisFn> {
        self.functions.get(name)
    }

    pub fn constants(&self) -> impl Iterator<Item = (&String, &ConstValue)> {
        self.constants.iter()
    }

    pub fn functions(&self) -> impl Iterator<Item = (&String, &BasisFn)> {
        self.functions.iter()
    }

    /// True for a piecewise-linear basis over a number field.
    pub fn is_pwl(&self) -> bool {
        self.field.is_some()
            && self
                .functions
                .values()
                .all(|f| matches!(f, BasisFn::Pwl(_)))
    }
}
