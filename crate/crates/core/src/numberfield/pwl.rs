use std::sync::Arc;

use crate::eval::Sign;
use crate::numberfield::{NfElement, NfError, NumberField};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Relation {
    Lt,
    Le,
    Eq,
    Gt,
    Ge,
}

impl Relation {
    pub fn holds(self, s: Sign) -> bool {
        match self {
            Relation::Lt => s == Sign::Neg,
            Relation::Le => s != Sign::Pos,
            Relation::Eq => s == Sign::Zero,
            Relation::Gt => s == Sign::Pos,
            Relation::Ge => s != Sign::Neg,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Gt => ">",
            Relation::Ge => ">=",
        }
    }

    pub fn parse(s: &str) -> Option<Relation> {
        Some(match s {
            "<" => Relation::Lt,
            "<=" => Relation::Le,
            "=" => Relation::Eq,
            ">" => Relation::Gt,
            ">=" => Relation::Ge,
            _ => return None,
        })
    }

    /// The relation satisfied by `-x` whenever `self` holds for `x`.
    fn flip(self) -> Relation {
        match self {
            Relation::Lt => Relation::Gt,
            Relation::Le => Relation::Ge,
            Relation::Eq => Relation::Eq,
            Relation::Gt => Relation::Lt,
            Relation::Ge => Relation::Le,
        }
    }
}

/// `c0 + c1 x1 + ... + cm xm`
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct AffineForm {
    pub constant: NfElement,
    pub coeffs: Vec<NfElement>,
}

impl AffineForm {
    pub fn eval(&self, args: &[NfElement]) -> Result<NfElement, NfError> {
        if args.len() != self.coeffs.len() {
            return Err(NfError::Arity {
                expected: self.coeffs.len(),
                found: args.len(),
            });
        }
        let mut acc = self.constant.clone();
        for (c, x) in self.coeffs.iter().zip(args) {
            acc = acc.add(&c.mul(x)?)?;
        }
        Ok(acc)
    }

    fn neg(&self) -> AffineForm {
        AffineForm {
            constant: self.constant.neg(),
            coeffs: self.coeffs.iter().map(NfElement::neg).collect(),
        }
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Condition {
    pub form: AffineForm,
    pub rel: Relation,
}

/// A cell: all guard conditions must hold (an empty guard always holds).
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Cell {
    pub guard: Vec<Condition>,
    pub map: AffineForm,
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct PwlFunction {
    arity: usize,
    field: Arc<NumberField>,
    cells: Vec<Cell>,
}

impl PwlFunction {
    pub fn new(field: Arc<NumberField>, arity: usize, cells: Vec<Cell>) -> Result<Self, NfError> {
        for cell in &cells {
            let forms = cell.guard.iter().map(|c| &c.form).chain([&cell.map]);
            for form in forms {
                if form.coeffs.len() != arity {
                    return Err(NfError::Arity {
                        expected: arity,
                        found: form.coeffs.len(),
                    });
                }
                if form
                    .coeffs
                    .iter()
                    .chain([&form.constant])
                    .any(|c| **c.field() != *field)
                {
                    return Err(NfError::FieldMismatch);
                }
            }
        }
        Ok(PwlFunction {
            arity,
            field,
            cells,
        })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn field(&self) -> &Arc<NumberField> {
        &self.field
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// Selects the unique cell whose guard holds and applies its map.
    pub fn apply(&self, args: &[NfElement]) -> Result<NfElement, NfError> {
        let mut chosen = None;
        let mut count = 0;
        for (i, cell) in self.cells.iter().enumerate() {
            let mut ok = true;
            for cond in &cell.guard {
                if !cond.rel.holds(cond.form.eval(args)?.sign()) {
                    ok = false;
                    break;
                }
            }
            if ok {
                count += 1;
                chosen.get_or_insert(i);
            }
        }
        match (count, chosen) {
            (1, Some(i)) => self.cells[i].map.eval(args),
            (0, _) => Err(NfError::NoCell),
            _ => Err(NfError::ManyCells(count)),
        }
    }

    /// Checks that every sign assignment to the distinct guard forms selects
    /// exactly one cell. Infeasible assignments are checked too, so this is
    /// stronger than the partition property and may reject valid functions
    /// whose guards are linearly dependent.
    pub fn check_partition(&self) -> Result<(), NfError> {
        // (form, whether it is stored negated)
        let mut forms: Vec<AffineForm> = Vec::new();
        let mut index: Vec<Vec<(usize, Relation)>> = Vec::new();
        for cell in &self.cells {
            let mut row = Vec::new();
            for cond in &cell.guard {
                let neg = cond.form.neg();
                if let Some(k) = forms.iter().position(|f| *f == cond.form) {
                    row.push((k, cond.rel));
                } else if let Some(k) = forms.iter().position(|f| *f == neg) {
                    row.push((k, cond.rel.flip()));
                } else {
                    forms.push(cond.form.clone());
                    row.push((forms.len() - 1, cond.rel));
                }
            }
            index.push(row);
        }
        if forms.len() > 12 {
            return Err(NfError::TooManyForms(forms.len()));
        }
        let signs = [Sign::Neg, Sign::Zero, Sign::Pos];
        let total = 3usize.pow(forms.len() as u32);
        for code in 0..total {
            let mut c = code;
            let vector: Vec<Sign> = (0..forms.len())
                .map(|_| {
                    let s = signs[c % 3];
                    c /= 3;
                    s
                })
                .collect();
            let hits = index
                .iter()
                .filter(|row| row.iter().all(|&(k, rel)| rel.holds(vector[k])))
                .count();
            match hits {
                1 => {}
                0 => return Err(NfError::NoCell),
                n => return Err(NfError::ManyCells(n)),
            }
        }
        Ok(())
    }
}
