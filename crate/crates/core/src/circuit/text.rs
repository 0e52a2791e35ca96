//! Line-oriented text format for circuits and basis descriptors.
//!
//! ```text
//! # optional header
//! basis NAME
//! ops [mul] [ch] [root<d>]
//! field minpoly c0 c1 .. cn isolate LO HI
//! constdef NAME VALUE
//! fndef NAME poly c0 c1 ..
//! fndef NAME almostsq alpha A beta B poly c0 c1 ..
//! fndef NAME pwl ARITY
//! cell aff(c0, c1, ..) REL 0 & .. -> aff(c0, c1, ..)
//! cell true -> aff(..)
//! # gates
//! g0 = const 1
//! g1 = add g0 g0
//! out g1
//! ```
//!
//! `VALUE` and affine coefficients are rationals (`p/q`) or, once a field is
//! declared, coordinate vectors `[q0 q1 ..]` over the power basis. `REL` is
//! one of `<`, `<=`, `=`, `>`, `>=`. Without a `basis` line the basis is
//! `B<d>` for the largest root degree `d` used; a custom basis without an
//! `ops` line admits `×`, `ch` and the root degrees used.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::Arc;

use num_rational::BigRational;
use num_traits::Zero;
use thiserror::Error;

use super::{
    validate, Basis, BasisFn, Circuit, CircuitError, ConstValue, Gate, GateId, GateKind, Ops,
};
use crate::numberfield::{
    AffineForm, Cell, Condition, NfElement, NumberField, PwlFunction, Relation,
};
use crate::poly::{format_rational, parse_rational, Poly};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err<T>(line: usize, message: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError {
        line,
        message: message.into(),
    })
}

/// Parses and validates.
pub fn parse(text: &str) -> Result<Circuit, CircuitError> {
    let c = parse_unchecked(text)?;
    let v = validate(&c);
    if v.is_empty() {
        Ok(c)
    } else {
        Err(CircuitError::Invalid(v))
    }
}

/// Parses a basis descriptor: header lines only, no gates.
pub fn parse_basis(text: &str) -> Result<Basis, ParseError> {
    for (i, l) in text.lines().enumerate() {
        let l = l.split('#').next().unwrap().trim();
        let head = l.split_whitespace().next().unwrap_or("");
        let header = matches!(
            head,
            "basis" | "ops" | "field" | "constdef" | "fndef" | "cell"
        );
        if !l.is_empty() && !header {
            return err(i + 1, "basis descriptors contain no gates");
        }
    }
    let probe = format!("{text}\n__probe = const 0\nout __probe\n");
    let c = parse_unchecked(&probe)?;
    Ok(c.basis().as_ref().clone())
}

struct PendingPwl {
    name: String,
    arity: usize,
    cells: Vec<Cell>,
    line: usize,
}

struct HeaderState {
    basis: Option<Basis>,
    ops: Option<Ops>,
    pending: Option<PendingPwl>,
}

impl HeaderState {
    fn basis_mut(&mut self) -> &mut Basis {
        self.basis
            .get_or_insert_with(|| Basis::new("custom", Ops::default()))
    }

    fn flush(&mut self) -> Result<(), ParseError> {
        if let Some(p) = self.pending.take() {
            let field = self.field(p.line)?;
            let f = PwlFunction::new(field, p.arity, p.cells)
                .or_else(|e| err(p.line, e.to_string()))?;
            let b = self
                .basis
                .take()
                .unwrap_or_else(|| Basis::new("custom", Ops::default()));
            self.basis = Some(b.with_function(p.name, BasisFn::Pwl(f)));
        }
        Ok(())
    }

    fn field(&self, line: usize) -> Result<Arc<NumberField>, ParseError> {
        match self.basis.as_ref().and_then(|b| b.field()) {
            Some(f) => Ok(f.clone()),
            None => err(line, "a field line must come first"),
        }
    }
}

/// Parses without validating; only syntax errors are reported.
pub fn parse_unchecked(text: &str) -> Result<Circuit, ParseError> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap().trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();

    // Gate names to dense indices, in definition order.
    let mut names: HashMap<&str, u32> = HashMap::new();
    for &(ln, l) in &lines {
        if let Some((lhs, _)) = l.split_once('=') {
            let first = l.split_whitespace().next().unwrap_or("");
            if matches!(first, "cell" | "constdef" | "fndef" | "field") {
                continue;
            }
            let name = lhs.trim();
            if name.is_empty() || name.contains(char::is_whitespace) {
                return err(ln, format!("bad gate name {name:?}"));
            }
            let next = names.len() as u32;
            if names.insert(name, next).is_some() {
                return err(ln, format!("gate {name} defined twice"));
            }
        }
    }
    let mut unknown: HashMap<String, u32> = HashMap::new();
    let defined = names.len() as u32;
    let mut resolve = |name: &str| -> GateId {
        if let Some(&i) = names.get(name) {
            return GateId(i);
        }
        let k = unknown.len() as u32;
        let idx = *unknown.entry(name.to_string()).or_insert(defined + k);
        GateId(idx)
    };

    let mut header = HeaderState {
        basis: None,
        ops: None,
        pending: None,
    };
    let mut gates: Vec<Gate> = Vec::new();
    let mut output: Option<GateId> = None;
    let mut max_root = 0;

    for &(ln, l) in &lines {
        let mut words = l.split_whitespace();
        let head = words.next().unwrap();
        if head == "cell" {
            let Some(p) = header.pending.as_mut() else {
                return err(ln, "cell outside a pwl function");
            };
            let field = match header.basis.as_ref().and_then(|b| b.field()) {
                Some(f) => f.clone(),
                None => return err(ln, "a field line must come first"),
            };
            let cell = parse_cell(&l[4..], &field, p.arity, ln)?;
            p.cells.push(cell);
            continue;
        }
        header.flush()?;
        match head {
            "basis" => {
                if !gates.is_empty() || header.basis.is_some() {
                    return err(ln, "basis line must come first");
                }
                let name = words
                    .next()
                    .ok_or(())
                    .or_else(|_| err(ln, "missing basis name"))?;
                header.basis =
                    Some(Basis::builtin(name).unwrap_or_else(|| Basis::new(name, Ops::default())));
            }
            "ops" => {
                let mut ops = Ops::default();
                for w in words {
                    match w {
                        "mul" => ops.mul = true,
                        "ch" => ops.ch = true,
                        _ => match w.strip_prefix("root").and_then(|d| d.parse().ok()) {
                            Some(d) => ops.max_root = d,
                            None => return err(ln, format!("unknown operation {w}")),
                        },
                    }
                }
                header.ops = Some(ops);
            }
            "field" => {
                let rest: Vec<&str> = words.collect();
                let (poly, iso) = match rest.split_first() {
                    Some((&"minpoly", tail)) => match tail.iter().position(|w| *w == "isolate") {
                        Some(k) => (&tail[..k], &tail[k + 1..]),
                        None => return err(ln, "missing isolate"),
                    },
                    _ => return err(ln, "expected minpoly"),
                };
                let coeffs = rationals(poly, ln)?;
                let iso = rationals(iso, ln)?;
                if iso.len() != 2 {
                    return err(ln, "isolate takes two endpoints");
                }
                let field = NumberField::new(Poly::new(coeffs), iso[0].clone(), iso[1].clone())
                    .or_else(|e| err(ln, e.to_string()))?;
                let b = header
                    .basis
                    .take()
                    .unwrap_or_else(|| Basis::new("custom", Ops::default()));
                header.basis = Some(b.with_field(field));
            }
            "constdef" => {
                let name = words
                    .next()
                    .ok_or(())
                    .or_else(|_| err(ln, "missing name"))?;
                let value: String = words.collect::<Vec<_>>().join(" ");
                let value = if value.starts_with('[') {
                    let field = header.field(ln)?;
                    ConstValue::Field(parse_element(&value, &field, ln)?)
                } else {
                    ConstValue::Rational(
                        parse_rational(&value)
                            .ok_or(())
                            .or_else(|_| err(ln, "bad rational"))?,
                    )
                };
                let b = std::mem::replace(header.basis_mut(), Basis::new("", Ops::default()));
                *header.basis_mut() = b.with_constant(name, value);
            }
            "fndef" => {
                let name = words
                    .next()
                    .ok_or(())
                    .or_else(|_| err(ln, "missing name"))?;
                let kind = words.next().unwrap_or("");
                let rest: Vec<&str> = words.collect();
                let f = match kind {
                    "poly" => BasisFn::Polynomial(Poly::new(rationals(&rest, ln)?)),
                    "almostsq" => match rest.as_slice() {
                        ["alpha", a, "beta", b, "poly", cs @ ..] => BasisFn::UnaryAlmostSquare {
                            alpha: rational(a, ln)?,
                            beta: rational(b, ln)?,
                            poly: Poly::new(rationals(cs, ln)?),
                        },
                        _ => return err(ln, "expected alpha A beta B poly .."),
                    },
                    "pwl" => {
                        let arity = match rest.as_slice() {
                            [a] => a.parse().ok(),
                            _ => None,
                        };
                        let Some(arity) = arity else {
                            return err(ln, "expected pwl ARITY");
                        };
                        header.pending = Some(PendingPwl {
                            name: name.to_string(),
                            arity,
                            cells: Vec::new(),
                            line: ln,
                        });
                        continue;
                    }
                    _ => return err(ln, format!("unknown function kind {kind:?}")),
                };
                let b = std::mem::replace(header.basis_mut(), Basis::new("", Ops::default()));
                *header.basis_mut() = b.with_function(name, f);
            }
            "out" => {
                let name = words
                    .next()
                    .ok_or(())
                    .or_else(|_| err(ln, "missing output"))?;
                if output.is_some() {
                    return err(ln, "output given twice");
                }
                output = Some(resolve(name));
            }
            _ => {
                let Some((_, rhs)) = l.split_once('=') else {
                    return err(ln, format!("unrecognized line {l:?}"));
                };
                let mut words = rhs.split_whitespace();
                let op = words
                    .next()
                    .ok_or(())
                    .or_else(|_| err(ln, "missing operation"))?;
                let args: Vec<&str> = words.collect();
                let (kind, refs): (GateKind, &[&str]) = match op {
                    "const" => match args.as_slice() {
                        [q] => (GateKind::rational(rational(q, ln)?), &[]),
                        _ => return err(ln, "const takes one rational"),
                    },
                    "constref" => match args.as_slice() {
                        [s] => (GateKind::ConstNamed(s.to_string()), &[]),
                        _ => return err(ln, "constref takes one name"),
                    },
                    "input" => match args.as_slice() {
                        [i] => match i.parse() {
                            Ok(i) => (GateKind::Input(i), &[]),
                            Err(_) => return err(ln, "bad input index"),
                        },
                        _ => return err(ln, "input takes one index"),
                    },
                    "add" => (GateKind::Add, &args[..]),
                    "sub" => (GateKind::Sub, &args[..]),
                    "mul" => (GateKind::Mul, &args[..]),
                    "ch" => (GateKind::Ch, &args[..]),
                    "apply" => match args.split_first() {
                        Some((f, rest)) => (GateKind::Apply(f.to_string()), rest),
                        None => return err(ln, "apply needs a function name"),
                    },
                    _ => match op.strip_prefix("root").and_then(|d| d.parse::<u32>().ok()) {
                        Some(d) => {
                            max_root = max_root.max(d);
                            (GateKind::Root(d), &args[..])
                        }
                        None => return err(ln, format!("unknown operation {op:?}")),
                    },
                };
                let inputs = refs.iter().map(|r| resolve(r)).collect();
                gates.push(Gate::new(kind, inputs));
            }
        }
    }
    header.flush()?;
    let Some(output) = output else {
        return err(lines.last().map_or(1, |l| l.0), "missing out line");
    };
    let basis = match (header.basis, header.ops) {
        (None, None) => Basis::b(max_root),
        (None, Some(ops)) => Basis::new("custom", ops),
        (Some(b), Some(ops)) => b.with_ops(ops),
        (Some(b), None) => {
            if Basis::builtin(b.name()).is_some() {
                b
            } else {
                b.with_ops(Ops {
                    mul: true,
                    ch: true,
                    max_root,
                })
            }
        }
    };
    Ok(Circuit::new_unchecked(gates, output, Arc::new(basis)))
}

fn rational(w: &str, line: usize) -> Result<BigRational, ParseError> {
    parse_rational(w)
        .ok_or(())
        .or_else(|_| err(line, format!("bad rational {w:?}")))
}

fn rationals(ws: &[&str], line: usize) -> Result<Vec<BigRational>, ParseError> {
    ws.iter().map(|w| rational(w, line)).collect()
}

/// A scalar rational or a bracketed coordinate vector.
fn parse_element(
    text: &str,
    field: &Arc<NumberField>,
    line: usize,
) -> Result<NfElement, ParseError> {
    let text = text.trim();
    if let Some(inner) = text.strip_prefix('[').and_then(|t| t.strip_suffix(']')) {
        let ws: Vec<&str> = inner.split_whitespace().collect();
        if ws.len() > field.degree() {
            return err(line, "too many coordinates");
        }
        Ok(NfElement::from_coords(field, rationals(&ws, line)?))
    } else {
        Ok(field.rational(rational(text, line)?))
    }
}

/// `aff(c0, c1, ..)` followed by the rest of the text.
fn parse_affine<'a>(
    text: &'a str,
    field: &Arc<NumberField>,
    arity: usize,
    line: usize,
) -> Result<(AffineForm, &'a str), ParseError> {
    let text = text.trim_start();
    let Some(body) = text.strip_prefix("aff(") else {
        return err(line, "expected aff(..)");
    };
    let Some(close) = body.find(')') else {
        return err(line, "unclosed aff(");
    };
    let parts: Vec<NfElement> = body[..close]
        .split(',')
        .map(|p| parse_element(p, field, line))
        .collect::<Result<_, _>>()?;
    if parts.len() != arity + 1 {
        return err(
            line,
            format!("affine form needs {} coefficients", arity + 1),
        );
    }
    let mut parts = parts.into_iter();
    let constant = parts.next().unwrap();
    Ok((
        AffineForm {
            constant,
            coeffs: parts.collect(),
        },
        &body[close + 1..],
    ))
}

fn parse_cell(
    text: &str,
    field: &Arc<NumberField>,
    arity: usize,
    line: usize,
) -> Result<Cell, ParseError> {
    let Some((guard, map)) = text.split_once("->") else {
        return err(line, "cell needs ->");
    };
    let (map, rest) = parse_affine(map, field, arity, line)?;
    if !rest.trim().is_empty() {
        return err(line, "trailing text after map");
    }
    let mut conds = Vec::new();
    if guard.trim() != "true" {
        for part in guard.split('&') {
            let (form, rest) = parse_affine(part, field, arity, line)?;
            let ws: Vec<&str> = rest.split_whitespace().collect();
            let rel = match ws.as_slice() {
                [r, "0"] => Relation::parse(r),
                _ => None,
            };
            let Some(rel) = rel else {
                return err(line, "condition must read aff(..) REL 0");
            };
            conds.push(Condition { form, rel });
        }
    }
    Ok(Cell { guard: conds, map })
}

fn format_element(e: &NfElement) -> String {
    if e.coords()[1..].iter().all(Zero::is_zero) {
        return format_rational(&e.coords()[0]);
    }
    let cs: Vec<String> = e.coords().iter().map(format_rational).collect();
    format!("[{}]", cs.join(" "))
}

fn format_affine(f: &AffineForm) -> String {
    let cs: Vec<String> = std::iter::once(&f.constant)
        .chain(&f.coeffs)
        .map(format_element)
        .collect();
    format!("aff({})", cs.join(", "))
}

fn format_poly(p: &Poly) -> String {
    if p.is_zero() {
        return "0".into();
    }
    p.coeffs()
        .iter()
        .map(format_rational)
        .collect::<Vec<_>>()
        .join(" ")
}

fn write_header(out: &mut String, basis: &Basis) {
    let _ = writeln!(out, "basis {}", basis.name());
    if Basis::builtin(basis.name()).as_ref() == Some(basis) {
        return;
    }
    let ops = basis.ops();
    out.push_str("ops");
    if ops.mul {
        out.push_str(" mul");
    }
    if ops.ch {
        out.push_str(" ch");
    }
    if ops.max_root > 0 {
        let _ = write!(out, " root{}", ops.max_root);
    }
    out.push('\n');
    if let Some(f) = basis.field() {
        let (lo, hi) = f.isolating();
        let _ = writeln!(
            out,
            "field minpoly {} isolate {} {}",
            format_poly(f.min_poly()),
            format_rational(lo),
            format_rational(hi)
        );
    }
    for (name, v) in basis.constants() {
        let v = match v {
            ConstValue::Rational(q) => format_rational(q),
            ConstValue::Field(e) => {
                let cs: Vec<String> = e.coords().iter().map(format_rational).collect();
                format!("[{}]", cs.join(" "))
            }
        };
        let _ = writeln!(out, "constdef {name} {v}");
    }
    for (name, f) in basis.functions() {
        match f {
            BasisFn::Polynomial(p) => {
                let _ = writeln!(out, "fndef {name} poly {}", format_poly(p));
            }
            BasisFn::UnaryAlmostSquare { alpha, beta, poly } => {
                let _ = writeln!(
                    out,
                    "fndef {name} almostsq alpha {} beta {} poly {}",
                    format_rational(alpha),
                    format_rational(beta),
                    format_poly(poly)
                );
            }
            BasisFn::Pwl(f) => {
                let _ = writeln!(out, "fndef {name} pwl {}", f.arity());
                for cell in f.cells() {
                    let guard = if cell.guard.is_empty() {
                        "true".to_string()
                    } else {
                        cell.guard
                            .iter()
                            .map(|c| format!("{} {} 0", format_affine(&c.form), c.rel.symbol()))
                            .collect::<Vec<_>>()
                            .join(" & ")
                    };
                    let _ = writeln!(out, "cell {guard} -> {}", format_affine(&cell.map));
                }
            }
        }
    }
}

/// Text form; the header is omitted when the basis is the default `B<d>`
/// that parsing would infer.
pub fn serialize(circuit: &Circuit) -> String {
    let mut out = String::new();
    let basis = circuit.basis();
    if **basis != Basis::b(circuit.max_root_degree()) {
        write_header(&mut out, basis);
    }
    for (i, g) in circuit.gates().iter().enumerate() {
        let _ = write!(out, "g{i} = {}", g.kind.mnemonic());
        for x in &g.inputs {
            let _ = write!(out, " {x}");
        }
        out.push('\n');
    }
    let _ = write!(out, "out {}", circuit.output());
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::exact::eval_rational;
    use crate::poly::rat;

    #[test]
    fn parses_small_circuit() {
        let c = parse("g0 = const 1\ng1 = add g0 g0\nout g1").unwrap();
        assert_eq!(c.size(), 2);
        assert_eq!(eval_rational(&c).unwrap(), rat(2));
    }

    #[test]
    fn syntax_error_has_line_number() {
        let e = parse_unchecked("g0 = frobnicate").unwrap_err();
        assert_eq!(e.line, 1);
    }

    #[test]
    fn root_without_real_roots_parses() {
        let c = parse("g0 = const 1\ng1 = root2 g0 g0 g0\nout g1").unwrap();
        assert_eq!(c.basis().name(), "B2");
    }

    #[test]
    fn minimal_serialization() {
        let c = parse("g0 = const 0\nout g0").unwrap();
        assert_eq!(serialize(&c), "g0 = const 0\nout g0");
    }

    #[test]
    fn named_constant_gets_header() {
        let text = "basis mulpoly\nops\nconstdef alpha 1/2\nfndef p poly 0 0 1\ng0 = constref alpha\ng1 = apply p g0\nout g1";
        let c = parse(text).unwrap();
        let s = serialize(&c);
        assert!(s.contains("constref alpha"));
        assert!(s.contains("basis mulpoly"));
        assert_eq!(parse(&s).unwrap(), c);
    }

    #[test]
    fn comments_and_arbitrary_names() {
        let c = parse("# two\nx = const 1 # one\ny = add x x\nout y\n").unwrap();
        assert_eq!(eval_rational(&c).unwrap(), rat(2));
    }

    #[test]
    fn pwl_descriptor_round_trip() {
        let text = "basis q2\nops\nfield minpoly -2 0 1 isolate 1 2\nconstdef sqrt2 [0 1]\n\
                    fndef abs pwl 1\ncell aff(0, 1) < 0 -> aff(0, -1)\ncell aff(0, 1) >= 0 -> aff(0, 1)\n\
                    g0 = constref sqrt2\ng1 = const 1\ng2 = sub g1 g0\ng3 = apply abs g2\nout g3";
        let c = parse(text).unwrap();
        let again = parse(&serialize(&c)).unwrap();
        assert_eq!(again, c);
    }
}
