//! Ground-truth evaluation for differential testing.
//!
//! Shares no code with the adaptive evaluator. Circuits over `B_d` with
//! `d <= 2` and polynomial functions are evaluated exactly in a tower of
//! quadratic extensions of the rationals; signs there are decided by
//! recursion on the tower, and enclosures come from rational interval
//! arithmetic on a fixed grid. Piecewise-linear circuits are evaluated in
//! interval arithmetic over an enclosure of the primitive element.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use super::{Dyadic, DyadicInterval, Sign};
use crate::circuit::{BasisFn, Circuit, ConstValue, GateId, GateKind};
use crate::numberfield::{AffineForm, NfElement, NumberField, Relation};
use crate::poly::rational_sqrt;

/// Largest grid precision the oracle will try, in bits.
pub const ORACLE_CAP: u64 = 1 << 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("{gate}: {kind} is outside the oracle's bases")]
    Unsupported { gate: GateId, kind: String },
    #[error("{gate}: no cell of {name} is consistent with its arguments")]
    NoCell { gate: GateId, name: String },
    #[error("enclosure wider than requested at the {cap}-bit cap")]
    Cap { cap: u64 },
}

/// Element of the tower: coordinates `u ++ v` for `u + v √r` where `r` is
/// the radicand of the top level; length `2^level`.
type Elem = Vec<BigRational>;

fn trim(mut a: Elem) -> Elem {
    while a.len() > 1 {
        let half = a.len() / 2;
        if a[half..].iter().all(Zero::is_zero) {
            a.truncate(half);
        } else {
            break;
        }
    }
    a
}

fn lift(a: &[BigRational], len: usize) -> Elem {
    let mut v = a.to_vec();
    v.resize(len, BigRational::zero());
    v
}

#[derive(Default)]
struct Tower {
    radicands: Vec<Elem>,
}

impl Tower {
    fn add(&self, a: &[BigRational], b: &[BigRational]) -> Elem {
        let n = a.len().max(b.len());
        let (a, b) = (lift(a, n), lift(b, n));
        trim(a.iter().zip(&b).map(|(x, y)| x + y).collect())
    }

    fn neg(&self, a: &[BigRational]) -> Elem {
        a.iter().map(|x| -x).collect()
    }

    fn sub(&self, a: &[BigRational], b: &[BigRational]) -> Elem {
        self.add(a, &self.neg(b))
    }

    fn mul(&self, a: &[BigRational], b: &[BigRational]) -> Elem {
        let n = a.len().max(b.len());
        trim(self.mul_level(&lift(a, n), &lift(b, n)))
    }

    fn mul_level(&self, a: &[BigRational], b: &[BigRational]) -> Elem {
        let n = a.len();
        if n == 1 {
            return vec![&a[0] * &b[0]];
        }
        let h = n / 2;
        let level = n.trailing_zeros() as usize;
        let r = lift(&self.radicands[level - 1], h);
        let (u1, v1) = a.split_at(h);
        let (u2, v2) = b.split_at(h);
        let vv = self.mul_level(v1, v2);
        let u: Vec<BigRational> = self
            .mul_level(u1, u2)
            .into_iter()
            .zip(self.mul_level(&vv, &r))
            .map(|(x, y)| x + y)
            .collect();
        let v: Vec<BigRational> = self
            .mul_level(u1, v2)
            .into_iter()
            .zip(self.mul_level(u2, v1))
            .map(|(x, y)| x + y)
            .collect();
        [u, v].concat()
    }

    fn scale(&self, a: &[BigRational], k: &BigRational) -> Elem {
        trim(a.iter().map(|x| x * k).collect())
    }

    fn sign(&self, a: &[BigRational]) -> Sign {
        let a = trim(a.to_vec());
        if a.len() == 1 {
            return Sign::of(&a[0]);
        }
        let h = a.len() / 2;
        let level = a.len().trailing_zeros() as usize;
        let (u, v) = a.split_at(h);
        let su = self.sign(u);
        let sv = self.sign(v);
        if su == Sign::Zero || su == sv {
            return sv;
        }
        if sv == Sign::Zero {
            return su;
        }
        // Opposite signs: compare u^2 with v^2 r.
        let r = &self.radicands[level - 1];
        let d = self.sub(&self.mul(u, u), &self.mul(&self.mul(v, v), r));
        match self.sign(&d) {
            Sign::Pos => su,
            Sign::Neg => sv,
            Sign::Zero => Sign::Zero,
        }
    }

    /// `a / b` for `b != 0`.
    fn div(&self, a: &[BigRational], b: &[BigRational]) -> Elem {
        let b = trim(b.to_vec());
        if b.len() == 1 {
            return self.scale(a, &b[0].recip());
        }
        if a.len() > b.len() {
            // Blocks of `a` are coefficients over the field of `b`.
            let mut out = Vec::with_capacity(a.len());
            for chunk in a.chunks(b.len()) {
                out.extend(lift(&self.div(chunk, &b), b.len()));
            }
            return trim(out);
        }
        let h = b.len() / 2;
        let level = b.len().trailing_zeros() as usize;
        let (u, v) = b.split_at(h);
        let r = &self.radicands[level - 1];
        let norm = self.sub(&self.mul(u, u), &self.mul(&self.mul(v, v), r));
        let conj: Elem = [u.to_vec(), self.neg(v)].concat();
        let num = self.mul(a, &conj);
        self.div(&num, &norm)
    }

    /// Square root of `z` inside the field of the first `level` levels.
    fn sqrt_in(&self, z: &[BigRational], level: usize) -> Option<Elem> {
        let z = trim(z.to_vec());
        if z.len() == 1 && z[0].is_zero() {
            return Some(z);
        }
        if level == 0 {
            return if z.len() == 1 {
                rational_sqrt(&z[0]).map(|s| vec![s])
            } else {
                None
            };
        }
        let len = 1 << level;
        let z = lift(&z, len);
        let (zu, zv) = z.split_at(len / 2);
        let r = &self.radicands[level - 1];
        let lower = level - 1;
        if zv.iter().all(Zero::is_zero) {
            if let Some(x) = self.sqrt_in(zu, lower) {
                return Some(x);
            }
            let y = self.sqrt_in(&self.div(zu, r), lower)?;
            return Some(trim(
                [vec![BigRational::zero(); len / 2], lift(&y, len / 2)].concat(),
            ));
        }
        let norm = self.sub(&self.mul(zu, zu), &self.mul(&self.mul(zv, zv), r));
        let m = self.sqrt_in(&norm, lower)?;
        let half = BigRational::new(1.into(), 2.into());
        for cand in [self.add(zu, &m), self.sub(zu, &m)] {
            let x2 = self.scale(&cand, &half);
            if let Some(x) = self.sqrt_in(&x2, lower) {
                if trim(x.clone()) != vec![BigRational::zero()] {
                    let y = self.div(zv, &self.scale(&x, &int(2)));
                    return Some(trim([lift(&x, len / 2), lift(&y, len / 2)].concat()));
                }
            }
        }
        None
    }

    /// Non-negative square root of `z >= 0`. A new level is added only when
    /// `z` is not already a square, so representations stay unique.
    fn sqrt(&mut self, z: &[BigRational]) -> Elem {
        let z = trim(z.to_vec());
        if let Some(s) = self.sqrt_in(&z, self.radicands.len()) {
            return if self.sign(&s) == Sign::Neg {
                self.neg(&s)
            } else {
                s
            };
        }
        let idx = match self.radicands.iter().position(|r| *r == z) {
            Some(i) => i,
            None => {
                self.radicands.push(z);
                self.radicands.len() - 1
            }
        };
        let mut e = vec![BigRational::zero(); 1 << (idx + 1)];
        e[1 << idx] = BigRational::one();
        e
    }
}

/// Exact value of every gate a circuit's output depends on.
struct TowerEval {
    tower: Tower,
    value: Elem,
}

fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

fn tower_eval(circuit: &Circuit) -> Result<TowerEval, OracleError> {
    let basis = circuit.basis();
    let n = circuit.size();
    // Demand-driven so untaken branches are never evaluated.
    let mut vals: Vec<Option<Elem>> = vec![None; n];
    let mut tower = Tower::default();
    let mut stack = vec![circuit.output()];
    while let Some(&g) = stack.last() {
        if vals[g.index()].is_some() {
            stack.pop();
            continue;
        }
        let gate = circuit.gate(g);
        let unsupported = || OracleError::Unsupported {
            gate: g,
            kind: gate.kind.mnemonic(),
        };
        let needed: Vec<GateId> = match &gate.kind {
            GateKind::Ch => match vals[gate.inputs[0].index()].as_ref() {
                None => vec![gate.inputs[0]],
                Some(x) => vec![match tower.sign(x) {
                    Sign::Neg => gate.inputs[1],
                    Sign::Zero => gate.inputs[2],
                    Sign::Pos => gate.inputs[3],
                }],
            },
            _ => gate.inputs.clone(),
        };
        let missing: Vec<GateId> = needed
            .iter()
            .copied()
            .filter(|x| vals[x.index()].is_none())
            .collect();
        if !missing.is_empty() {
            stack.extend(missing);
            continue;
        }
        let arg = |k: usize| vals[gate.inputs[k].index()].as_ref().unwrap();
        let v = match &gate.kind {
            GateKind::ConstZero => vec![int(0)],
            GateKind::ConstOne => vec![int(1)],
            GateKind::ConstRational(q) => vec![q.clone()],
            GateKind::ConstNamed(name) => match basis.constant(name) {
                Some(ConstValue::Rational(q)) => vec![q.clone()],
                _ => return Err(unsupported()),
            },
            GateKind::Add => tower.add(arg(0), arg(1)),
            GateKind::Sub => tower.sub(arg(0), arg(1)),
            GateKind::Mul => tower.mul(arg(0), arg(1)),
            GateKind::Ch => vals[needed[0].index()].clone().unwrap(),
            GateKind::Apply(name) => match basis.function(name).and_then(BasisFn::polynomial) {
                Some(p) => {
                    let x = arg(0).clone();
                    let mut acc = vec![int(0)];
                    for c in p.coeffs().iter().rev() {
                        acc = tower.add(&tower.mul(&acc, &x), std::slice::from_ref(c));
                    }
                    acc
                }
                None => return Err(unsupported()),
            },
            GateKind::Root(1) => {
                let (a0, a1) = (arg(0).clone(), arg(1).clone());
                linear(&tower, &a0, &a1)
            }
            GateKind::Root(2) => {
                let (a0, a1, a2) = (arg(0).clone(), arg(1).clone(), arg(2).clone());
                let s2 = tower.sign(&a2);
                if s2 == Sign::Zero {
                    linear(&tower, &a0, &a1)
                } else {
                    let disc = tower.sub(
                        &tower.mul(&a1, &a1),
                        &tower.scale(&tower.mul(&a0, &a2), &int(4)),
                    );
                    let two_a2 = tower.scale(&a2, &int(2));
                    match tower.sign(&disc) {
                        Sign::Neg => vec![int(0)],
                        Sign::Zero => tower.div(&tower.neg(&a1), &two_a2),
                        Sign::Pos => {
                            let s = tower.sqrt(&disc);
                            let s = if s2 == Sign::Pos { s } else { tower.neg(&s) };
                            tower.div(&tower.add(&tower.neg(&a1), &s), &two_a2)
                        }
                    }
                }
            }
            _ => return Err(unsupported()),
        };
        vals[g.index()] = Some(trim(v));
        stack.pop();
    }
    let value = vals[circuit.output().index()].take().unwrap();
    Ok(TowerEval { tower, value })
}

fn linear(tower: &Tower, a0: &[BigRational], a1: &[BigRational]) -> Elem {
    if tower.sign(a1) == Sign::Zero {
        vec![int(0)]
    } else {
        tower.div(&tower.neg(a0), a1)
    }
}

/// Closed rational interval, endpoints on the grid `2^-p`.
#[derive(Clone, Debug)]
struct Ri {
    lo: BigRational,
    hi: BigRational,
}

fn grid(q: &BigRational, p: u64, up: bool) -> BigRational {
    let scale = BigInt::one() << p as usize;
    let x = q * BigRational::from_integer(scale.clone());
    let k = if up { x.ceil() } else { x.floor() };
    BigRational::new(k.to_integer(), scale)
}

impl Ri {
    fn point(q: BigRational) -> Ri {
        Ri {
            lo: q.clone(),
            hi: q,
        }
    }

    fn round(lo: BigRational, hi: BigRational, p: u64) -> Ri {
        Ri {
            lo: grid(&lo, p, false),
            hi: grid(&hi, p, true),
        }
    }

    fn add(&self, o: &Ri) -> Ri {
        Ri {
            lo: &self.lo + &o.lo,
            hi: &self.hi + &o.hi,
        }
    }

    fn neg(&self) -> Ri {
        Ri {
            lo: -&self.hi,
            hi: -&self.lo,
        }
    }

    fn mul(&self, o: &Ri, p: u64) -> Ri {
        let c = [
            &self.lo * &o.lo,
            &self.lo * &o.hi,
            &self.hi * &o.lo,
            &self.hi * &o.hi,
        ];
        let lo = c.iter().min().unwrap().clone();
        let hi = c.iter().max().unwrap().clone();
        Ri::round(lo, hi, p)
    }

    fn sqrt(&self, p: u64) -> Ri {
        let root = |q: &BigRational, up: bool| {
            if !q.is_positive() {
                return BigRational::zero();
            }
            let scale = BigInt::one() << (2 * p) as usize;
            let x = q * BigRational::from_integer(scale);
            let k = if up { x.ceil() } else { x.floor() }.to_integer();
            let mut s = k.sqrt();
            if up && &s * &s < k {
                s += 1;
            }
            BigRational::new(s, BigInt::one() << p as usize)
        };
        Ri {
            lo: root(&self.lo, false),
            hi: root(&self.hi, true),
        }
    }

    fn width(&self) -> BigRational {
        &self.hi - &self.lo
    }

    fn hull(&self, o: &Ri) -> Ri {
        Ri {
            lo: self.lo.clone().min(o.lo.clone()),
            hi: self.hi.clone().max(o.hi.clone()),
        }
    }
}

fn enclose_elem(tower: &Tower, a: &[BigRational], p: u64, roots: &mut HashMap<usize, Ri>) -> Ri {
    if a.len() == 1 {
        return Ri::round(a[0].clone(), a[0].clone(), p);
    }
    let h = a.len() / 2;
    let level = a.len().trailing_zeros() as usize;
    let (u, v) = a.split_at(h);
    let s = match roots.get(&(level - 1)) {
        Some(s) => s.clone(),
        None => {
            let r = tower.radicands[level - 1].clone();
            let s = enclose_elem(tower, &r, p, roots).sqrt(p);
            roots.insert(level - 1, s.clone());
            s
        }
    };
    let eu = enclose_elem(tower, u, p, roots);
    let ev = enclose_elem(tower, v, p, roots);
    eu.add(&ev.mul(&s, p))
}

fn to_dyadic(q: &BigRational) -> Dyadic {
    Dyadic::from_dyadic_rational(q).expect("grid endpoint is dyadic")
}

fn pow2(e: i64) -> BigRational {
    super::exact::pow2_rational(e)
}

fn finish(ri: Ri, p: u64) -> DyadicInterval {
    DyadicInterval::new(to_dyadic(&ri.lo), to_dyadic(&ri.hi), p)
}

/// Enclosure of width at most `2^target_width_exp` around the value of a
/// circuit over `B_2`, a polynomial basis or a piecewise-linear basis.
pub fn oracle_eval(
    circuit: &Circuit,
    target_width_exp: i64,
) -> Result<DyadicInterval, OracleError> {
    if circuit.basis().field().is_some() {
        return pwl_oracle(circuit, target_width_exp);
    }
    let TowerEval { tower, value } = tower_eval(circuit)?;
    let target = pow2(target_width_exp);
    let mut p = ((16 - target_width_exp).max(64)) as u64;
    if value.len() == 1 {
        if let Some(d) = Dyadic::from_dyadic_rational(&value[0]) {
            return Ok(DyadicInterval::new(d.clone(), d, p));
        }
    }
    loop {
        let ri = enclose_elem(&tower, &value, p, &mut HashMap::new());
        if ri.width() <= target {
            return Ok(finish(ri, p));
        }
        p *= 2;
        if p > ORACLE_CAP {
            return Err(OracleError::Cap { cap: ORACLE_CAP });
        }
    }
}

/// Exact sign of a circuit value over `B_2` or a polynomial basis, decided
/// in the quadratic tower.
pub fn oracle_sign(circuit: &Circuit) -> Result<Sign, OracleError> {
    let t = tower_eval(circuit)?;
    Ok(t.tower.sign(&t.value))
}

/// Exact rational value if the circuit value is rational.
pub fn oracle_rational(circuit: &Circuit) -> Result<Option<BigRational>, OracleError> {
    let v = trim(tower_eval(circuit)?.value);
    Ok((v.len() == 1).then(|| v[0].clone()))
}

// ---- piecewise-linear interval mode ----

struct PwlCtx<'f> {
    field: &'f NumberField,
    theta: Ri,
    p: u64,
}

/// Isolating interval of the primitive element narrowed by bisection to
/// width at most `2^-bits`.
fn theta_enclosure(field: &NumberField, bits: u64) -> Ri {
    let (lo, hi) = field.isolating();
    let (mut lo, mut hi) = (lo.clone(), hi.clone());
    let poly = field.min_poly();
    let s_lo = poly.sign_at(&lo);
    let eps = pow2(-(bits as i64));
    let two = int(2);
    while &hi - &lo > eps {
        let mid = (&lo + &hi) / &two;
        let s = poly.sign_at(&mid);
        if s == 0 {
            return Ri::point(mid);
        }
        if s == s_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ri { lo, hi }
}

impl PwlCtx<'_> {
    fn elem(&self, e: &NfElement) -> Ri {
        let mut acc = Ri::point(int(0));
        for c in e.coords().iter().rev() {
            acc = acc
                .mul(&self.theta, self.p)
                .add(&Ri::round(c.clone(), c.clone(), self.p));
        }
        acc
    }

    fn form(&self, f: &AffineForm, args: &[Ri]) -> Ri {
        let mut acc = self.elem(&f.constant);
        for (c, x) in f.coeffs.iter().zip(args) {
            acc = acc.add(&self.elem(c).mul(x, self.p));
        }
        acc
    }
}

fn consistent(rel: Relation, x: &Ri) -> bool {
    let z = BigRational::zero();
    match rel {
        Relation::Lt => x.lo < z,
        Relation::Le => x.lo <= z,
        Relation::Eq => x.lo <= z && z <= x.hi,
        Relation::Gt => x.hi > z,
        Relation::Ge => x.hi >= z,
    }
}

fn pwl_at(circuit: &Circuit, field: &NumberField, p: u64) -> Result<Ri, OracleError> {
    let ctx = PwlCtx {
        field,
        theta: theta_enclosure(field, p + 8),
        p,
    };
    let _ = ctx.field;
    let basis = circuit.basis();
    let mut vals: Vec<Ri> = Vec::with_capacity(circuit.size());
    for (i, gate) in circuit.gates().iter().enumerate() {
        let g = GateId(i as u32);
        let unsupported = || OracleError::Unsupported {
            gate: g,
            kind: gate.kind.mnemonic(),
        };
        let arg = |k: usize| &vals[gate.inputs[k].index()];
        let v = match &gate.kind {
            GateKind::ConstZero => Ri::point(int(0)),
            GateKind::ConstOne => Ri::point(int(1)),
            GateKind::ConstRational(q) => Ri::round(q.clone(), q.clone(), p),
            GateKind::ConstNamed(name) => match basis.constant(name) {
                Some(ConstValue::Rational(q)) => Ri::round(q.clone(), q.clone(), p),
                Some(ConstValue::Field(e)) => ctx.elem(e),
                None => return Err(unsupported()),
            },
            GateKind::Add => arg(0).add(arg(1)),
            GateKind::Sub => arg(0).add(&arg(1).neg()),
            GateKind::Mul => arg(0).mul(arg(1), p),
            GateKind::Apply(name) => match basis.function(name) {
                Some(BasisFn::Pwl(f)) => {
                    let args: Vec<Ri> = gate
                        .inputs
                        .iter()
                        .map(|x| vals[x.index()].clone())
                        .collect();
                    let mut out: Option<Ri> = None;
                    for cell in f.cells() {
                        if cell
                            .guard
                            .iter()
                            .all(|c| consistent(c.rel, &ctx.form(&c.form, &args)))
                        {
                            let y = ctx.form(&cell.map, &args);
                            out = Some(match out {
                                Some(o) => o.hull(&y),
                                None => y,
                            });
                        }
                    }
                    out.ok_or_else(|| OracleError::NoCell {
                        gate: g,
                        name: name.clone(),
                    })?
                }
                _ => return Err(unsupported()),
            },
            _ => return Err(unsupported()),
        };
        vals.push(v);
    }
    Ok(vals.swap_remove(circuit.output().index()))
}

fn pwl_oracle(circuit: &Circuit, target_width_exp: i64) -> Result<DyadicInterval, OracleError> {
    let field = circuit.basis().field().unwrap();
    let target = pow2(target_width_exp);
    let mut p = ((16 - target_width_exp).max(64)) as u64;
    loop {
        let ri = pwl_at(circuit, field, p)?;
        if ri.width() <= target {
            let lo = grid(&ri.lo, p, false);
            let hi = grid(&ri.hi, p, true);
            return Ok(finish(Ri { lo, hi }, p));
        }
        p *= 2;
        if p > ORACLE_CAP {
            return Err(OracleError::Cap { cap: ORACLE_CAP });
        }
    }
}
