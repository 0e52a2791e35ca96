use std::sync::Arc;

use num_bigint::BigInt;

use super::{Powers, TransformError};
use crate::circuit::{Basis, Builder, Circuit, ConstValue, GateId, GateKind, Ops};
use crate::zerobound::height_bound;

/// Output size is at most `C * |c| * (1 + log2 E)` for this `C`, where `E`
/// is the largest guard gap exponent.
pub const REGULARIZE_SIZE_CONSTANT: usize = 64;

fn check_b2(c: &Circuit) -> Result<(), TransformError> {
    for (i, g) in c.gates().iter().enumerate() {
        let ok = match &g.kind {
            GateKind::ConstZero
            | GateKind::ConstOne
            | GateKind::ConstRational(_)
            | GateKind::Add
            | GateKind::Sub
            | GateKind::Mul
            | GateKind::Ch => true,
            GateKind::ConstNamed(n) => {
                matches!(c.basis().constant(n), Some(ConstValue::Rational(_)))
            }
            GateKind::Root(d) => *d == 1 || *d == 2,
            _ => false,
        };
        if !ok {
            return Err(TransformError::Disallowed {
                gate: GateId(i as u32),
                kind: g.kind.mnemonic(),
            });
        }
    }
    Ok(())
}

pub(super) fn output_basis(c: &Circuit, max_root: u32) -> Arc<Basis> {
    let basis = c.basis();
    if **basis == Basis::b(basis.ops().max_root) {
        return Arc::new(Basis::b(max_root));
    }
    Arc::new(basis.as_ref().clone().with_ops(Ops {
        mul: true,
        ch: true,
        max_root,
    }))
}

pub(super) fn ensure_b2(c: &Circuit) -> Result<(), TransformError> {
    check_b2(c)
}

/// Rewrites a `B_2` circuit into an equal-valued circuit whose root gates
/// are only reached with a nonzero leading coefficient and, for `root2`, a
/// positive discriminant, and whose choice guards never vanish.
pub fn regularize(c: &Circuit) -> Result<Circuit, TransformError> {
    check_b2(c)?;
    let ladder = root_ladders(c)?;
    strict_guards(&ladder)
}

/// `C * |c| * (1 + ⌈log2 E⌉)` where `E` is the largest gap exponent of a
/// choice guard after the root ladders are in place (at least 1).
pub fn regularize_size_bound(c: &Circuit) -> Result<usize, TransformError> {
    check_b2(c)?;
    let ladder = root_ladders(c)?;
    let bounds = height_bound(&ladder)?;
    let e = ladder
        .gates()
        .iter()
        .filter(|g| g.kind == GateKind::Ch)
        .map(|g| bounds[g.inputs[0].index()].gap_exp())
        .max()
        .unwrap_or_default()
        .max(BigInt::from(1));
    let log = (e - 1u32).bits() as usize;
    Ok(REGULARIZE_SIZE_CONSTANT * c.size() * (1 + log))
}

/// Step one: case ladders around every root gate.
fn root_ladders(c: &Circuit) -> Result<Circuit, TransformError> {
    let mut b = Builder::new(output_basis(c, c.max_root_degree().max(1)));
    let mut map: Vec<GateId> = Vec::with_capacity(c.size());
    for g in c.gates() {
        let a: Vec<GateId> = g.inputs.iter().map(|x| map[x.index()]).collect();
        let id = match g.kind {
            GateKind::Root(1) => linear(&mut b, a[0], a[1]),
            GateKind::Root(2) => {
                let lin = linear(&mut b, a[0], a[1]);
                let a1sq = b.mul(a[1], a[1]);
                let a0a2 = b.mul(a[0], a[2]);
                let four = b.rational(BigInt::from(4).into());
                let t = b.mul(four, a0a2);
                let disc = b.sub(a1sq, t);
                let two_a2 = b.add(a[2], a[2]);
                let double = b.root(&[a[1], two_a2]);
                let raw = b.root(&[a[0], a[1], a[2]]);
                let zero = b.zero();
                let quad = b.ch(disc, zero, double, raw);
                b.ch(a[2], quad, lin, quad)
            }
            ref kind if kind.is_constant() => match kind {
                GateKind::ConstZero => b.zero(),
                GateKind::ConstOne => b.one(),
                GateKind::ConstRational(q) => b.rational(q.clone()),
                GateKind::ConstNamed(n) => b.named(n),
                _ => unreachable!(),
            },
            ref kind => b.push(kind.clone(), a),
        };
        map.push(id);
    }
    Ok(b.finish(map[c.output().index()])?)
}

/// `root1(a0, a1)` guarded on `a1 = 0`.
fn linear(b: &mut Builder, a0: GateId, a1: GateId) -> GateId {
    let r = b.root(&[a0, a1]);
    let zero = b.zero();
    b.ch(a1, r, zero, r)
}

/// Step two: every `ch(g, n, z, p)` becomes
/// `ch(S g + 1, n, 0, ch(S g - 1, z, 0, p))` with `S = 2^(E(g) + 1)`.
/// Both new guards have absolute value at least 1.
pub fn strict_guards(c: &Circuit) -> Result<Circuit, TransformError> {
    let bounds = height_bound(c)?;
    let mut b = Builder::new(c.basis().clone());
    let mut powers = Powers::default();
    let mut map: Vec<GateId> = Vec::with_capacity(c.size());
    for g in c.gates() {
        let a: Vec<GateId> = g.inputs.iter().map(|x| map[x.index()]).collect();
        let id = match &g.kind {
            GateKind::Ch => {
                let e = bounds[g.inputs[0].index()].gap_exp() + 1;
                let s = powers.pow2(&mut b, &e);
                let sg = b.mul(s, a[0]);
                let one = b.one();
                let zero = b.zero();
                let hi = b.add(sg, one);
                let lo = b.sub(sg, one);
                let inner = b.ch(lo, a[2], zero, a[3]);
                b.ch(hi, a[1], zero, inner)
            }
            GateKind::ConstZero => b.zero(),
            GateKind::ConstOne => b.one(),
            GateKind::ConstRational(q) => b.rational(q.clone()),
            GateKind::ConstNamed(n) => b.named(n),
            kind => b.push(kind.clone(), a),
        };
        map.push(id);
    }
    Ok(b.finish(map[c.output().index()])?)
}
