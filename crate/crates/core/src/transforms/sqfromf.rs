//! Simulating squaring with a unary gate that is almost a square near 0.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::TransformError;
use crate::circuit::{Basis, BasisFn, Builder, Circuit, ConstValue, GateId, GateKind};
use crate::poly::{ratio, Poly};

const K: &str = "k";
const F: &str = "f";

/// A unary `f` with `|f(x) - α x^2| <= |x|^3` on `[-β, β]`, and the seed
/// constant `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnaryAlmostSquareSpec {
    pub alpha: BigRational,
    pub beta: BigRational,
    pub f: Poly,
    pub k: BigRational,
}

impl UnaryAlmostSquareSpec {
    pub fn new(
        alpha: BigRational,
        beta: BigRational,
        f: Poly,
        k: BigRational,
    ) -> Result<Self, TransformError> {
        let s = UnaryAlmostSquareSpec { alpha, beta, f, k };
        s.validate()?;
        Ok(s)
    }

    /// `f(x) = x^2 + x^3`, `α = 1`, `β = 1/2`, `k = 1/4`.
    pub fn standard() -> Self {
        UnaryAlmostSquareSpec {
            alpha: BigRational::one(),
            beta: ratio(1, 2),
            f: Poly::from_ints(&[0, 0, 1, 1]),
            k: ratio(1, 4),
        }
    }

    /// Checks the parameter ranges and the cubic envelope. The envelope
    /// holds iff `f - α x^2 = x^3 h(x)` with `|h| <= 1` on `[-β, β]`; the
    /// bound on `h` is certified by interval evaluation and may reject
    /// borderline specs.
    pub fn validate(&self) -> Result<(), TransformError> {
        let bad = |m: &str| Err(TransformError::Parameter(m.into()));
        if !self.alpha.is_positive() || !self.beta.is_positive() {
            return bad("alpha and beta must be positive");
        }
        let three_alpha = &self.alpha * BigRational::from_integer(BigInt::from(3));
        let cap = three_alpha
            .recip()
            .min(&self.beta / BigRational::from_integer(BigInt::from(2)));
        if !self.k.is_positive() || self.k > cap {
            return bad("k must satisfy 0 < k <= min(1/(3 alpha), beta/2)");
        }
        let g = self.f.sub(&Poly::new(vec![
            BigRational::zero(),
            BigRational::zero(),
            self.alpha.clone(),
        ]));
        if (0..3).any(|i| !g.coeff(i).is_zero()) {
            return bad("f - alpha x^2 must vanish to third order at 0");
        }
        let h = Poly::new(g.coeffs().iter().skip(3).cloned().collect());
        if !h.is_zero() && h.abs_bound_on(&-self.beta.clone(), &self.beta, 64) > BigRational::one()
        {
            return bad("|f(x) - alpha x^2| <= |x|^3 could not be certified on [-beta, beta]");
        }
        Ok(())
    }

    /// `{0, k, +, -, f}`
    pub fn basis(&self) -> Basis {
        Basis::new("sqfromf", Default::default())
            .with_constant(K, ConstValue::Rational(self.k.clone()))
            .with_function(
                F,
                BasisFn::UnaryAlmostSquare {
                    alpha: self.alpha.clone(),
                    beta: self.beta.clone(),
                    poly: self.f.clone(),
                },
            )
    }
}

/// Output of [`square_from_unary_traced`].
#[derive(Clone, Debug)]
pub struct SqTrace {
    pub circuit: Circuit,
    /// `2c - 1` over the input basis.
    pub n: Circuit,
    /// `‖n‖`
    pub norm: usize,
    /// `f^i(k)` for `i = 0 ..= 3‖n‖ + 3`, as gates of `circuit`.
    pub ladder: Vec<GateId>,
    /// Memo misses of the recursion.
    pub calls: usize,
}

impl SqTrace {
    /// Gate of `u_n = f^(3‖n‖+3)(k)`.
    pub fn seed(&self) -> GateId {
        *self.ladder.last().unwrap()
    }
}

fn is_square(basis: &Basis, name: &str) -> bool {
    basis
        .function(name)
        .and_then(BasisFn::polynomial)
        .is_some_and(|p| *p == Poly::from_ints(&[0, 0, 1]))
}

struct Recursion<'a> {
    n: &'a Circuit,
    out: Builder,
    ladder: Vec<GateId>,
    memo: HashMap<(usize, usize), GateId>,
    calls: usize,
}

impl Recursion<'_> {
    /// `a(m, f^i(k))` for the subcircuit `m` rooted at gate `g` of `n`.
    fn a(&mut self, g: usize, i: usize) -> GateId {
        if let Some(&x) = self.memo.get(&(g, i)) {
            return x;
        }
        self.calls += 1;
        let gate = &self.n.gates()[g];
        let arg = |k: usize| gate.inputs[k].index();
        let r = match &gate.kind {
            GateKind::ConstZero => self.out.zero(),
            GateKind::ConstOne => self.ladder[i],
            GateKind::Add | GateKind::Sub => {
                let x = self.a(arg(0), i);
                let y = self.a(arg(1), i);
                if gate.kind == GateKind::Add {
                    self.out.add(x, y)
                } else {
                    self.out.sub(x, y)
                }
            }
            GateKind::Apply(_) => {
                let x = self.a(arg(0), i - 1);
                self.out.apply(F, &[x])
            }
            _ => unreachable!("checked by the caller"),
        };
        self.memo.insert((g, i), r);
        r
    }
}

/// Rewrites a `{0, 1, +, -, sq}` circuit into one over `{0, k, +, -, f}`
/// that is positive iff the input is.
pub fn square_from_unary(
    c: &Circuit,
    spec: &UnaryAlmostSquareSpec,
) -> Result<Circuit, TransformError> {
    square_from_unary_traced(c, spec).map(|t| t.circuit)
}

pub fn square_from_unary_traced(
    c: &Circuit,
    spec: &UnaryAlmostSquareSpec,
) -> Result<SqTrace, TransformError> {
    spec.validate()?;
    for (i, g) in c.gates().iter().enumerate() {
        let ok = match &g.kind {
            GateKind::ConstZero | GateKind::ConstOne | GateKind::Add | GateKind::Sub => true,
            GateKind::Apply(name) => is_square(c.basis(), name),
            _ => false,
        };
        if !ok {
            return Err(TransformError::Disallowed {
                gate: GateId(i as u32),
                kind: g.kind.mnemonic(),
            });
        }
    }
    // n = 2c - 1 is odd, hence nonzero.
    let mut nb = Builder::extend(c);
    let two_c = nb.add(c.output(), c.output());
    let one = nb.one();
    let n_out = nb.sub(two_c, one);
    let n = nb.finish(n_out)?;
    let norm = n.size();

    let mut out = Builder::new(Arc::new(spec.basis()));
    let top = 3 * norm + 3;
    let mut ladder = vec![out.named(K)];
    for _ in 0..top {
        let prev = *ladder.last().unwrap();
        ladder.push(out.apply(F, &[prev]));
    }
    let mut rec = Recursion {
        n: &n,
        out,
        ladder,
        memo: HashMap::new(),
        calls: 0,
    };
    let root = rec.a(n.output().index(), top);
    let Recursion {
        out, ladder, calls, ..
    } = rec;
    Ok(SqTrace {
        circuit: out.finish(root)?,
        n,
        norm,
        ladder,
        calls,
    })
}
