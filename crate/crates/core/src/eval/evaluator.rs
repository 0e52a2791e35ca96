use std::collections::HashMap;

use num_rational::BigRational;
use num_traits::ToPrimitive;

use super::exact::{exact_values, Exact};
use super::{Dyadic, DyadicInterval, EvalError, Sign};
use crate::circuit::{BasisFn, Circuit, ConstValue, GateId, GateKind};
use crate::zerobound::{height_bound_partial, HeightBound};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalConfig {
    /// First working precision of every sign decision.
    pub start_bits: u64,
    /// Hard cap on the working precision.
    pub max_bits: u64,
    /// Gates whose exact rational value fits in this many bits are evaluated
    /// exactly before any interval work.
    pub exact_cap: u64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            start_bits: 64,
            max_bits: 1 << 20,
            exact_cap: 16384,
        }
    }
}

/// Coefficients of a root gate as seen by [`root_enclosure`].
pub trait CoefficientSource {
    /// Enclosures of `a_0 .. a_δ` at working precision `prec`.
    fn enclose(&mut self, prec: u64) -> Result<Vec<DyadicInterval>, EvalError>;
    /// Exact sign of `a_i`.
    fn coeff_sign(&mut self, i: usize) -> Result<Sign, EvalError>;
    /// Exact sign of `a_1^2 - 4 a_0 a_2`.
    fn disc_sign(&mut self) -> Result<Sign, EvalError>;
    fn gate(&self) -> GateId {
        GateId(0)
    }
}

/// Exactly known rational coefficients.
pub struct ExactCoefficients(pub Vec<BigRational>);

impl CoefficientSource for ExactCoefficients {
    fn enclose(&mut self, prec: u64) -> Result<Vec<DyadicInterval>, EvalError> {
        Ok(self
            .0
            .iter()
            .map(|q| DyadicInterval::from_rational(q, prec))
            .collect())
    }

    fn coeff_sign(&mut self, i: usize) -> Result<Sign, EvalError> {
        Ok(Sign::of(&self.0[i]))
    }

    fn disc_sign(&mut self) -> Result<Sign, EvalError> {
        let a = &self.0;
        let four = BigRational::from_integer(4.into());
        Ok(Sign::of(&(&a[1] * &a[1] - four * &a[0] * &a[2])))
    }
}

/// Enclosure of the largest real root of `Σ a_i x^i` (0 if there is none)
/// for `δ <= 2`, at working precision `prec`. Coefficient enclosures are
/// requested at increasing precision until every divisor excludes zero;
/// `cap` bounds that escalation.
pub fn root_enclosure(
    src: &mut dyn CoefficientSource,
    delta: u32,
    prec: u64,
    cap: u64,
) -> Result<DyadicInterval, EvalError> {
    match delta {
        1 => linear_root(src, prec, cap),
        2 => {
            let s2 = src.coeff_sign(2)?;
            if s2 == Sign::Zero {
                return linear_root(src, prec, cap);
            }
            match src.disc_sign()? {
                Sign::Neg => Ok(DyadicInterval::zero(prec)),
                Sign::Zero => escalate_div(src, prec, cap, |c, q| {
                    c[1].neg().div(&c[2].scale_pow2(1), q)
                }),
                Sign::Pos => {
                    let s1 = src.coeff_sign(1)?;
                    // Pick the form of the larger root without cancellation.
                    let direct = s1 == Sign::Zero || s1.negate() == s2;
                    escalate_div(src, prec, cap, |c, q| {
                        let d = c[1].square(q).sub(&c[0].mul(&c[2], q).scale_pow2(2), q);
                        let r = d.sqrt(q);
                        let sr = if s2 == Sign::Pos { r } else { r.neg() };
                        if direct {
                            c[1].neg().add(&sr, q).div(&c[2].scale_pow2(1), q)
                        } else {
                            c[0].scale_pow2(1).div(&c[1].neg().sub(&sr, q), q)
                        }
                    })
                }
            }
        }
        _ => Err(EvalError::Unsupported {
            gate: src.gate(),
            what: format!("root{delta}"),
        }),
    }
}

fn linear_root(
    src: &mut dyn CoefficientSource,
    prec: u64,
    cap: u64,
) -> Result<DyadicInterval, EvalError> {
    if src.coeff_sign(1)? == Sign::Zero {
        return Ok(DyadicInterval::zero(prec));
    }
    escalate_div(src, prec, cap, |c, q| c[0].neg().div(&c[1], q))
}

fn escalate_div(
    src: &mut dyn CoefficientSource,
    prec: u64,
    cap: u64,
    f: impl Fn(&[DyadicInterval], u64) -> Option<DyadicInterval>,
) -> Result<DyadicInterval, EvalError> {
    let mut q = prec;
    loop {
        let c = src.enclose(q)?;
        if let Some(r) = f(&c, q) {
            return Ok(r);
        }
        q *= 2;
        if q > cap {
            return Err(EvalError::PrecisionExhausted {
                gate: src.gate(),
                cap,
            });
        }
    }
}

/// Adaptive-precision evaluator for one circuit. Choice guards and root
/// case distinctions are settled by exact sign decisions, so only the
/// branches actually taken are ever evaluated.
pub struct Evaluator<'c> {
    circuit: &'c Circuit,
    config: EvalConfig,
    exact: Vec<Option<Exact>>,
    bounds: Vec<Option<HeightBound>>,
    signs: Vec<Option<Sign>>,
    disc_signs: HashMap<GateId, Sign>,
    cache: HashMap<u64, Vec<Option<DyadicInterval>>>,
}

struct GateCoefficients<'e, 'c> {
    ev: &'e mut Evaluator<'c>,
    gate: GateId,
}

impl CoefficientSource for GateCoefficients<'_, '_> {
    fn enclose(&mut self, prec: u64) -> Result<Vec<DyadicInterval>, EvalError> {
        let inputs = self.ev.circuit.gate(self.gate).inputs.clone();
        inputs.iter().map(|&x| self.ev.interval(x, prec)).collect()
    }

    fn coeff_sign(&mut self, i: usize) -> Result<Sign, EvalError> {
        let x = self.ev.circuit.gate(self.gate).inputs[i];
        self.ev.gate_sign(x)
    }

    fn disc_sign(&mut self) -> Result<Sign, EvalError> {
        self.ev.disc_sign(self.gate)
    }

    fn gate(&self) -> GateId {
        self.gate
    }
}

fn to_interval(x: &Exact, prec: u64) -> DyadicInterval {
    match x {
        Exact::Dyadic(d) => DyadicInterval::point(d.clone(), prec),
        Exact::Rational(q) => DyadicInterval::from_rational(q, prec),
    }
}

impl<'c> Evaluator<'c> {
    pub fn new(circuit: &'c Circuit, config: EvalConfig) -> Self {
        let exact = exact_values(circuit, Some(config.exact_cap))
            .into_iter()
            .map(Result::ok)
            .collect();
        Evaluator {
            circuit,
            config,
            exact,
            bounds: height_bound_partial(circuit),
            signs: vec![None; circuit.size()],
            disc_signs: HashMap::new(),
            cache: HashMap::new(),
        }
    }

    pub fn circuit(&self) -> &Circuit {
        self.circuit
    }

    pub fn decide_sign(&mut self) -> Result<Sign, EvalError> {
        self.gate_sign(self.circuit.output())
    }

    /// Exact sign of the value of gate `g`.
    pub fn gate_sign(&mut self, g: GateId) -> Result<Sign, EvalError> {
        if let Some(s) = self.signs[g.index()] {
            return Ok(s);
        }
        let s = match &self.exact[g.index()] {
            Some(x) => x.sign(),
            None => {
                let gap = self.bounds[g.index()].as_ref().map(HeightBound::gap_exp);
                self.escalate(g, gap.and_then(|e| e.to_i64()), |ev, p| ev.interval(g, p))?
            }
        };
        self.signs[g.index()] = Some(s);
        Ok(s)
    }

    /// Sign of the discriminant of a `root2` gate, as a virtual expression
    /// with its own gap certificate.
    fn disc_sign(&mut self, g: GateId) -> Result<Sign, EvalError> {
        if let Some(&s) = self.disc_signs.get(&g) {
            return Ok(s);
        }
        let a = self.circuit.gate(g).inputs.clone();
        let exact: Option<Vec<Exact>> = a.iter().map(|x| self.exact[x.index()].clone()).collect();
        let s = match exact {
            Some(v) => {
                let four = Exact::Dyadic(Dyadic::from_int(4));
                v[1].mul(&v[1]).sub(&four.mul(&v[0]).mul(&v[2])).sign()
            }
            None => {
                let hb: Option<Vec<&HeightBound>> =
                    a.iter().map(|x| self.bounds[x.index()].as_ref()).collect();
                let gap = hb.and_then(|h| {
                    let d = h[1].mul(h[1]).add(&HeightBound::int(4).mul(h[0]).mul(h[2]));
                    d.gap_exp().to_i64()
                });
                self.escalate(g, gap, |ev, p| {
                    let c: Vec<DyadicInterval> = a
                        .iter()
                        .map(|&x| ev.interval(x, p))
                        .collect::<Result<_, _>>()?;
                    Ok(c[1].square(p).sub(&c[0].mul(&c[2], p).scale_pow2(2), p))
                })?
            }
        };
        self.disc_signs.insert(g, s);
        Ok(s)
    }

    /// Doubles the precision until the enclosure excludes zero or lies
    /// inside the gap `(-2^-E, 2^-E)` with width below `2^-E`.
    fn escalate(
        &mut self,
        g: GateId,
        gap: Option<i64>,
        mut f: impl FnMut(&mut Self, u64) -> Result<DyadicInterval, EvalError>,
    ) -> Result<Sign, EvalError> {
        let mut p = self.config.start_bits;
        loop {
            let iv = f(self, p)?;
            if let Some(s) = iv.strict_sign() {
                return Ok(s);
            }
            if let Some(e) = gap {
                if iv.within_gap(e) {
                    return Ok(Sign::Zero);
                }
            }
            p *= 2;
            if p > self.config.max_bits {
                return Err(EvalError::PrecisionExhausted {
                    gate: g,
                    cap: self.config.max_bits,
                });
            }
        }
    }

    fn cached(&self, g: GateId, p: u64) -> Option<&DyadicInterval> {
        self.cache.get(&p).and_then(|v| v[g.index()].as_ref())
    }

    /// Enclosure of gate `g` at working precision `p`.
    pub fn interval(&mut self, g: GateId, p: u64) -> Result<DyadicInterval, EvalError> {
        let n = self.circuit.size();
        self.cache.entry(p).or_insert_with(|| vec![None; n]);
        let mut stack = vec![g];
        while let Some(&top) = stack.last() {
            if self.cached(top, p).is_some() {
                stack.pop();
                continue;
            }
            if let Some(x) = &self.exact[top.index()] {
                let iv = to_interval(x, p);
                self.cache.get_mut(&p).unwrap()[top.index()] = Some(iv);
                stack.pop();
                continue;
            }
            let gate = self.circuit.gate(top);
            // Inputs whose enclosures the gate needs at this precision.
            let needed: Vec<GateId> = match &gate.kind {
                GateKind::Ch => {
                    let k = match self.gate_sign(gate.inputs[0])? {
                        Sign::Neg => 1,
                        Sign::Zero => 2,
                        Sign::Pos => 3,
                    };
                    vec![self.circuit.gate(top).inputs[k]]
                }
                // Root gates request their coefficients themselves.
                GateKind::Root(_) => Vec::new(),
                _ => gate.inputs.clone(),
            };
            let missing: Vec<GateId> = needed
                .iter()
                .copied()
                .filter(|&x| self.cached(x, p).is_none())
                .collect();
            if !missing.is_empty() {
                stack.extend(missing);
                continue;
            }
            let iv = self.compute(top, &needed, p)?;
            self.cache.get_mut(&p).unwrap()[top.index()] = Some(iv);
            stack.pop();
        }
        Ok(self.cached(g, p).unwrap().clone())
    }

    fn compute(
        &mut self,
        g: GateId,
        needed: &[GateId],
        p: u64,
    ) -> Result<DyadicInterval, EvalError> {
        let circuit = self.circuit;
        let gate = circuit.gate(g);
        let arg = |i: usize| self.cached(needed[i], p).unwrap();
        let unsupported = || EvalError::Unsupported {
            gate: g,
            what: gate.kind.mnemonic(),
        };
        Ok(match &gate.kind {
            GateKind::ConstZero => DyadicInterval::zero(p),
            GateKind::ConstOne => DyadicInterval::point(Dyadic::from_int(1), p),
            GateKind::ConstRational(q) => DyadicInterval::from_rational(q, p),
            GateKind::ConstNamed(name) => match circuit.basis().constant(name) {
                Some(ConstValue::Rational(q)) => DyadicInterval::from_rational(q, p),
                _ => return Err(unsupported()),
            },
            GateKind::Add => arg(0).add(arg(1), p),
            GateKind::Sub => arg(0).sub(arg(1), p),
            GateKind::Mul => arg(0).mul(arg(1), p),
            GateKind::Ch => arg(0).clone(),
            GateKind::Apply(name) => {
                match circuit.basis().function(name).and_then(BasisFn::polynomial) {
                    Some(poly) => {
                        let x = arg(0).clone();
                        let mut acc = DyadicInterval::zero(p);
                        for c in poly.coeffs().iter().rev() {
                            acc = acc.mul(&x, p).add(&DyadicInterval::from_rational(c, p), p);
                        }
                        acc
                    }
                    None => return Err(unsupported()),
                }
            }
            GateKind::Root(d) => {
                let cap = self.config.max_bits;
                let mut src = GateCoefficients { ev: self, gate: g };
                root_enclosure(&mut src, *d, p, cap)?
            }
            GateKind::Input(_) => return Err(unsupported()),
        })
    }

    /// Enclosure of gate `g` of width at most `2^-bits`, escalating the
    /// working precision from `bits + 16` as needed.
    pub fn enclose(&mut self, g: GateId, bits: u64) -> Result<DyadicInterval, EvalError> {
        let target = Dyadic::pow2(-(bits as i64));
        let mut p = bits + 16;
        loop {
            let iv = self.interval(g, p)?;
            if iv.width() <= target {
                return Ok(iv);
            }
            p *= 2;
            if p > self.config.max_bits {
                return Err(EvalError::PrecisionExhausted {
                    gate: g,
                    cap: self.config.max_bits,
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse;
    use crate::eval::{decide_sign, eval_interval};
    use crate::poly::{rat, ratio};

    const SQRT2: &str = "g0 = const -2\ng1 = const 0\ng2 = const 1\ng3 = root2 g0 g1 g2\n";

    #[test]
    fn exact_sum() {
        let c = parse("g0 = const 1\ng1 = add g0 g0\nout g1").unwrap();
        let iv = eval_interval(&c, 8).unwrap();
        assert_eq!(iv.lo().to_rational(), rat(2));
        assert_eq!(iv.hi().to_rational(), rat(2));
    }

    #[test]
    fn one_third() {
        let c = parse("g0 = const -1\ng1 = const 3\ng2 = root1 g0 g1\nout g2").unwrap();
        let iv = eval_interval(&c, 8).unwrap();
        assert!(iv.contains(&ratio(1, 3)));
        assert!(iv.width() <= Dyadic::pow2(-8));
    }

    #[test]
    fn sqrt2_at_60_bits() {
        let c = parse(&format!("{SQRT2}out g3")).unwrap();
        let iv = eval_interval(&c, 60).unwrap();
        assert!(iv.width() <= Dyadic::pow2(-60));
        let lo = iv.lo().to_rational();
        let hi = iv.hi().to_rational();
        assert!(&lo * &lo <= rat(2) && &hi * &hi >= rat(2));
    }

    #[test]
    fn root_enclosure_cases() {
        let mut src = ExactCoefficients(vec![rat(-1), rat(3)]);
        assert!(root_enclosure(&mut src, 1, 64, 1 << 12)
            .unwrap()
            .contains(&ratio(1, 3)));
        let mut src = ExactCoefficients(vec![rat(-2), rat(0), rat(1)]);
        let iv = root_enclosure(&mut src, 2, 64, 1 << 12).unwrap();
        let (lo, hi) = (iv.lo().to_rational(), iv.hi().to_rational());
        assert!(&lo * &lo <= rat(2) && &hi * &hi >= rat(2));
        let mut src = ExactCoefficients(vec![rat(1), rat(0), rat(1)]);
        assert_eq!(
            root_enclosure(&mut src, 2, 64, 1 << 12)
                .unwrap()
                .strict_sign(),
            Some(Sign::Zero)
        );
        let mut src = ExactCoefficients(vec![rat(1), rat(-2), rat(1)]);
        assert!(root_enclosure(&mut src, 2, 64, 1 << 12)
            .unwrap()
            .contains(&rat(1)));
        let mut src = ExactCoefficients(vec![rat(1), rat(0), rat(0), rat(1)]);
        assert!(matches!(
            root_enclosure(&mut src, 3, 64, 1 << 12),
            Err(EvalError::Unsupported { .. })
        ));
    }

    #[test]
    fn larger_root_with_negative_leading_coefficient() {
        // -x^2 + x + 1: roots (1 ± √5)/2, the larger is ≈ 1.618
        let mut src = ExactCoefficients(vec![rat(1), rat(1), rat(-1)]);
        let iv = root_enclosure(&mut src, 2, 64, 1 << 12).unwrap();
        assert!(iv.lo().to_f64() > 1.618 && iv.hi().to_f64() < 1.6181);
    }

    #[test]
    fn signs() {
        assert_eq!(
            decide_sign(&parse("g0 = const 1\ng1 = sub g0 g0\nout g1").unwrap()).unwrap(),
            Sign::Zero
        );
        let c = parse(&format!(
            "{SQRT2}g4 = const -3\ng5 = const 2\ng6 = root1 g4 g5\ng7 = sub g3 g6\nout g7"
        ))
        .unwrap();
        assert_eq!(decide_sign(&c).unwrap(), Sign::Neg);
    }

    #[test]
    fn nested_radicals_cancel() {
        let text = "\
g0 = const 0
g1 = const 1
g2 = const -2
g3 = const -3
g4 = const -6
g5 = root2 g2 g0 g1
g6 = root2 g3 g0 g1
g7 = root2 g4 g0 g1
g8 = const 5
g9 = add g7 g7
g10 = add g8 g9
g11 = sub g0 g10
g12 = root2 g11 g0 g1
g13 = add g5 g6
g14 = sub g13 g12
out g14";
        assert_eq!(decide_sign(&parse(text).unwrap()).unwrap(), Sign::Zero);
    }

    #[test]
    fn zero_guard_selects_middle_branch() {
        // ch(√2·√2 − 2, 5, 7, 9) = 7
        let text = format!(
            "{SQRT2}g4 = mul g3 g3\ng5 = add g4 g0\ng6 = const 5\ng7 = const 7\ng8 = const 9\ng9 = ch g5 g6 g7 g8\nout g9"
        );
        let c = parse(&text).unwrap();
        let iv = eval_interval(&c, 30).unwrap();
        assert!(iv.contains(&rat(7)));
    }
}
