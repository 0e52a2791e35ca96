//! Dyadic rationals `m * 2^e` and closed intervals over them with outward
//! rounding to a relative precision (number of mantissa bits).

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign as BigSign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::eval::Sign;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Round {
    Down,
    Up,
}

/// `mant * 2^exp`
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Dyadic {
    mant: BigInt,
    exp: i64,
}

impl Dyadic {
    pub fn new(mant: BigInt, exp: i64) -> Self {
        if mant.is_zero() {
            return Dyadic::zero();
        }
        Dyadic { mant, exp }
    }

    /// Same value with the trailing zero bits of the mantissa moved into the exponent.
    pub fn normalized(self) -> Dyadic {
        match self.mant.trailing_zeros() {
            Some(tz) if tz > 0 => Dyadic {
                mant: self.mant >> tz as usize,
                exp: self.exp + tz as i64,
            },
            _ => self,
        }
    }

    pub fn zero() -> Self {
        Dyadic {
            mant: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn from_int(n: i64) -> Self {
        Dyadic::new(BigInt::from(n), 0)
    }

    /// `2^e`
    pub fn pow2(e: i64) -> Self {
        Dyadic::new(BigInt::one(), e)
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mant
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn signum(&self) -> Sign {
        match self.mant.sign() {
            BigSign::Minus => Sign::Neg,
            BigSign::NoSign => Sign::Zero,
            BigSign::Plus => Sign::Pos,
        }
    }

    /// Exponent `t` with `|x| < 2^t`; meaningless for zero.
    pub fn top(&self) -> i64 {
        self.exp + self.mant.bits() as i64
    }

    pub fn neg(&self) -> Dyadic {
        Dyadic {
            mant: -&self.mant,
            exp: self.exp,
        }
    }

    pub fn abs(&self) -> Dyadic {
        Dyadic {
            mant: self.mant.abs(),
            exp: self.exp,
        }
    }

    pub fn to_rational(&self) -> BigRational {
        if self.exp >= 0 {
            BigRational::from_integer(&self.mant << self.exp as usize)
        } else {
            BigRational::new(self.mant.clone(), BigInt::one() << (-self.exp) as usize)
        }
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = self.mant.bits() as i64;
        let shift = (bits - 60).max(0);
        let m = (&self.mant >> shift as usize)
            .to_string()
            .parse::<f64>()
            .unwrap_or(0.0);
        let e = self.exp + shift;
        if e > 4000 {
            return m.signum() * f64::INFINITY;
        }
        if e < -4000 {
            return 0.0;
        }
        m * 2f64.powi(e as i32)
    }

    /// Rounds to at most `prec` mantissa bits in the given direction.
    pub fn round(&self, prec: u64, dir: Round) -> Dyadic {
        let bits = self.mant.bits();
        if bits <= prec {
            return self.clone();
        }
        let shift = bits - prec;
        let (q, r) = self.mant.div_mod_floor(&(BigInt::one() << shift as usize));
        let q = if dir == Round::Up && !r.is_zero() {
            q + 1
        } else {
            q
        };
        Dyadic::new(q, self.exp + shift as i64)
    }

    /// Both operands rewritten over a common exponent.
    fn align(&self, other: &Dyadic) -> (BigInt, BigInt, i64) {
        let e = self.exp.min(other.exp);
        (
            &self.mant << (self.exp - e) as usize,
            &other.mant << (other.exp - e) as usize,
            e,
        )
    }

    pub fn add_round(&self, other: &Dyadic, prec: u64, dir: Round) -> Dyadic {
        if self.is_zero() {
            return other.round(prec, dir);
        }
        if other.is_zero() {
            return self.round(prec, dir);
        }
        let (big, small) = if self.top() >= other.top() {
            (self, other)
        } else {
            (other, self)
        };
        let guard = prec as i64 + 4;
        let widen = (guard - big.mant.bits() as i64).max(0);
        let e = big.exp - widen;
        if small.top() <= e {
            // `small` is below one unit in the last place of `big` widened
            // to at least `guard` bits, so it only acts as a sticky bit.
            let m = &big.mant << widen as usize;
            let m = match (small.signum(), dir) {
                (Sign::Pos, Round::Down) | (Sign::Neg, Round::Up) => m,
                (Sign::Pos, Round::Up) => m + 1,
                _ => m - 1,
            };
            return Dyadic::new(m, e).round(prec, dir);
        }
        let (a, b, e) = self.align(other);
        Dyadic::new(a + b, e).round(prec, dir)
    }

    pub fn add_exact(&self, other: &Dyadic) -> Dyadic {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        let (a, b, e) = self.align(other);
        Dyadic::new(a + b, e)
    }

    pub fn sub_exact(&self, other: &Dyadic) -> Dyadic {
        self.add_exact(&other.neg())
    }

    /// Exact value of a rational with a power-of-two denominator.
    pub fn from_dyadic_rational(q: &BigRational) -> Option<Dyadic> {
        let d = q.denom();
        if !crate::poly::is_power_of_two(d) {
            return None;
        }
        Some(Dyadic::new(q.numer().clone(), -(d.bits() as i64 - 1)))
    }

    /// Size in bits of mantissa and exponent together.
    pub fn bit_size(&self) -> u64 {
        self.mant.bits() + 64 - self.exp.unsigned_abs().leading_zeros() as u64
    }

    pub fn sub_round(&self, other: &Dyadic, prec: u64, dir: Round) -> Dyadic {
        self.add_round(&other.neg(), prec, dir)
    }

    pub fn mul_exact(&self, other: &Dyadic) -> Dyadic {
        Dyadic::new(&self.mant * &other.mant, self.exp + other.exp)
    }

    pub fn mul_round(&self, other: &Dyadic, prec: u64, dir: Round) -> Dyadic {
        self.mul_exact(other).round(prec, dir)
    }

    /// `self / other` rounded; `other` must be non-zero.
    pub fn div_round(&self, other: &Dyadic, prec: u64, dir: Round) -> Dyadic {
        assert!(!other.is_zero(), "dyadic division by zero");
        if self.is_zero() {
            return Dyadic::zero();
        }
        let negative = self.mant.is_negative() != other.mant.is_negative();
        let a = self.mant.abs();
        let b = other.mant.abs();
        let shift = (prec as i64 + 2 + b.bits() as i64 - a.bits() as i64).max(0);
        let (q, r) = (a << shift as usize).div_rem(&b);
        let exact = r.is_zero();
        // Round the magnitude towards zero or away from zero.
        let away = matches!((negative, dir), (false, Round::Up) | (true, Round::Down));
        let q = if away && !exact { q + 1 } else { q };
        let q = if negative { -q } else { q };
        Dyadic::new(q, self.exp - other.exp - shift).round(prec, dir)
    }

    /// Square root of a non-negative value.
    pub fn sqrt_round(&self, prec: u64, dir: Round) -> Dyadic {
        assert!(!self.mant.is_negative(), "square root of a negative dyadic");
        if self.is_zero() {
            return Dyadic::zero();
        }
        let want = 2 * prec as i64 + 4;
        let mut shift = (want - self.mant.bits() as i64).max(0);
        if (self.exp - shift).rem_euclid(2) != 0 {
            shift += 1;
        }
        let m = &self.mant << shift as usize;
        let e = self.exp - shift;
        let r = m.sqrt();
        let r = if dir == Round::Up && &r * &r != m {
            r + 1
        } else {
            r
        };
        Dyadic::new(r, e / 2).round(prec, dir)
    }

    /// Rational rounded to `prec` bits.
    pub fn from_rational(q: &BigRational, prec: u64, dir: Round) -> Dyadic {
        let num = Dyadic::new(q.numer().clone(), 0);
        if q.denom().is_one() {
            return num.round(prec, dir);
        }
        num.div_round(&Dyadic::new(q.denom().clone(), 0), prec, dir)
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let (sa, sb) = (self.signum(), other.signum());
        if sa != sb {
            return sa.cmp(&sb);
        }
        if sa == Sign::Zero {
            return Ordering::Equal;
        }
        let by_top = self.top().cmp(&other.top());
        if by_top != Ordering::Equal {
            return if sa == Sign::Pos {
                by_top
            } else {
                by_top.reverse()
            };
        }
        let (a, b, _) = self.align(other);
        a.cmp(&b)
    }
}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}*2^{}", self.mant, self.exp)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", decimal_string(&self.to_rational(), 20))
    }
}

/// Decimal rendering of a rational truncated to `digits` fractional digits.
pub fn decimal_string(q: &BigRational, digits: usize) -> String {
    let neg = q.is_negative();
    let q = q.abs();
    let int = q.numer() / q.denom();
    let frac = q - BigRational::from_integer(int.clone());
    let scaled = (frac * BigRational::from_integer(BigInt::from(10).pow(digits as u32))).floor();
    let mut s = String::new();
    if neg {
        s.push('-');
    }
    s.push_str(&int.to_string());
    if digits > 0 {
        s.push('.');
        s.push_str(&format!("{:0>width$}", scaled.numer(), width = digits));
    }
    s
}

/// Closed interval `[lo, hi]` with dyadic endpoints.
#[derive(Clone, PartialEq, Eq)]
pub struct DyadicInterval {
    lo: Dyadic,
    hi: Dyadic,
    prec: u64,
}

impl DyadicInterval {
    pub fn new(lo: Dyadic, hi: Dyadic, prec: u64) -> Self {
        debug_assert!(lo <= hi, "inverted interval {lo:?} > {hi:?}");
        DyadicInterval { lo, hi, prec }
    }

    pub fn point(x: Dyadic, prec: u64) -> Self {
        let lo = x.round(prec, Round::Down);
        let hi = x.round(prec, Round::Up);
        DyadicInterval { lo, hi, prec }
    }

    pub fn zero(prec: u64) -> Self {
        DyadicInterval::point(Dyadic::zero(), prec)
    }

    pub fn from_rational(q: &BigRational, prec: u64) -> Self {
        DyadicInterval {
            lo: Dyadic::from_rational(q, prec, Round::Down),
            hi: Dyadic::from_rational(q, prec, Round::Up),
            prec,
        }
    }

    pub fn lo(&self) -> &Dyadic {
        &self.lo
    }

    pub fn hi(&self) -> &Dyadic {
        &self.hi
    }

    pub fn precision_bits(&self) -> u64 {
        self.prec
    }

    pub fn width(&self) -> Dyadic {
        self.hi.sub_round(&self.lo, self.prec.max(64), Round::Up)
    }

    pub fn contains_zero(&self) -> bool {
        self.lo.signum() != Sign::Pos && self.hi.signum() != Sign::Neg
    }

    pub fn contains(&self, x: &BigRational) -> bool {
        &self.lo.to_rational() <= x && x <= &self.hi.to_rational()
    }

    /// The sign shared by every point, if the interval does not meet zero.
    pub fn strict_sign(&self) -> Option<Sign> {
        if self.lo.signum() == Sign::Pos {
            Some(Sign::Pos)
        } else if self.hi.signum() == Sign::Neg {
            Some(Sign::Neg)
        } else if self.lo.is_zero() && self.hi.is_zero() {
            Some(Sign::Zero)
        } else {
            None
        }
    }

    /// True when the interval sits inside `(-2^-e, 2^-e)` and is narrower than `2^-e`.
    pub fn within_gap(&self, e: i64) -> bool {
        let bound = Dyadic::pow2(-e);
        self.hi < bound && self.lo > bound.neg() && self.width() < bound
    }

    pub fn neg(&self) -> Self {
        DyadicInterval {
            lo: self.hi.neg(),
            hi: self.lo.neg(),
            prec: self.prec,
        }
    }

    pub fn add(&self, other: &Self, prec: u64) -> Self {
        DyadicInterval {
            lo: self.lo.add_round(&other.lo, prec, Round::Down),
            hi: self.hi.add_round(&other.hi, prec, Round::Up),
            prec,
        }
    }

    pub fn sub(&self, other: &Self, prec: u64) -> Self {
        DyadicInterval {
            lo: self.lo.sub_round(&other.hi, prec, Round::Down),
            hi: self.hi.sub_round(&other.lo, prec, Round::Up),
            prec,
        }
    }

    pub fn mul(&self, other: &Self, prec: u64) -> Self {
        let prods = [
            self.lo.mul_exact(&other.lo),
            self.lo.mul_exact(&other.hi),
            self.hi.mul_exact(&other.lo),
            self.hi.mul_exact(&other.hi),
        ];
        let lo = prods.iter().min().unwrap().round(prec, Round::Down);
        let hi = prods.iter().max().unwrap().round(prec, Round::Up);
        DyadicInterval { lo, hi, prec }
    }

    /// `self * self`, tighter than `mul` when the interval straddles zero.
    pub fn square(&self, prec: u64) -> Self {
        if self.contains_zero() {
            let a = self.lo.mul_exact(&self.lo);
            let b = self.hi.mul_exact(&self.hi);
            let hi = a.max(b).round(prec, Round::Up);
            DyadicInterval {
                lo: Dyadic::zero(),
                hi,
                prec,
            }
        } else {
            self.mul(self, prec)
        }
    }

    /// Division by an interval that excludes zero; `None` otherwise.
    pub fn div(&self, other: &Self, prec: u64) -> Option<Self> {
        if other.contains_zero() {
            return None;
        }
        let quots = [
            (&self.lo, &other.lo),
            (&self.lo, &other.hi),
            (&self.hi, &other.lo),
            (&self.hi, &other.hi),
        ];
        let lo = quots
            .iter()
            .map(|(a, b)| a.div_round(b, prec, Round::Down))
            .min()
            .unwrap();
        let hi = quots
            .iter()
            .map(|(a, b)| a.div_round(b, prec, Round::Up))
            .max()
            .unwrap();
        Some(DyadicInterval { lo, hi, prec })
    }

    /// Square root of the non-negative part of the interval.
    pub fn sqrt(&self, prec: u64) -> Self {
        let clamp = |d: &Dyadic| {
            if d.signum() == Sign::Neg {
                Dyadic::zero()
            } else {
                d.clone()
            }
        };
        DyadicInterval {
            lo: clamp(&self.lo).sqrt_round(prec, Round::Down),
            hi: clamp(&self.hi).sqrt_round(prec, Round::Up),
            prec,
        }
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &Self) -> Self {
        DyadicInterval {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
            prec: self.prec.min(other.prec),
        }
    }

    /// Scales by a rational exactly representable as a dyadic shift.
    pub fn scale_pow2(&self, e: i64) -> Self {
        DyadicInterval {
            lo: Dyadic::new(self.lo.mant.clone(), self.lo.exp + e),
            hi: Dyadic::new(self.hi.mant.clone(), self.hi.exp + e),
            prec: self.prec,
        }
    }
}

impl fmt::Debug for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?}, {:?}]@{}", self.lo, self.hi, self.prec)
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::{rat, ratio};
    use proptest::prelude::*;

    fn dy(m: i64, e: i64) -> Dyadic {
        Dyadic::new(BigInt::from(m), e)
    }

    #[test]
    fn rounding_is_directed() {
        let x = dy(0b1011, 0);
        assert_eq!(x.round(2, Round::Down), dy(0b10, 2));
        assert_eq!(x.round(2, Round::Up), dy(0b11, 2));
        assert_eq!(x.neg().round(2, Round::Down), dy(-0b11, 2));
    }

    #[test]
    fn sticky_addition_with_huge_exponent_gap() {
        let big = dy(1, 0);
        let tiny = dy(1, -1_000_000_000);
        let lo = big.add_round(&tiny, 64, Round::Down);
        let hi = big.add_round(&tiny, 64, Round::Up);
        assert_eq!(lo.to_rational(), rat(1));
        assert!(hi > dy(1, 0));
        let lo = big.sub_round(&tiny, 64, Round::Down);
        assert!(lo < dy(1, 0));
    }

    #[test]
    fn third_enclosure() {
        let iv = DyadicInterval::from_rational(&ratio(1, 3), 16);
        assert!(iv.contains(&ratio(1, 3)));
        assert!(iv.width() <= Dyadic::pow2(-16));
    }

    #[test]
    fn sqrt_two_brackets() {
        let two = DyadicInterval::point(dy(2, 0), 80);
        let r = two.sqrt(80);
        assert!(r.lo().mul_exact(r.lo()) <= dy(2, 0));
        assert!(r.hi().mul_exact(r.hi()) >= dy(2, 0));
    }

    proptest! {
        #[test]
        fn interval_ops_enclose_rational_results(
            a in -1000i64..1000, b in 1i64..1000, c in -1000i64..1000, d in 1i64..1000,
            prec in 8u64..80,
        ) {
            let x = ratio(a, b);
            let y = ratio(c, d);
            let ix = DyadicInterval::from_rational(&x, prec);
            let iy = DyadicInterval::from_rational(&y, prec);
            prop_assert!(ix.add(&iy, prec).contains(&(&x + &y)));
            prop_assert!(ix.sub(&iy, prec).contains(&(&x - &y)));
            prop_assert!(ix.mul(&iy, prec).contains(&(&x * &y)));
            if c != 0 {
                prop_assert!(ix.div(&iy, prec).unwrap().contains(&(&x / &y)));
            }
        }

        #[test]
        fn comparison_matches_rationals(a in -10_000i64..10_000, ea in -40i64..40, b in -10_000i64..10_000, eb in -40i64..40) {
            let x = dy(a, ea);
            let y = dy(b, eb);
            prop_assert_eq!(x.cmp(&y), x.to_rational().cmp(&y.to_rational()));
        }
    }
}
