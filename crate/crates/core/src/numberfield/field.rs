use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::eval::Sign;
use crate::numberfield::NfError;
use crate::poly::{format_rational, Poly};

/// Bits of isolating-interval width established at construction.
const INITIAL_REFINEMENT: u32 = 64;

/// A real number field `Q(θ)` with `θ` pinned by an isolating interval of a
/// monic minimal polynomial.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct NumberField {
    min_poly: Poly,
    lo: BigRational,
    hi: BigRational,
    // Pre-refined copy of `[lo, hi]` used as the starting point for refinement.
    rlo: BigRational,
    rhi: BigRational,
}

impl NumberField {
    /// Irreducibility of `min_poly` is trusted, not checked.
    pub fn new(min_poly: Poly, lo: BigRational, hi: BigRational) -> Result<Arc<Self>, NfError> {
        if !min_poly.is_monic() || min_poly.degree().unwrap_or(0) == 0 {
            return Err(NfError::BadMinPoly);
        }
        if lo >= hi {
            return Err(NfError::BadIsolation);
        }
        let (sl, sh) = (min_poly.sign_at(&lo), min_poly.sign_at(&hi));
        if sl * sh >= 0 {
            return Err(NfError::BadIsolation);
        }
        let mut field = NumberField {
            min_poly,
            rlo: lo.clone(),
            rhi: hi.clone(),
            lo,
            hi,
        };
        let (rlo, rhi) = field.refine(INITIAL_REFINEMENT);
        field.rlo = rlo;
        field.rhi = rhi;
        Ok(Arc::new(field))
    }

    pub fn degree(&self) -> usize {
        self.min_poly.degree().unwrap()
    }

    pub fn min_poly(&self) -> &Poly {
        &self.min_poly
    }

    /// The isolating interval as given.
    pub fn isolating(&self) -> (&BigRational, &BigRational) {
        (&self.lo, &self.hi)
    }

    /// Isolating interval for `θ` narrowed by `bits` further bisection steps.
    pub fn refine(&self, bits: u32) -> (BigRational, BigRational) {
        let (mut lo, mut hi) = (self.rlo.clone(), self.rhi.clone());
        let s_lo = self.min_poly.sign_at(&lo);
        let two = BigRational::from_integer(BigInt::from(2));
        for _ in 0..bits {
            let mid = (&lo + &hi) / &two;
            let s = self.min_poly.sign_at(&mid);
            if s == 0 {
                return (mid.clone(), mid);
            }
            if s == s_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo, hi)
    }

    pub fn zero(self: &Arc<Self>) -> NfElement {
        NfElement::from_coords(self, vec![BigRational::zero(); self.degree()])
    }

    pub fn one(self: &Arc<Self>) -> NfElement {
        self.rational(BigRational::one())
    }

    pub fn rational(self: &Arc<Self>, q: BigRational) -> NfElement {
        let mut coords = vec![BigRational::zero(); self.degree()];
        coords[0] = q;
        NfElement::from_coords(self, coords)
    }

    /// The primitive element `θ`.
    pub fn theta(self: &Arc<Self>) -> NfElement {
        NfElement::from_poly(self, &Poly::x())
    }
}

impl fmt::Debug for NumberField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Q[x]/{:?} near [{}, {}]",
            self.min_poly,
            format_rational(&self.lo),
            format_rational(&self.hi)
        )
    }
}

/// Element of a number field in power-basis coordinates `Σ cᵢ θⁱ`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct NfElement {
    field: Arc<NumberField>,
    coords: Vec<BigRational>,
}

impl NfElement {
    /// Coordinates beyond the field degree are rejected by a debug assertion;
    /// short vectors are zero-padded.
    pub fn from_coords(field: &Arc<NumberField>, mut coords: Vec<BigRational>) -> Self {
        let n = field.degree();
        debug_assert!(coords.len() <= n);
        coords.resize(n, BigRational::zero());
        NfElement {
            field: field.clone(),
            coords,
        }
    }

    fn from_poly(field: &Arc<NumberField>, p: &Poly) -> Self {
        let r = p.rem(&field.min_poly);
        NfElement::from_coords(field, r.coeffs().to_vec())
    }

    pub fn field(&self) -> &Arc<NumberField> {
        &self.field
    }

    pub fn coords(&self) -> &[BigRational] {
        &self.coords
    }

    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(Zero::is_zero)
    }

    fn as_poly(&self) -> Poly {
        Poly::new(self.coords.clone())
    }

    fn check(&self, other: &NfElement) -> Result<(), NfError> {
        if Arc::ptr_eq(&self.field, &other.field) || self.field == other.field {
            Ok(())
        } else {
            Err(NfError::FieldMismatch)
        }
    }

    pub fn add(&self, other: &NfElement) -> Result<NfElement, NfError> {
        self.check(other)?;
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a + b)
            .collect();
        Ok(NfElement {
            field: self.field.clone(),
            coords,
        })
    }

    pub fn sub(&self, other: &NfElement) -> Result<NfElement, NfError> {
        self.check(other)?;
        let coords = self
            .coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| a - b)
            .collect();
        Ok(NfElement {
            field: self.field.clone(),
            coords,
        })
    }

    pub fn mul(&self, other: &NfElement) -> Result<NfElement, NfError> {
        self.check(other)?;
        Ok(NfElement::from_poly(
            &self.field,
            &self.as_poly().mul(&other.as_poly()),
        ))
    }

    pub fn neg(&self) -> NfElement {
        NfElement {
            field: self.field.clone(),
            coords: self.coords.iter().map(|c| -c).collect(),
        }
    }

    pub fn scale(&self, k: &BigRational) -> NfElement {
        NfElement {
            field: self.field.clone(),
            coords: self.coords.iter().map(|c| c * k).collect(),
        }
    }

    #[doc(hidden)]
    pub fn inverse(&self) -> Result<NfElement, NfError> {
        if self.is_zero() {
            return Err(NfError::DivisionByZero);
        }
        let (g, s, _) = self.as_poly().ext_gcd(&self.field.min_poly);
        if g.degree() != Some(0) {
            return Err(NfError::Reducible);
        }
        Ok(NfElement::from_poly(&self.field, &s))
    }

    #[doc(hidden)]
    pub fn div(&self, other: &NfElement) -> Result<NfElement, NfError> {
        self.mul(&other.inverse()?)
    }

    /// Rational enclosure of the embedded value from a `θ` interval.
    pub fn enclose(&self, lo: &BigRational, hi: &BigRational) -> (BigRational, BigRational) {
        self.as_poly().eval_interval(lo, hi)
    }

    /// Exact sign under the chosen real embedding.
    pub fn sign(&self) -> Sign {
        nf_sign(self)
    }
}

impl fmt::Debug for NfElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, c) in self.coords.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}", format_rational(c))?;
        }
        write!(f, "]")
    }
}

/// Sign of a field element: syntactic zero test, then interval refinement of
/// `θ` until the enclosure of the value leaves zero.
pub fn nf_sign(a: &NfElement) -> Sign {
    if a.is_zero() {
        return Sign::Zero;
    }
    let field = a.field();
    let mut bits = 8;
    loop {
        let (lo, hi) = field.refine(bits);
        let (vl, vh) = a.enclose(&lo, &hi);
        if vl.is_positive() {
            return Sign::Pos;
        }
        if vh.is_negative() {
            return Sign::Neg;
        }
        if lo == hi {
            // θ is rational here and the enclosure is a point.
            return Sign::of(&vl);
        }
        bits *= 2;
    }
}
