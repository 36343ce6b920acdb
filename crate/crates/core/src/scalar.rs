//! Coefficient backends: `f64` for everything numeric and `BigRational`
//! for exact verification. Conversions between the two are always explicit.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational scalar.
pub type Rational = BigRational;

pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// `true` for the exact rational backend.
    const EXACT: bool;

    /// Exact for the rational backend (every finite double is a dyadic rational).
    fn from_f64(v: f64) -> Self;

    fn to_f64(&self) -> f64;

    fn from_i64(v: i64) -> Self;

    /// Square root when it exists in this scalar field.
    fn sqrt_checked(&self) -> Option<Self>;

    /// Whether a coefficient should be pruned relative to `scale`
    /// (the largest coefficient magnitude of the owning polynomial).
    fn negligible(&self, scale: f64) -> bool;

    /// Shortest round-trip decimal for floats, `p/q` (or `p`) for rationals.
    fn to_coeff_string(&self) -> String;

    fn from_rational(r: &Rational) -> Self;

    fn abs_f64(&self) -> f64 {
        self.to_f64().abs()
    }

    fn is_negative(&self) -> bool {
        self.to_f64() < 0.0
    }
}

/// Relative pruning threshold for float polynomials.
pub const PRUNE_REL: f64 = 1e-14;

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_f64(v: f64) -> Self {
        v
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn sqrt_checked(&self) -> Option<Self> {
        if *self >= 0.0 {
            Some(self.sqrt())
        } else {
            None
        }
    }

    fn negligible(&self, scale: f64) -> bool {
        self.abs() <= PRUNE_REL * scale
    }

    fn to_coeff_string(&self) -> String {
        format!("{self}")
    }

    fn from_rational(r: &Rational) -> Self {
        Scalar::to_f64(r)
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_f64(v: f64) -> Self {
        BigRational::from_float(v).expect("non-finite value cannot be made exact")
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn sqrt_checked(&self) -> Option<Self> {
        if Signed::is_negative(self) {
            return None;
        }
        let num = exact_isqrt(self.numer())?;
        let den = exact_isqrt(self.denom())?;
        Some(BigRational::new(num, den))
    }

    fn negligible(&self, _scale: f64) -> bool {
        self.is_zero()
    }

    fn to_coeff_string(&self) -> String {
        format!("{self}")
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }
}

fn exact_isqrt(v: &BigInt) -> Option<BigInt> {
    let r = v.sqrt();
    if &(&r * &r) == v {
        Some(r)
    } else {
        None
    }
}

/// Parses `"p/q"`, `"p"` or a decimal literal into an exact rational.
pub fn parse_rational(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    if let Ok(p) = s.parse::<BigInt>() {
        return Some(BigRational::from_integer(p));
    }
    // decimal literal: interpret digits exactly, not via a double
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    let digits = format!("{int_part}{frac_part}");
    let mut value = BigRational::from_integer(digits.parse::<BigInt>().ok()?);
    let shift = exp - frac_part.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    for _ in 0..shift.unsigned_abs() {
        if shift > 0 {
            value = value * ten.clone();
        } else {
            value = value / ten.clone();
        }
    }
    Some(value)
}
