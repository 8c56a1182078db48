//! Dual-mode arithmetic.
//!
//! Every numeric quantity in the workbench (probability, reward, return)
//! lives in exactly one of two modes: exact rationals, used whenever strict
//! inequalities must be decided reliably, or plain doubles for speed on
//! larger instances. The mode is a type parameter, so the two can never be
//! mixed inside one computation.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Float-mode comparison tolerance. Two doubles within this distance compare
/// equal; a strict improvement must clear it. This is the single tolerance
/// used by every float-mode comparison in the crate.
pub const FLOAT_EQ_TOL: f64 = 1e-9;

/// Float-mode tolerance for transition-row sums during validation.
pub const FLOAT_ROW_SUM_TOL: f64 = 1e-12;

/// A number in one arithmetic mode.
///
/// `scalar_cmp` is the mode-aware ordering: exact for rationals, within
/// [`FLOAT_EQ_TOL`] for doubles. All order decisions (improvement strictness,
/// policy comparison, pivot choice) go through it.
pub trait Scalar:
    Clone
    + PartialEq
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// True in the exact rational mode.
    const EXACT: bool;
    /// Mode name as printed in traces and reports.
    const MODE_NAME: &'static str;

    fn zero() -> Self;
    fn one() -> Self;
    /// The value `num/den`. Panics if `den == 0`.
    fn from_fraction(num: i64, den: i64) -> Self;
    fn to_f64(&self) -> f64;
    /// Mode-aware ordering; see trait docs.
    fn scalar_cmp(&self, other: &Self) -> Ordering;
    fn abs(&self) -> Self;
    /// Equality within `tol` in float mode; exact equality in rational mode.
    fn approx_eq(&self, other: &Self, tol: f64) -> bool;
    /// True only for the exact zero bit pattern (no tolerance).
    fn is_exact_zero(&self) -> bool;

    fn from_int(value: i64) -> Self {
        Self::from_fraction(value, 1)
    }
}

/// Exact rational scalar, always kept in reduced canonical form with a
/// positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rational(BigRational);

impl Rational {
    /// Reduced rational `num/den`. Panics if `den == 0`.
    pub fn new(num: i64, den: i64) -> Self {
        Rational(BigRational::new(BigInt::from(num), BigInt::from(den)))
    }

    pub fn from_big(num: BigInt, den: BigInt) -> Self {
        Rational(BigRational::new(num, den))
    }

    pub fn from_int(value: i64) -> Self {
        Rational(BigRational::from_integer(BigInt::from(value)))
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    /// Parses `"num/den"` or a bare integer, with arbitrary-precision parts.
    pub fn parse(text: &str) -> Result<Self, String> {
        let text = text.trim();
        let (num_text, den_text) = match text.split_once('/') {
            Some((n, d)) => (n, d),
            None => (text, "1"),
        };
        let num: BigInt = num_text
            .parse()
            .map_err(|_| format!("bad numerator `{num_text}`"))?;
        let den: BigInt = den_text
            .parse()
            .map_err(|_| format!("bad denominator `{den_text}`"))?;
        if den.is_zero() {
            return Err("zero denominator".to_string());
        }
        Ok(Rational(BigRational::new(num, den)))
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // BigRational prints `num` when the denominator is 1, `num/den`
        // otherwise, which is exactly the instance file syntax.
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl Add for Rational {
    type Output = Rational;
    fn add(self, rhs: Rational) -> Rational {
        Rational(self.0 + rhs.0)
    }
}

impl Sub for Rational {
    type Output = Rational;
    fn sub(self, rhs: Rational) -> Rational {
        Rational(self.0 - rhs.0)
    }
}

impl Mul for Rational {
    type Output = Rational;
    fn mul(self, rhs: Rational) -> Rational {
        Rational(self.0 * rhs.0)
    }
}

impl Div for Rational {
    type Output = Rational;
    fn div(self, rhs: Rational) -> Rational {
        Rational(self.0 / rhs.0)
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;
    const MODE_NAME: &'static str = "exact";

    fn zero() -> Self {
        Rational(BigRational::zero())
    }

    fn one() -> Self {
        Rational(BigRational::one())
    }

    fn from_fraction(num: i64, den: i64) -> Self {
        Rational::new(num, den)
    }

    fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    fn scalar_cmp(&self, other: &Self) -> Ordering {
        self.0.cmp(&other.0)
    }

    fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    fn approx_eq(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }

    fn is_exact_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;
    const MODE_NAME: &'static str = "float";

    fn zero() -> Self {
        0.0
    }

    fn one() -> Self {
        1.0
    }

    fn from_fraction(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn scalar_cmp(&self, other: &Self) -> Ordering {
        if (self - other).abs() <= FLOAT_EQ_TOL {
            Ordering::Equal
        } else {
            self.partial_cmp(other)
                .expect("NaN reached a float-mode comparison")
        }
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        (self - other).abs() <= tol
    }

    fn is_exact_zero(&self) -> bool {
        *self == 0.0
    }
}
