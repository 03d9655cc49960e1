//! Numeric modes.
//!
//! Every evaluation is generic over [`Scalar`], implemented for exact
//! rationals ([`BigRational`]) and for `f64`. Problem data is always held
//! exactly; a floating evaluation converts the exact inputs once.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseNumberError {
    #[error("empty number")]
    Empty,
    #[error("malformed number `{0}`")]
    Malformed(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Scalar field used by evaluation, solving and sweeping.
pub trait Scalar:
    Clone
    + PartialOrd
    + fmt::Debug
    + fmt::Display
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
    /// True when arithmetic is exact (ties are equalities).
    const EXACT: bool;

    fn from_rational(r: &BigRational) -> Self;

    fn to_f64(&self) -> f64;

    /// Whether two values count as equal. Exact modes ignore `tol`.
    fn ties(&self, other: &Self, tol: f64) -> bool;

    fn from_ratio(num: i64, den: i64) -> Self {
        Self::from_rational(&BigRational::new(num.into(), den.into()))
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn ties(&self, other: &Self, _tol: f64) -> bool {
        self == other
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn from_rational(r: &BigRational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn ties(&self, other: &Self, tol: f64) -> bool {
        let scale = 1f64.max(self.abs()).max(other.abs());
        (self - other).abs() <= tol * scale
    }
}

/// Parses decimal (`0.2`, `-1.5`, `3`) or fraction (`17/29`) syntax exactly.
///
/// Decimal strings are converted digit by digit, never through a binary float.
pub fn parse_exact(text: &str) -> Result<BigRational, ParseNumberError> {
    let s = text.trim();
    if s.is_empty() {
        return Err(ParseNumberError::Empty);
    }
    if let Some((num, den)) = s.split_once('/') {
        let n = parse_decimal(num.trim()).ok_or_else(|| ParseNumberError::Malformed(s.into()))?;
        let d = parse_decimal(den.trim()).ok_or_else(|| ParseNumberError::Malformed(s.into()))?;
        if d.is_zero() {
            return Err(ParseNumberError::ZeroDenominator(s.into()));
        }
        return Ok(n / d);
    }
    parse_decimal(s).ok_or_else(|| ParseNumberError::Malformed(s.into()))
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (negative, body) = match s.as_bytes().first()? {
        b'-' => (true, &s[1..]),
        b'+' => (false, &s[1..]),
        _ => (false, s),
    };
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.bytes().all(|b| b.is_ascii_digit()) || !frac_part.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    let denom = num_traits::pow(BigInt::from(10u32), frac_part.len());
    let value = BigRational::new(numer, denom);
    Some(if negative { -value } else { value })
}

/// Canonical exact text: `5`, `-3`, `17/29`.
pub fn format_exact(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Rational from a small fraction; panics on a zero denominator.
pub fn ratio(num: i64, den: i64) -> BigRational {
    BigRational::new(num.into(), den.into())
}

pub fn rational_from_int(n: i64) -> BigRational {
    BigRational::from_integer(n.into())
}

/// Sign of an exact value as -1, 0 or 1.
pub fn signum(r: &BigRational) -> i8 {
    if r.is_zero() {
        0
    } else if r.is_positive() {
        1
    } else {
        -1
    }
}

pub fn is_unit_interval(r: &BigRational) -> bool {
    !r.is_negative() && *r <= BigRational::one()
}

/// Inclusive arithmetic grid `start:stop:step`, parsed exactly.
pub fn parse_grid(spec: &str) -> Result<Vec<BigRational>, ParseNumberError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(ParseNumberError::Malformed(spec.into()));
    }
    let start = parse_exact(parts[0])?;
    let stop = parse_exact(parts[1])?;
    let step = parse_exact(parts[2])?;
    if !step.is_positive() || stop < start {
        return Err(ParseNumberError::Malformed(spec.into()));
    }
    let count = ((&stop - &start) / &step).floor().to_integer();
    let count = count
        .to_usize()
        .ok_or_else(|| ParseNumberError::Malformed(spec.into()))?;
    Ok((0..=count)
        .map(|k| &start + &step * rational_from_int(k as i64))
        .collect())
}
