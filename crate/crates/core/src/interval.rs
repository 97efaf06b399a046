//! Outward-rounded interval arithmetic on binary64 endpoints.
//!
//! Every operation returns an interval that contains the exact real result
//! for every pair of real operands drawn from the inputs. Rounding is done by
//! stepping to the neighbouring representable value, and only when an
//! error-free transformation shows that the nearest-rounded float is on the
//! wrong side of the exact value. No floating-point environment state is
//! touched, so intervals are safe to use from any number of threads.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IntervalError {
    #[error("interval endpoint is not finite ({0})")]
    NonFinite(f64),
    #[error("inverted interval: lower endpoint {lo} exceeds upper endpoint {hi}")]
    Inverted { lo: f64, hi: f64 },
    #[error("arithmetic overflow produced a non-finite endpoint")]
    Overflow,
    #[error("division by an interval containing zero: {0}")]
    DivisionByZero(Interval),
    #[error("malformed interval literal: {0}")]
    Parse(String),
}

/// Below this magnitude the residual of a product or quotient may not be
/// exactly representable, so both endpoints are widened unconditionally.
const TINY: f64 = 1.0e-288;

/// Round-to-nearest sum together with the exact rounding error.
#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn check(x: f64) -> Result<f64, IntervalError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(IntervalError::Overflow)
    }
}

pub(crate) fn add_down(a: f64, b: f64) -> Result<f64, IntervalError> {
    let (s, e) = two_sum(a, b);
    check(s)?;
    Ok(if e < 0.0 { s.next_down() } else { s })
}

pub(crate) fn add_up(a: f64, b: f64) -> Result<f64, IntervalError> {
    let (s, e) = two_sum(a, b);
    check(s)?;
    Ok(if e > 0.0 { s.next_up() } else { s })
}

pub(crate) fn mul_down(a: f64, b: f64) -> Result<f64, IntervalError> {
    if a == 0.0 || b == 0.0 {
        return Ok(0.0);
    }
    let p = check(a * b)?;
    if p.abs() < TINY {
        return Ok(p.next_down());
    }
    let e = a.mul_add(b, -p);
    Ok(if e < 0.0 { p.next_down() } else { p })
}

pub(crate) fn mul_up(a: f64, b: f64) -> Result<f64, IntervalError> {
    if a == 0.0 || b == 0.0 {
        return Ok(0.0);
    }
    let p = check(a * b)?;
    if p.abs() < TINY {
        return Ok(p.next_up());
    }
    let e = a.mul_add(b, -p);
    Ok(if e > 0.0 { p.next_up() } else { p })
}

/// Sign of `a/b - fl(a/b)`, or `None` when the residual cannot be trusted.
fn div_residual_sign(a: f64, b: f64, q: f64) -> Option<f64> {
    if q.abs() < TINY || a.abs() < TINY {
        return None;
    }
    let r = (-q).mul_add(b, a);
    Some(if r == 0.0 { 0.0 } else { r.signum() * b.signum() })
}

pub(crate) fn div_down(a: f64, b: f64) -> Result<f64, IntervalError> {
    if a == 0.0 {
        return Ok(0.0);
    }
    let q = check(a / b)?;
    Ok(match div_residual_sign(a, b, q) {
        Some(s) if s >= 0.0 => q,
        _ => q.next_down(),
    })
}

pub(crate) fn div_up(a: f64, b: f64) -> Result<f64, IntervalError> {
    if a == 0.0 {
        return Ok(0.0);
    }
    let q = check(a / b)?;
    Ok(match div_residual_sign(a, b, q) {
        Some(s) if s <= 0.0 => q,
        _ => q.next_up(),
    })
}

/// `x^k` rounded down, for `x >= 0`.
fn pow_down(x: f64, k: u32) -> Result<f64, IntervalError> {
    let mut acc = 1.0_f64;
    let mut base = x;
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_down(acc, base)?.max(0.0);
        }
        e >>= 1;
        if e > 0 {
            base = mul_down(base, base)?.max(0.0);
        }
    }
    Ok(acc)
}

/// `x^k` rounded up, for `x >= 0`.
fn pow_up(x: f64, k: u32) -> Result<f64, IntervalError> {
    let mut acc = 1.0_f64;
    let mut base = x;
    let mut e = k;
    while e > 0 {
        if e & 1 == 1 {
            acc = mul_up(acc, base)?;
        }
        e >>= 1;
        if e > 0 {
            base = mul_up(base, base)?;
        }
    }
    Ok(acc)
}

/// A closed interval `[lo, hi]` with finite binary64 endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub const ZERO: Interval = Interval { lo: 0.0, hi: 0.0 };
    pub const ONE: Interval = Interval { lo: 1.0, hi: 1.0 };
    pub const UNIT: Interval = Interval { lo: 0.0, hi: 1.0 };

    pub fn new(lo: f64, hi: f64) -> Result<Self, IntervalError> {
        if !lo.is_finite() {
            return Err(IntervalError::NonFinite(lo));
        }
        if !hi.is_finite() {
            return Err(IntervalError::NonFinite(hi));
        }
        if lo > hi {
            return Err(IntervalError::Inverted { lo, hi });
        }
        Ok(Self { lo, hi })
    }

    /// Degenerate interval `[x, x]`.
    ///
    /// # Panics
    /// If `x` is not finite.
    pub fn point(x: f64) -> Self {
        Self::new(x, x).expect("point interval needs a finite value")
    }

    #[inline]
    pub fn lo(&self) -> f64 {
        self.lo
    }

    #[inline]
    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Width rounded up, so it never under-reports the true width.
    pub fn width(&self) -> f64 {
        add_up(self.hi, -self.lo).unwrap_or(f64::MAX)
    }

    /// Largest absolute value of any member.
    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.contains(0.0)
    }

    pub fn is_subset(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }

    pub fn checked_add(self, rhs: Interval) -> Result<Interval, IntervalError> {
        Ok(Interval {
            lo: add_down(self.lo, rhs.lo)?,
            hi: add_up(self.hi, rhs.hi)?,
        })
    }

    pub fn checked_sub(self, rhs: Interval) -> Result<Interval, IntervalError> {
        Ok(Interval {
            lo: add_down(self.lo, -rhs.hi)?,
            hi: add_up(self.hi, -rhs.lo)?,
        })
    }

    pub fn checked_mul(self, rhs: Interval) -> Result<Interval, IntervalError> {
        let (a, b, c, d) = (self.lo, self.hi, rhs.lo, rhs.hi);
        let lo = mul_down(a, c)?
            .min(mul_down(a, d)?)
            .min(mul_down(b, c)?)
            .min(mul_down(b, d)?);
        let hi = mul_up(a, c)?
            .max(mul_up(a, d)?)
            .max(mul_up(b, c)?)
            .max(mul_up(b, d)?);
        Ok(Interval { lo, hi })
    }

    pub fn checked_div(self, rhs: Interval) -> Result<Interval, IntervalError> {
        if rhs.contains_zero() {
            return Err(IntervalError::DivisionByZero(rhs));
        }
        let (a, b, c, d) = (self.lo, self.hi, rhs.lo, rhs.hi);
        let lo = div_down(a, c)?
            .min(div_down(a, d)?)
            .min(div_down(b, c)?)
            .min(div_down(b, d)?);
        let hi = div_up(a, c)?
            .max(div_up(a, d)?)
            .max(div_up(b, c)?)
            .max(div_up(b, d)?);
        Ok(Interval { lo, hi })
    }

    /// Integer power with sign analysis; `I^0 = [1, 1]`.
    pub fn checked_powi(self, k: u32) -> Result<Interval, IntervalError> {
        if k == 0 {
            return Ok(Interval::ONE);
        }
        let even = k.is_multiple_of(2);
        let (lo, hi) = if self.lo >= 0.0 {
            (pow_down(self.lo, k)?, pow_up(self.hi, k)?)
        } else if self.hi <= 0.0 {
            let (small, large) = (-self.hi, -self.lo);
            if even {
                (pow_down(small, k)?, pow_up(large, k)?)
            } else {
                (-pow_up(large, k)?, -pow_down(small, k)?)
            }
        } else if even {
            (0.0, pow_up(-self.lo, k)?.max(pow_up(self.hi, k)?))
        } else {
            (-pow_up(-self.lo, k)?, pow_up(self.hi, k)?)
        };
        Ok(Interval { lo, hi })
    }

    /// Infallible power for intervals known to be bounded by 1 in magnitude.
    pub fn powi(self, k: u32) -> Interval {
        self.checked_powi(k).expect("interval power overflowed")
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:?}, {:?}]", self.lo, self.hi)
    }
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        self.checked_add(rhs).expect("interval addition overflowed")
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        self.checked_sub(rhs).expect("interval subtraction overflowed")
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        self.checked_mul(rhs).expect("interval multiplication overflowed")
    }
}

impl Div for Interval {
    type Output = Interval;
    fn div(self, rhs: Interval) -> Interval {
        self.checked_div(rhs).expect("interval division failed")
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval {
            lo: -self.hi,
            hi: -self.lo,
        }
    }
}

impl Add<f64> for Interval {
    type Output = Interval;
    fn add(self, rhs: f64) -> Interval {
        self + Interval::point(rhs)
    }
}

impl Sub<Interval> for f64 {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval::point(self) - rhs
    }
}

impl Mul<Interval> for f64 {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        Interval::point(self) * rhs
    }
}

/// Shortest decimal string that parses back to exactly `x`.
pub fn exact_decimal(x: f64) -> String {
    format!("{x:?}")
}

pub fn parse_decimal(s: &str) -> Result<f64, IntervalError> {
    let x: f64 = s
        .trim()
        .parse()
        .map_err(|_| IntervalError::Parse(s.to_string()))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(IntervalError::NonFinite(x))
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        [exact_decimal(self.lo), exact_decimal(self.hi)].serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let [lo, hi] = <[String; 2]>::deserialize(deserializer)?;
        let lo = parse_decimal(&lo).map_err(D::Error::custom)?;
        let hi = parse_decimal(&hi).map_err(D::Error::custom)?;
        Interval::new(lo, hi).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    fn ulp(x: f64) -> f64 {
        x.next_up() - x
    }

    #[test]
    fn integer_sums_are_exact() {
        assert_eq!(iv(1.0, 2.0) + iv(3.0, 4.0), iv(4.0, 6.0));
        assert_eq!(iv(1.0, 2.0) - iv(3.0, 4.0), iv(-3.0, -1.0));
    }

    #[test]
    fn zero_plus_point_contains_point() {
        for x in [0.1, -3.7e-200, 1.0e300, 5.0] {
            assert!((Interval::ZERO + Interval::point(x)).contains(x));
        }
    }

    #[test]
    fn tenth_plus_fifth_encloses_three_tenths() {
        let s = Interval::point(0.1) + Interval::point(0.2);
        // 0.1 + 0.2 rounds to 0.30000000000000004 with a negative error, so
        // the exact sum of the two floats lies just below it.
        assert!(s.lo() < 0.30000000000000004 && s.hi() >= 0.30000000000000004);
        assert!(s.contains(0.3));
        assert!(s.width() <= 4.0 * ulp(0.3));
    }

    #[test]
    fn product_sign_cases() {
        assert_eq!(iv(-1.0, 2.0) * iv(3.0, 4.0), iv(-4.0, 8.0));
        assert_eq!(iv(-2.0, -1.0) * iv(-4.0, 3.0), iv(-6.0, 8.0));
        assert_eq!(iv(-2.0, -1.0) * iv(-4.0, -3.0), iv(3.0, 8.0));
    }

    #[test]
    fn one_third() {
        let q = Interval::ONE / Interval::point(3.0);
        assert!(q.lo() < q.hi());
        assert!(q.lo() * 3.0 <= 1.0);
        assert!(q.width() <= 2.0 * ulp(1.0 / 3.0));
    }

    #[test]
    fn division_by_zero_interval_is_an_error() {
        let err = Interval::ONE.checked_div(iv(-1.0, 1.0)).unwrap_err();
        assert!(matches!(err, IntervalError::DivisionByZero(_)));
        assert!(Interval::ONE.checked_div(Interval::ZERO).is_err());
    }

    #[test]
    fn overflow_is_an_error() {
        let big = Interval::point(f64::MAX);
        assert_eq!(big.checked_add(big), Err(IntervalError::Overflow));
        assert_eq!(big.checked_mul(big), Err(IntervalError::Overflow));
    }

    #[test]
    fn constructor_rejects_bad_endpoints() {
        assert!(Interval::new(f64::NAN, 1.0).is_err());
        assert!(Interval::new(0.0, f64::INFINITY).is_err());
        assert!(matches!(
            Interval::new(2.0, 1.0),
            Err(IntervalError::Inverted { .. })
        ));
    }

    #[test]
    fn powers() {
        assert_eq!(Interval::UNIT.powi(3), Interval::UNIT);
        assert_eq!(Interval::point(0.5).powi(2), Interval::point(0.25));
        let c = iv(0.3, 0.4).powi(3);
        assert!(c.lo() <= 0.027 && c.hi() >= 0.064);
        assert!(c.width() < 0.037 + 1e-15);
        assert_eq!(iv(-2.0, 1.0).powi(2), iv(0.0, 4.0));
        assert_eq!(iv(-2.0, 1.0).powi(3), iv(-8.0, 1.0));
        assert_eq!(iv(-3.0, -2.0).powi(2), iv(4.0, 9.0));
        assert_eq!(iv(-3.0, -2.0).powi(3), iv(-27.0, -8.0));
        assert_eq!(iv(-3.0, 7.0).powi(0), Interval::ONE);
    }

    #[test]
    fn set_operations() {
        assert_eq!(iv(0.0, 1.0).hull(&iv(2.0, 3.0)), iv(0.0, 3.0));
        assert!(iv(0.2, 0.3).is_subset(&iv(0.1, 0.4)));
        assert!(!iv(0.1, 0.4).is_subset(&iv(0.2, 0.3)));
        assert!(!iv(0.0, 0.5).contains(0.75));
        assert_eq!(iv(1.0, 3.5).width(), 2.5);
    }

    #[test]
    fn dyadic_singletons_stay_degenerate() {
        let a = Interval::point(0.375);
        let b = Interval::point(-1.25);
        for r in [a + b, a - b, a * b, a / Interval::point(0.5), b.powi(3)] {
            assert_eq!(r.lo(), r.hi(), "{r}");
        }
    }

    #[test]
    fn serde_round_trip_is_bit_exact() {
        let x = iv(0.1f64.next_down(), 1.0 / 3.0);
        let json = serde_json::to_string(&x).unwrap();
        let back: Interval = serde_json::from_str(&json).unwrap();
        assert_eq!(back.lo().to_bits(), x.lo().to_bits());
        assert_eq!(back.hi().to_bits(), x.hi().to_bits());
        assert!(serde_json::from_str::<Interval>(r#"["1","0"]"#).is_err());
        assert!(serde_json::from_str::<Interval>(r#"["NaN","0"]"#).is_err());
        assert!(serde_json::from_str::<Interval>(r#"["inf","inf"]"#).is_err());
    }

    #[test]
    fn tiny_products_are_widened() {
        let t = Interval::point(1e-200);
        let p = t * t;
        assert!(p.lo() <= 0.0 && p.hi() > 0.0);
    }
}
