use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational coefficients.
pub type Rational = BigRational;

/// Scalar ring used for polynomial coefficients.
///
/// Implemented for exact rationals (certificates, fiber computations) and for
/// `f64` (numeric coefficient curves in time).
pub trait Coeff:
    Clone
    + PartialEq
    + Debug
    + Send
    + Sync
    + Zero
    + One
    + Neg<Output = Self>
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + 'static
{
    fn from_i64(v: i64) -> Self;

    /// `mantissa * 10^exp10` built from the digits of a numeric literal.
    fn from_decimal(literal: &str) -> Option<Self>;

    /// The constant pi, when representable.
    fn pi() -> Option<Self>;

    fn to_f64(&self) -> f64;

    fn is_negative(&self) -> bool;

    /// Text form used by the polynomial printer. Must re-parse to the same value.
    fn render(&self) -> String;
}

impl Coeff for Rational {
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_decimal(literal: &str) -> Option<Self> {
        let (mant, exp) = match literal.find(['e', 'E']) {
            Some(pos) => (&literal[..pos], literal[pos + 1..].parse::<i32>().ok()?),
            None => (literal, 0),
        };
        let (int_part, frac_part) = match mant.find('.') {
            Some(pos) => (&mant[..pos], &mant[pos + 1..]),
            None => (mant, ""),
        };
        let digits = format!("{int_part}{frac_part}");
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return None;
        }
        let numer: BigInt = digits.parse().ok()?;
        let shift = exp - frac_part.len() as i32;
        let ten = BigInt::from(10);
        Some(if shift >= 0 {
            BigRational::from_integer(numer * num_traits::pow(ten, shift as usize))
        } else {
            BigRational::new(numer, num_traits::pow(ten, (-shift) as usize))
        })
    }

    fn pi() -> Option<Self> {
        None
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_negative(&self) -> bool {
        Signed::is_negative(self)
    }

    fn render(&self) -> String {
        if self.is_integer() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }
}

impl Coeff for f64 {
    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_decimal(literal: &str) -> Option<Self> {
        literal.parse().ok()
    }

    fn pi() -> Option<Self> {
        Some(std::f64::consts::PI)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn is_negative(&self) -> bool {
        *self < 0.0
    }

    fn render(&self) -> String {
        // `{:?}` is the shortest representation that round-trips.
        let s = format!("{self:?}");
        s.strip_suffix(".0").map(str::to_owned).unwrap_or(s)
    }
}

pub fn rat(v: i64) -> Rational {
    Rational::from_i64(v)
}

pub fn ratio(n: i64, d: i64) -> Rational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Best rational approximation of `x` with denominator at most `max_den`,
/// accepted only if it lies within `tol` of `x`.
pub fn snap_rational(x: f64, max_den: u64, tol: f64) -> Option<Rational> {
    if !x.is_finite() {
        return None;
    }
    let sign = if x < 0.0 { -1i64 } else { 1 };
    let ax = x.abs();
    // Continued-fraction convergents.
    let (mut p0, mut q0, mut p1, mut q1) = (0u64, 1u64, 1u64, 0u64);
    let mut frac = ax;
    let mut best: Option<(u64, u64)> = None;
    for _ in 0..64 {
        let a = frac.floor();
        if a > 1e15 {
            break;
        }
        let a = a as u64;
        let p2 = a.checked_mul(p1).and_then(|v| v.checked_add(p0));
        let q2 = a.checked_mul(q1).and_then(|v| v.checked_add(q0));
        let (Some(p2), Some(q2)) = (p2, q2) else { break };
        if q2 > max_den {
            break;
        }
        best = Some((p2, q2));
        if ((p2 as f64) / (q2 as f64) - ax).abs() <= tol * 1e-3 {
            break;
        }
        let rem = frac - a as f64;
        if rem.abs() < 1e-300 {
            break;
        }
        frac = 1.0 / rem;
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    let (p, q) = best?;
    if ((p as f64) / (q as f64) - ax).abs() <= tol {
        Some(ratio(sign * p as i64, q as i64))
    } else {
        None
    }
}

/// Snap every coordinate of a floating point to a nearby rational.
pub fn snap_point(x: &[f64], max_den: u64, tol: f64) -> Option<Vec<Rational>> {
    x.iter().map(|&v| snap_rational(v, max_den, tol)).collect()
}

pub fn to_f64_vec(x: &[Rational]) -> Vec<f64> {
    x.iter().map(Coeff::to_f64).collect()
}
