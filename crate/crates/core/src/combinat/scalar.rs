//! Exact-or-approximate numeric values.
//!
//! Most quantities in this crate are rational and stay exact. A few inputs
//! (real dispersion exponents, logarithms, `e^-λ`) are irrational, so values
//! derived from them are carried as `f64` and flagged approximate.

use std::cmp::Ordering;
use std::fmt;
use std::iter::{Product, Sum};
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{Serialize, Serializer};

use super::rational::{ParseRationalError, Rational};

#[derive(Clone, Debug, PartialEq)]
pub enum Scalar {
    Exact(Rational),
    Approx(f64),
}

impl Scalar {
    pub fn zero() -> Self {
        Scalar::Exact(Rational::zero())
    }

    pub fn one() -> Self {
        Scalar::Exact(Rational::one())
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Scalar::Exact(Rational::new(num, den))
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Scalar::Exact(_))
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            Scalar::Exact(r) => Some(r),
            Scalar::Approx(_) => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Scalar::Exact(r) => r.to_f64(),
            Scalar::Approx(x) => *x,
        }
    }

    /// Forces the approximate representation.
    pub fn to_approx(&self) -> Scalar {
        Scalar::Approx(self.to_f64())
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Scalar::Exact(r) => r.is_zero(),
            Scalar::Approx(x) => *x == 0.0,
        }
    }

    pub fn abs(&self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(r.abs()),
            Scalar::Approx(x) => Scalar::Approx(x.abs()),
        }
    }

    pub fn pow(&self, exp: i32) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(r.pow(exp)),
            Scalar::Approx(x) => Scalar::Approx(x.powi(exp)),
        }
    }

    pub fn recip(&self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(r.recip()),
            Scalar::Approx(x) => Scalar::Approx(1.0 / x),
        }
    }

    /// `1 - self`, the complement of a probability.
    pub fn complement(&self) -> Scalar {
        Scalar::one() - self
    }

    /// Exact comparison when both sides are exact, float comparison otherwise.
    pub fn cmp_value(&self, other: &Scalar) -> Option<Ordering> {
        match (self, other) {
            (Scalar::Exact(a), Scalar::Exact(b)) => Some(a.cmp(b)),
            _ => self.to_f64().partial_cmp(&other.to_f64()),
        }
    }

    /// True when the value lies in the closed unit interval.
    pub fn is_probability(&self) -> bool {
        match self {
            Scalar::Exact(r) => !r.is_negative() && *r <= 1,
            Scalar::Approx(x) => (0.0..=1.0).contains(x),
        }
    }

    /// Renders with `digits` significant digits when `float` is set, and as
    /// `num/den` for exact values otherwise.
    pub fn render(&self, float: bool, digits: usize) -> String {
        match self {
            Scalar::Exact(r) if !float => r.to_string(),
            _ => format_significant(self.to_f64(), digits),
        }
    }
}

/// Formats `v` as a decimal with `digits` significant digits, trailing
/// zeros trimmed. Falls back to exponent notation outside `[1e-5, 1e17)`.
pub fn format_significant(v: f64, digits: usize) -> String {
    let digits = digits.clamp(1, 17);
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if !(-5..17).contains(&exp) {
        let s = format!("{:.*e}", digits - 1, v);
        return match s.split_once('e') {
            Some((mantissa, e)) => format!("{}e{}", trim_zeros(mantissa), e),
            None => s,
        };
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, v)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

impl fmt::Display for Scalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scalar::Exact(r) => write!(f, "{r}"),
            Scalar::Approx(x) => f.write_str(&format_significant(*x, 17)),
        }
    }
}

impl Serialize for Scalar {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Parses `"a/b"` and integers as exact values; anything containing a
/// decimal point or exponent is parsed as an approximate float.
impl FromStr for Scalar {
    type Err = ParseRationalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.contains(['.', 'e', 'E']) || t.eq_ignore_ascii_case("nan") {
            t.parse::<f64>()
                .map(Scalar::Approx)
                .map_err(|_| ParseRationalError::BadInteger(t.to_string()))
        } else {
            t.parse::<Rational>().map(Scalar::Exact)
        }
    }
}

impl From<Rational> for Scalar {
    fn from(r: Rational) -> Self {
        Scalar::Exact(r)
    }
}

impl From<i64> for Scalar {
    fn from(n: i64) -> Self {
        Scalar::Exact(Rational::from(n))
    }
}

impl From<num_bigint::BigInt> for Scalar {
    fn from(n: num_bigint::BigInt) -> Self {
        Scalar::Exact(Rational::from(n))
    }
}

impl From<f64> for Scalar {
    fn from(x: f64) -> Self {
        Scalar::Approx(x)
    }
}

impl Neg for Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        match self {
            Scalar::Exact(r) => Scalar::Exact(-r),
            Scalar::Approx(x) => Scalar::Approx(-x),
        }
    }
}

impl Neg for &Scalar {
    type Output = Scalar;
    fn neg(self) -> Scalar {
        self.clone().neg()
    }
}

macro_rules! scalar_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a.$method(b)),
                    _ => Scalar::Approx(self.to_f64().$method(rhs.to_f64())),
                }
            }
        }
        impl $trait<Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                match (self, rhs) {
                    (Scalar::Exact(a), Scalar::Exact(b)) => Scalar::Exact(a.$method(b)),
                    (a, b) => Scalar::Approx(a.to_f64().$method(b.to_f64())),
                }
            }
        }
        impl $trait<&Scalar> for Scalar {
            type Output = Scalar;
            fn $method(self, rhs: &Scalar) -> Scalar {
                (&self).$method(rhs)
            }
        }
        impl $trait<Scalar> for &Scalar {
            type Output = Scalar;
            fn $method(self, rhs: Scalar) -> Scalar {
                self.$method(&rhs)
            }
        }
    };
}

scalar_binop!(Add, add);
scalar_binop!(Sub, sub);
scalar_binop!(Mul, mul);
scalar_binop!(Div, div);

impl Sum for Scalar {
    fn sum<I: Iterator<Item = Scalar>>(iter: I) -> Self {
        iter.fold(Scalar::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Scalar> for Scalar {
    fn sum<I: Iterator<Item = &'a Scalar>>(iter: I) -> Self {
        iter.fold(Scalar::zero(), |acc, x| acc + x)
    }
}

impl Product for Scalar {
    fn product<I: Iterator<Item = Scalar>>(iter: I) -> Self {
        iter.fold(Scalar::one(), |acc, x| acc * x)
    }
}

/// Neumaier-compensated sum of floats.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Sums values exactly when all are exact, and with compensated float
/// summation otherwise.
pub fn sum_mixed(values: impl IntoIterator<Item = Scalar>) -> Scalar {
    let values: Vec<Scalar> = values.into_iter().collect();
    if values.iter().all(Scalar::is_exact) {
        values.into_iter().sum()
    } else {
        Scalar::Approx(compensated_sum(values.iter().map(Scalar::to_f64)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mixing_yields_approx() {
        let a = Scalar::ratio(1, 2);
        let b = Scalar::Approx(0.25);
        let c = &a + &b;
        assert!(!c.is_exact());
        assert_eq!(c.to_f64(), 0.75);
        assert!((a.clone() * a).is_exact());
    }

    #[test]
    fn parse_forms() {
        assert_eq!("1/2".parse::<Scalar>().unwrap(), Scalar::ratio(1, 2));
        assert_eq!("0.4".parse::<Scalar>().unwrap(), Scalar::Approx(0.4));
        assert_eq!("3".parse::<Scalar>().unwrap(), Scalar::from(3));
        assert!("x".parse::<Scalar>().is_err());
    }

    #[test]
    fn seventeen_digit_rendering() {
        assert_eq!(Scalar::Approx(0.1).to_string(), "0.10000000000000001");
        assert_eq!(Scalar::Approx(3.0).to_string(), "3");
        assert_eq!(format_significant(3.440236967123206, 10), "3.440236967");
        assert_eq!(format_significant(1.5e-9, 3), "1.5e-9");
        assert_eq!(format_significant(-2.5, 12), "-2.5");
    }

    #[test]
    fn neumaier_beats_naive() {
        let xs = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(compensated_sum(xs), 2.0);
    }
}
