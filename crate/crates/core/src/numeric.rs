//! Scalar types for the combination engine.
//!
//! Floating-point sums are order independent: addends are collected, sorted
//! and then added with Neumaier compensation. The rational type is exact.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Arithmetic used for one combination.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Arithmetic {
    /// Exact rationals for short-decimal inputs of moderate size, floats
    /// otherwise.
    #[default]
    Auto,
    Float,
    Exact,
}

/// Decimal places accepted as "short" by [`Arithmetic::Auto`].
pub const SHORT_DECIMALS: u32 = 6;
/// Largest term count handled exactly by [`Arithmetic::Auto`].
pub const AUTO_EXACT_TERMS: usize = 4096;

pub trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
{
    type Sum: Default + Clone + Debug + Send;

    fn from_mass(mass: f64) -> Self;
    fn to_f64(&self) -> f64;
    /// The exact value, for scalars that have one.
    fn to_rational(&self) -> Option<BigRational>;
    fn add_to(sum: &mut Self::Sum, value: Self);
    fn merge(sum: &mut Self::Sum, other: Self::Sum);
    fn total(sum: &Self::Sum) -> Self;

    fn sum<I: IntoIterator<Item = Self>>(values: I) -> Self {
        let mut acc = Self::Sum::default();
        for v in values {
            Self::add_to(&mut acc, v);
        }
        Self::total(&acc)
    }

    /// Product of the factors taken in ascending order.
    fn product<I: IntoIterator<Item = Self>>(values: I) -> Self {
        let mut factors: Vec<Self> = values.into_iter().collect();
        factors.sort_by(|a, b| a.partial_cmp(b).expect("masses are comparable"));
        factors.into_iter().fold(Self::one(), |acc, f| acc * f)
    }
}

impl Scalar for f64 {
    type Sum = Vec<f64>;

    fn from_mass(mass: f64) -> Self {
        mass
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_rational(&self) -> Option<BigRational> {
        None
    }

    fn add_to(sum: &mut Vec<f64>, value: f64) {
        sum.push(value);
    }

    fn merge(sum: &mut Vec<f64>, other: Vec<f64>) {
        sum.extend(other);
    }

    fn total(sum: &Vec<f64>) -> f64 {
        let mut values = sum.clone();
        values.sort_by(|a, b| a.abs().total_cmp(&b.abs()).then(a.total_cmp(b)));
        let mut s = 0.0f64;
        let mut c = 0.0f64;
        for x in values {
            let t = s + x;
            if s.abs() >= x.abs() {
                c += (s - t) + x;
            } else {
                c += (x - t) + s;
            }
            s = t;
        }
        s + c
    }
}

impl Scalar for BigRational {
    type Sum = BigRational;

    fn from_mass(mass: f64) -> Self {
        short_decimal(mass)
            .or_else(|| BigRational::from_float(mass))
            .expect("masses are finite")
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_rational(&self) -> Option<BigRational> {
        Some(self.clone())
    }

    fn add_to(sum: &mut BigRational, value: BigRational) {
        *sum += value;
    }

    fn merge(sum: &mut BigRational, other: BigRational) {
        *sum += other;
    }

    fn total(sum: &BigRational) -> BigRational {
        sum.clone()
    }
}

/// The decimal with at most [`SHORT_DECIMALS`] places whose nearest double
/// is `value`, if there is one.
pub fn short_decimal(value: f64) -> Option<BigRational> {
    if !value.is_finite() {
        return None;
    }
    let scale = 10i64.pow(SHORT_DECIMALS);
    let scaled = (value * scale as f64).round();
    if scaled.abs() > 1e15 {
        return None;
    }
    let candidate = scaled / scale as f64;
    if candidate != value {
        return None;
    }
    let r = BigRational::new(BigInt::from(scaled as i64), BigInt::from(scale));
    Some(r)
}

pub fn is_short_decimal(value: f64) -> bool {
    short_decimal(value).is_some()
}

/// Absolute difference of two rationals as a float, for reporting.
pub fn rational_gap(a: &BigRational, b: &BigRational) -> f64 {
    Scalar::to_f64(&(a - b).abs())
}
