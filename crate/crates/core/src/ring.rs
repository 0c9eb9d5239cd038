//! Coefficient rings used by the exact polynomial engine.
//!
//! Everything symbolic is carried out over one of three exact rings:
//! the integers, the Gaussian rationals `Q(i)`, and the biquadratic field
//! `Q(i, sqrt 3)`. The real quadratic field `Q(sqrt 3)` is also provided
//! because it is the natural home of the conformal-group sample points.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimal commutative-ring interface shared by scalars and polynomials.
///
/// The classical discriminant formula is written once against this trait and
/// then evaluated on integers, field elements, floats and whole polynomials.
pub trait Ring: Clone {
    fn ring_zero_like(&self) -> Self;
    fn add_ref(&self, other: &Self) -> Self;
    fn sub_ref(&self, other: &Self) -> Self;
    fn mul_ref(&self, other: &Self) -> Self;
    fn neg_ref(&self) -> Self;
    fn scale_int(&self, k: i64) -> Self;
}

/// Serialized ring tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RingTag {
    #[serde(rename = "INT")]
    Int,
    #[serde(rename = "GAUSS_RAT")]
    GaussRat,
    #[serde(rename = "SQRT3_FIELD")]
    Sqrt3Field,
}

impl fmt::Display for RingTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RingTag::Int => "INT",
            RingTag::GaussRat => "GAUSS_RAT",
            RingTag::Sqrt3Field => "SQRT3_FIELD",
        };
        f.write_str(s)
    }
}

/// An exact coefficient ring usable inside [`crate::poly::MultiPoly`].
pub trait Coeff: Ring + PartialEq + Eq + fmt::Debug + Send + Sync + 'static {
    const TAG: RingTag;
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn from_int(k: i64) -> Self;
    fn to_complex(&self) -> Complex64;
    /// Exact string components: one for `INT`, two for `GAUSS_RAT`, four for `SQRT3_FIELD`.
    fn to_strings(&self) -> Vec<String>;
    fn from_strings(parts: &[String]) -> Result<Self>;
}

fn parse_rational(s: &str) -> Result<BigRational> {
    let bad = || Error::Parse(format!("invalid rational literal `{s}`"));
    let s = s.trim();
    match s.split_once('/') {
        Some((n, d)) => {
            let n = BigInt::from_str(n.trim()).map_err(|_| bad())?;
            let d = BigInt::from_str(d.trim()).map_err(|_| bad())?;
            if Zero::is_zero(&d) {
                return Err(bad());
            }
            Ok(BigRational::new(n, d))
        }
        None => Ok(BigRational::from_integer(BigInt::from_str(s).map_err(|_| bad())?)),
    }
}

fn rational_string(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

fn rat_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

fn rat(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

// --- integers -------------------------------------------------------------

impl Ring for BigInt {
    fn ring_zero_like(&self) -> Self {
        <BigInt as Zero>::zero()
    }
    fn add_ref(&self, o: &Self) -> Self {
        self + o
    }
    fn sub_ref(&self, o: &Self) -> Self {
        self - o
    }
    fn mul_ref(&self, o: &Self) -> Self {
        self * o
    }
    fn neg_ref(&self) -> Self {
        -self
    }
    fn scale_int(&self, k: i64) -> Self {
        self * BigInt::from(k)
    }
}

impl Coeff for BigInt {
    const TAG: RingTag = RingTag::Int;
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn from_int(k: i64) -> Self {
        BigInt::from(k)
    }
    fn to_complex(&self) -> Complex64 {
        Complex64::new(self.to_f64().unwrap_or(f64::NAN), 0.0)
    }
    fn to_strings(&self) -> Vec<String> {
        vec![self.to_string()]
    }
    fn from_strings(parts: &[String]) -> Result<Self> {
        match parts {
            [s] => BigInt::from_str(s.trim())
                .map_err(|_| Error::Parse(format!("invalid integer literal `{s}`"))),
            _ => Err(Error::Parse(format!("INT coefficient needs 1 component, got {}", parts.len()))),
        }
    }
}

impl Ring for BigRational {
    fn ring_zero_like(&self) -> Self {
        BigRational::zero()
    }
    fn add_ref(&self, o: &Self) -> Self {
        self + o
    }
    fn sub_ref(&self, o: &Self) -> Self {
        self - o
    }
    fn mul_ref(&self, o: &Self) -> Self {
        self * o
    }
    fn neg_ref(&self) -> Self {
        -self
    }
    fn scale_int(&self, k: i64) -> Self {
        self * rat(k)
    }
}

impl Ring for f64 {
    fn ring_zero_like(&self) -> Self {
        0.0
    }
    fn add_ref(&self, o: &Self) -> Self {
        self + o
    }
    fn sub_ref(&self, o: &Self) -> Self {
        self - o
    }
    fn mul_ref(&self, o: &Self) -> Self {
        self * o
    }
    fn neg_ref(&self) -> Self {
        -self
    }
    fn scale_int(&self, k: i64) -> Self {
        self * k as f64
    }
}

impl Ring for Complex64 {
    fn ring_zero_like(&self) -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn add_ref(&self, o: &Self) -> Self {
        self + o
    }
    fn sub_ref(&self, o: &Self) -> Self {
        self - o
    }
    fn mul_ref(&self, o: &Self) -> Self {
        self * o
    }
    fn neg_ref(&self) -> Self {
        -self
    }
    fn scale_int(&self, k: i64) -> Self {
        self * k as f64
    }
}

// --- Gaussian rationals ---------------------------------------------------

/// Element `re + im*i` of `Q(i)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GaussRat {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussRat {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Self { re, im }
    }

    pub fn from_ints(re: i64, im: i64) -> Self {
        Self::new(rat(re), rat(im))
    }

    pub fn i() -> Self {
        Self::from_ints(0, 1)
    }

    pub fn conj(&self) -> Self {
        Self::new(self.re.clone(), -&self.im)
    }

    pub fn norm_sqr(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn inv(&self) -> Option<Self> {
        let n = self.norm_sqr();
        if n.is_zero() {
            return None;
        }
        Some(Self::new(&self.re / &n, -&self.im / &n))
    }

    pub fn div(&self, other: &Self) -> Option<Self> {
        other.inv().map(|inv| self.mul_ref(&inv))
    }

    pub fn from_rational(q: BigRational) -> Self {
        Self::new(q, BigRational::zero())
    }
}

impl Ring for GaussRat {
    fn ring_zero_like(&self) -> Self {
        <Self as Coeff>::zero()
    }
    fn add_ref(&self, o: &Self) -> Self {
        Self::new(&self.re + &o.re, &self.im + &o.im)
    }
    fn sub_ref(&self, o: &Self) -> Self {
        Self::new(&self.re - &o.re, &self.im - &o.im)
    }
    fn mul_ref(&self, o: &Self) -> Self {
        Self::new(
            &self.re * &o.re - &self.im * &o.im,
            &self.re * &o.im + &self.im * &o.re,
        )
    }
    fn neg_ref(&self) -> Self {
        Self::new(-&self.re, -&self.im)
    }
    fn scale_int(&self, k: i64) -> Self {
        Self::new(&self.re * rat(k), &self.im * rat(k))
    }
}

impl Coeff for GaussRat {
    const TAG: RingTag = RingTag::GaussRat;
    fn zero() -> Self {
        Self::from_ints(0, 0)
    }
    fn one() -> Self {
        Self::from_ints(1, 0)
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn from_int(k: i64) -> Self {
        Self::from_ints(k, 0)
    }
    fn to_complex(&self) -> Complex64 {
        Complex64::new(rat_f64(&self.re), rat_f64(&self.im))
    }
    fn to_strings(&self) -> Vec<String> {
        vec![rational_string(&self.re), rational_string(&self.im)]
    }
    fn from_strings(parts: &[String]) -> Result<Self> {
        match parts {
            [a, b] => Ok(Self::new(parse_rational(a)?, parse_rational(b)?)),
            _ => Err(Error::Parse(format!(
                "GAUSS_RAT coefficient needs 2 components, got {}",
                parts.len()
            ))),
        }
    }
}

// --- Q(sqrt 3) ------------------------------------------------------------

/// Element `a + b*sqrt(3)` of the real field `Q(sqrt 3)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct QSqrt3 {
    pub a: BigRational,
    pub b: BigRational,
}

impl QSqrt3 {
    pub fn new(a: BigRational, b: BigRational) -> Self {
        Self { a, b }
    }

    pub fn rational(a: BigRational) -> Self {
        Self::new(a, BigRational::zero())
    }

    pub fn from_ratios(an: i64, ad: i64, bn: i64, bd: i64) -> Self {
        Self::new(
            BigRational::new(an.into(), ad.into()),
            BigRational::new(bn.into(), bd.into()),
        )
    }

    pub fn int(k: i64) -> Self {
        Self::rational(rat(k))
    }

    pub fn sqrt3() -> Self {
        Self::new(BigRational::zero(), BigRational::one())
    }

    pub fn zero() -> Self {
        Self::int(0)
    }

    pub fn one() -> Self {
        Self::int(1)
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    /// Galois conjugate `a - b*sqrt(3)`.
    pub fn galois(&self) -> Self {
        Self::new(self.a.clone(), -&self.b)
    }

    pub fn inv(&self) -> Option<Self> {
        // (a + b r)(a - b r) = a^2 - 3 b^2, nonzero unless both vanish.
        let n = &self.a * &self.a - rat(3) * &self.b * &self.b;
        if n.is_zero() {
            return None;
        }
        Some(Self::new(&self.a / &n, -&self.b / &n))
    }

    pub fn div(&self, o: &Self) -> Option<Self> {
        o.inv().map(|i| self.mul_ref(&i))
    }

    pub fn to_f64(&self) -> f64 {
        rat_f64(&self.a) + rat_f64(&self.b) * 3f64.sqrt()
    }

    /// Exact sign: `a + b sqrt 3` compared with zero without floating point.
    pub fn signum(&self) -> i32 {
        let sa = sign_of(&self.a);
        let sb = sign_of(&self.b);
        if sa == 0 {
            return sb;
        }
        if sb == 0 || sa == sb {
            return sa;
        }
        // opposite signs: compare a^2 with 3 b^2
        let lhs = &self.a * &self.a;
        let rhs = rat(3) * &self.b * &self.b;
        if lhs > rhs {
            sa
        } else if lhs < rhs {
            sb
        } else {
            0
        }
    }

    /// Largest absolute numerator or denominator among both rational parts.
    pub fn height(&self) -> BigInt {
        [self.a.numer(), self.a.denom(), self.b.numer(), self.b.denom()]
            .into_iter()
            .map(|v| v.abs())
            .max()
            .unwrap_or_default()
    }
}

fn sign_of(q: &BigRational) -> i32 {
    if q.is_positive() {
        1
    } else if q.is_negative() {
        -1
    } else {
        0
    }
}

impl Ring for QSqrt3 {
    fn ring_zero_like(&self) -> Self {
        Self::zero()
    }
    fn add_ref(&self, o: &Self) -> Self {
        Self::new(&self.a + &o.a, &self.b + &o.b)
    }
    fn sub_ref(&self, o: &Self) -> Self {
        Self::new(&self.a - &o.a, &self.b - &o.b)
    }
    fn mul_ref(&self, o: &Self) -> Self {
        Self::new(
            &self.a * &o.a + rat(3) * &self.b * &o.b,
            &self.a * &o.b + &self.b * &o.a,
        )
    }
    fn neg_ref(&self) -> Self {
        Self::new(-&self.a, -&self.b)
    }
    fn scale_int(&self, k: i64) -> Self {
        Self::new(&self.a * rat(k), &self.b * rat(k))
    }
}

impl fmt::Display for QSqrt3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.a.is_zero(), self.b.is_zero()) {
            (_, true) => write!(f, "{}", rational_string(&self.a)),
            (true, false) => write!(f, "{}*sqrt(3)", rational_string(&self.b)),
            (false, false) => write!(
                f,
                "{} + {}*sqrt(3)",
                rational_string(&self.a),
                rational_string(&self.b)
            ),
        }
    }
}

// --- Q(i, sqrt 3) ---------------------------------------------------------

/// Element `a + b sqrt3 + (c + d sqrt3) i` of `Q(i, sqrt 3)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sqrt3Field {
    pub re: QSqrt3,
    pub im: QSqrt3,
}

impl Sqrt3Field {
    pub fn new(re: QSqrt3, im: QSqrt3) -> Self {
        Self { re, im }
    }

    pub fn real(re: QSqrt3) -> Self {
        Self::new(re, QSqrt3::zero())
    }

    pub fn i() -> Self {
        Self::new(QSqrt3::zero(), QSqrt3::one())
    }

    pub fn conj(&self) -> Self {
        Self::new(self.re.clone(), self.im.neg_ref())
    }

    pub fn inv(&self) -> Option<Self> {
        let n = self.re.mul_ref(&self.re).add_ref(&self.im.mul_ref(&self.im));
        let ni = n.inv()?;
        Some(Self::new(self.re.mul_ref(&ni), self.im.mul_ref(&ni).neg_ref()))
    }

    pub fn div(&self, o: &Self) -> Option<Self> {
        o.inv().map(|i| self.mul_ref(&i))
    }

    pub fn from_gauss(g: &GaussRat) -> Self {
        Self::new(QSqrt3::rational(g.re.clone()), QSqrt3::rational(g.im.clone()))
    }
}

impl Ring for Sqrt3Field {
    fn ring_zero_like(&self) -> Self {
        <Self as Coeff>::zero()
    }
    fn add_ref(&self, o: &Self) -> Self {
        Self::new(self.re.add_ref(&o.re), self.im.add_ref(&o.im))
    }
    fn sub_ref(&self, o: &Self) -> Self {
        Self::new(self.re.sub_ref(&o.re), self.im.sub_ref(&o.im))
    }
    fn mul_ref(&self, o: &Self) -> Self {
        Self::new(
            self.re.mul_ref(&o.re).sub_ref(&self.im.mul_ref(&o.im)),
            self.re.mul_ref(&o.im).add_ref(&self.im.mul_ref(&o.re)),
        )
    }
    fn neg_ref(&self) -> Self {
        Self::new(self.re.neg_ref(), self.im.neg_ref())
    }
    fn scale_int(&self, k: i64) -> Self {
        Self::new(self.re.scale_int(k), self.im.scale_int(k))
    }
}

impl Coeff for Sqrt3Field {
    const TAG: RingTag = RingTag::Sqrt3Field;
    fn zero() -> Self {
        Self::new(QSqrt3::zero(), QSqrt3::zero())
    }
    fn one() -> Self {
        Self::real(QSqrt3::one())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn from_int(k: i64) -> Self {
        Self::real(QSqrt3::int(k))
    }
    fn to_complex(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
    fn to_strings(&self) -> Vec<String> {
        vec![
            rational_string(&self.re.a),
            rational_string(&self.re.b),
            rational_string(&self.im.a),
            rational_string(&self.im.b),
        ]
    }
    fn from_strings(parts: &[String]) -> Result<Self> {
        match parts {
            [a, b, c, d] => Ok(Self::new(
                QSqrt3::new(parse_rational(a)?, parse_rational(b)?),
                QSqrt3::new(parse_rational(c)?, parse_rational(d)?),
            )),
            _ => Err(Error::Parse(format!(
                "SQRT3_FIELD coefficient needs 4 components, got {}",
                parts.len()
            ))),
        }
    }
}

/// Ordered real scalars with exact or floating division.
///
/// Implemented by `f64`, `BigRational` and `QSqrt3`, so geometric maps can
/// be written once and run both exactly and in floating point.
pub trait RealField: Ring + PartialEq + fmt::Debug + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(k: i64) -> Self;
    fn is_zero(&self) -> bool;
    fn inv(&self) -> Option<Self>;
    fn to_f64(&self) -> f64;
}

impl RealField for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_int(k: i64) -> Self {
        k as f64
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn inv(&self) -> Option<Self> {
        (*self != 0.0).then(|| 1.0 / self)
    }
    fn to_f64(&self) -> f64 {
        *self
    }
}

impl RealField for QSqrt3 {
    fn zero() -> Self {
        QSqrt3::zero()
    }
    fn one() -> Self {
        QSqrt3::one()
    }
    fn from_int(k: i64) -> Self {
        QSqrt3::int(k)
    }
    fn is_zero(&self) -> bool {
        QSqrt3::is_zero(self)
    }
    fn inv(&self) -> Option<Self> {
        QSqrt3::inv(self)
    }
    fn to_f64(&self) -> f64 {
        QSqrt3::to_f64(self)
    }
}

/// Parse an exact rational from `"p"` or `"p/q"`.
pub fn parse_rat(s: &str) -> Result<BigRational> {
    parse_rational(s)
}

/// Canonical string for an exact rational.
pub fn rat_to_string(q: &BigRational) -> String {
    rational_string(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt3_squares_to_three_and_i_squares_to_minus_one() {
        let r = Sqrt3Field::real(QSqrt3::sqrt3());
        assert_eq!(r.mul_ref(&r), Sqrt3Field::from_int(3));
        let i = Sqrt3Field::i();
        assert_eq!(i.mul_ref(&i), Sqrt3Field::from_int(-1));
    }

    #[test]
    fn field_inverses() {
        let x = Sqrt3Field::new(QSqrt3::from_ratios(1, 2, 0, 1), QSqrt3::from_ratios(0, 1, 1, 6));
        let inv = x.inv().unwrap();
        assert_eq!(x.mul_ref(&inv), Sqrt3Field::one());
        assert!(Sqrt3Field::zero().inv().is_none());
        let g = GaussRat::from_ints(3, -4);
        assert_eq!(g.mul_ref(&g.inv().unwrap()), GaussRat::one());
    }

    #[test]
    fn exact_sign_of_quadratic_irrationals() {
        // 2 - sqrt 3 > 0, 1 - sqrt 3 < 0, 3 - sqrt 9... not representable; use 3/2 - sqrt3/2*sqrt3
        assert_eq!(QSqrt3::from_ratios(2, 1, -1, 1).signum(), 1);
        assert_eq!(QSqrt3::from_ratios(1, 1, -1, 1).signum(), -1);
        assert_eq!(QSqrt3::from_ratios(-7, 4, 1, 1).signum(), -1);
        assert_eq!(QSqrt3::zero().signum(), 0);
    }

    #[test]
    fn string_components_round_trip() {
        let x = Sqrt3Field::new(QSqrt3::from_ratios(-1, 3, 5, 7), QSqrt3::from_ratios(0, 1, 1, 6));
        let s = x.to_strings();
        assert_eq!(s, vec!["-1/3", "5/7", "0", "1/6"]);
        assert_eq!(Sqrt3Field::from_strings(&s).unwrap(), x);
        assert!(BigInt::from_strings(&["12x".to_string()]).is_err());
        assert!(GaussRat::from_strings(&["1/0".to_string(), "1".to_string()]).is_err());
    }
}
