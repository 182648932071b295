//! Exact rational numbers.
//!
//! Values whose reduced numerator and denominator fit in `i64` are stored
//! inline; everything else falls back to a boxed `BigRational`. The
//! representation is canonical, so structural equality and hashing agree
//! with numeric equality.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::str::FromStr;

use num::integer::Integer;
use num::traits::{One, Signed, ToPrimitive, Zero};
use num::{BigInt, BigRational};

#[derive(Clone)]
pub struct Rational(Repr);

#[derive(Clone)]
enum Repr {
    Small { num: i64, den: i64 },
    Big(Box<BigRational>),
}

fn gcd_i128(a: i128, b: i128) -> i128 {
    a.gcd(&b)
}

impl Rational {
    pub fn new(num: i64, den: i64) -> Rational {
        assert!(den != 0, "zero denominator");
        Rational::from_i128(num as i128, den as i128)
    }

    pub fn from_integer(n: i64) -> Rational {
        Rational(Repr::Small { num: n, den: 1 })
    }

    pub fn zero() -> Rational {
        Rational::from_integer(0)
    }

    pub fn one() -> Rational {
        Rational::from_integer(1)
    }

    fn from_i128(num: i128, den: i128) -> Rational {
        debug_assert!(den != 0);
        let (mut num, mut den) = if den < 0 { (-num, -den) } else { (num, den) };
        let g = gcd_i128(num, den);
        if g > 1 {
            num /= g;
            den /= g;
        }
        match (i64::try_from(num), i64::try_from(den)) {
            (Ok(n), Ok(d)) => Rational(Repr::Small { num: n, den: d }),
            _ => Rational(Repr::Big(Box::new(BigRational::new(
                BigInt::from(num),
                BigInt::from(den),
            )))),
        }
    }

    pub fn from_big(r: BigRational) -> Rational {
        // BigRational keeps itself reduced with a positive denominator.
        if let (Some(n), Some(d)) = (r.numer().to_i64(), r.denom().to_i64()) {
            return Rational(Repr::Small { num: n, den: d });
        }
        Rational(Repr::Big(Box::new(r)))
    }

    pub fn to_big(&self) -> BigRational {
        match &self.0 {
            Repr::Small { num, den } => {
                BigRational::new_raw(BigInt::from(*num), BigInt::from(*den))
            }
            Repr::Big(b) => (**b).clone(),
        }
    }

    pub fn numer(&self) -> BigInt {
        match &self.0 {
            Repr::Small { num, .. } => BigInt::from(*num),
            Repr::Big(b) => b.numer().clone(),
        }
    }

    pub fn denom(&self) -> BigInt {
        match &self.0 {
            Repr::Small { den, .. } => BigInt::from(*den),
            Repr::Big(b) => b.denom().clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.0, Repr::Small { num: 0, .. })
    }

    pub fn is_one(&self) -> bool {
        matches!(self.0, Repr::Small { num: 1, den: 1 })
    }

    pub fn is_positive(&self) -> bool {
        match &self.0 {
            Repr::Small { num, .. } => *num > 0,
            Repr::Big(b) => b.is_positive(),
        }
    }

    pub fn is_negative(&self) -> bool {
        match &self.0 {
            Repr::Small { num, .. } => *num < 0,
            Repr::Big(b) => b.is_negative(),
        }
    }

    pub fn is_integer(&self) -> bool {
        match &self.0 {
            Repr::Small { den, .. } => *den == 1,
            Repr::Big(b) => b.is_integer(),
        }
    }

    pub fn abs(&self) -> Rational {
        if self.is_negative() {
            -self
        } else {
            self.clone()
        }
    }

    pub fn pow(&self, exp: u32) -> Rational {
        let mut acc = Rational::one();
        let mut base = self.clone();
        let mut e = exp;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn recip(&self) -> Rational {
        Rational::one() / self
    }

    pub fn floor(&self) -> BigInt {
        match &self.0 {
            Repr::Small { num, den } => BigInt::from(num.div_floor(den)),
            Repr::Big(b) => b.floor().to_integer(),
        }
    }

    pub fn to_f64(&self) -> f64 {
        match &self.0 {
            Repr::Small { num, den } => *num as f64 / *den as f64,
            Repr::Big(b) => b.to_f64().unwrap_or(f64::NAN),
        }
    }

    /// Decimal rendering rounded half away from zero.
    pub fn to_decimal(&self, places: u32) -> String {
        let scale = BigInt::from(10u32).pow(places);
        let scaled = self.to_big() * BigRational::from_integer(scale.clone());
        let neg = scaled.is_negative();
        let mag = scaled.abs();
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let rounded = (mag + half).floor().to_integer();
        let int_part = &rounded / &scale;
        let frac_part = &rounded % &scale;
        let sign = if neg && !rounded.is_zero() { "-" } else { "" };
        if places == 0 {
            return format!("{sign}{int_part}");
        }
        format!(
            "{sign}{int_part}.{:0>width$}",
            frac_part.to_string(),
            width = places as usize
        )
    }

    pub fn min(self, other: Rational) -> Rational {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn max(self, other: Rational) -> Rational {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Default for Rational {
    fn default() -> Self {
        Rational::zero()
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::from_integer(n)
    }
}

impl From<BigRational> for Rational {
    fn from(r: BigRational) -> Self {
        Rational::from_big(r)
    }
}

impl PartialEq for Rational {
    fn eq(&self, other: &Self) -> bool {
        match (&self.0, &other.0) {
            (Repr::Small { num: a, den: b }, Repr::Small { num: c, den: d }) => a == c && b == d,
            (Repr::Big(x), Repr::Big(y)) => x == y,
            _ => false,
        }
    }
}

impl Eq for Rational {}

impl Hash for Rational {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match &self.0 {
            Repr::Small { num, den } => {
                0u8.hash(state);
                num.hash(state);
                den.hash(state);
            }
            Repr::Big(b) => {
                1u8.hash(state);
                b.hash(state);
            }
        }
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.0, &other.0) {
            (Repr::Small { num: a, den: b }, Repr::Small { num: c, den: d }) => {
                if b == d {
                    return a.cmp(c);
                }
                ((*a as i128) * (*d as i128)).cmp(&((*c as i128) * (*b as i128)))
            }
            _ => self.to_big().cmp(&other.to_big()),
        }
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn add_ref(x: &Rational, y: &Rational) -> Rational {
    match (&x.0, &y.0) {
        (Repr::Small { num: a, den: b }, Repr::Small { num: c, den: d }) => {
            if b == d {
                return Rational::from_i128(*a as i128 + *c as i128, *b as i128);
            }
            let (a, b, c, d) = (*a as i128, *b as i128, *c as i128, *d as i128);
            match a
                .checked_mul(d)
                .and_then(|ad| c.checked_mul(b).and_then(|cb| ad.checked_add(cb)))
            {
                Some(n) => Rational::from_i128(n, b * d),
                None => Rational::from_big(x.to_big() + y.to_big()),
            }
        }
        _ => Rational::from_big(x.to_big() + y.to_big()),
    }
}

fn mul_ref(x: &Rational, y: &Rational) -> Rational {
    match (&x.0, &y.0) {
        (Repr::Small { num: a, den: b }, Repr::Small { num: c, den: d }) => {
            Rational::from_i128(*a as i128 * *c as i128, *b as i128 * *d as i128)
        }
        _ => Rational::from_big(x.to_big() * y.to_big()),
    }
}

fn neg_ref(x: &Rational) -> Rational {
    match &x.0 {
        Repr::Small { num, den } => Rational::from_i128(-(*num as i128), *den as i128),
        Repr::Big(b) => Rational::from_big(-(**b).clone()),
    }
}

fn div_ref(x: &Rational, y: &Rational) -> Rational {
    assert!(!y.is_zero(), "division by zero");
    match (&x.0, &y.0) {
        (Repr::Small { num: a, den: b }, Repr::Small { num: c, den: d }) => {
            Rational::from_i128(*a as i128 * *d as i128, *b as i128 * *c as i128)
        }
        _ => Rational::from_big(x.to_big() / y.to_big()),
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident, $f:ident) => {
        impl $trait<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                $f(self, rhs)
            }
        }
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                $f(&self, &rhs)
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                $f(&self, rhs)
            }
        }
        impl $trait<Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                $f(self, &rhs)
            }
        }
    };
}

fn sub_ref(x: &Rational, y: &Rational) -> Rational {
    add_ref(x, &neg_ref(y))
}

forward_binop!(Add, add, add_ref);
forward_binop!(Sub, sub, sub_ref);
forward_binop!(Mul, mul, mul_ref);
forward_binop!(Div, div, div_ref);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        neg_ref(&self)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        neg_ref(self)
    }
}

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        *self = add_ref(self, rhs);
    }
}

impl AddAssign<Rational> for Rational {
    fn add_assign(&mut self, rhs: Rational) {
        *self = add_ref(self, &rhs);
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        *self = sub_ref(self, rhs);
    }
}

impl MulAssign<&Rational> for Rational {
    fn mul_assign(&mut self, rhs: &Rational) {
        *self = mul_ref(self, rhs);
    }
}

impl Sum for Rational {
    fn sum<I: Iterator<Item = Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl<'a> Sum<&'a Rational> for Rational {
    fn sum<I: Iterator<Item = &'a Rational>>(iter: I) -> Rational {
        iter.fold(Rational::zero(), |acc, x| acc + x)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.0 {
            Repr::Small { num, den: 1 } => write!(f, "{num}"),
            Repr::Small { num, den } => write!(f, "{num}/{den}"),
            Repr::Big(b) => write!(f, "{b}"),
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseRationalError(pub String);

impl fmt::Display for ParseRationalError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid rational literal `{}`", self.0)
    }
}

impl std::error::Error for ParseRationalError {}

impl FromStr for Rational {
    type Err = ParseRationalError;

    /// Accepts `n`, `n/d` and finite decimals such as `0.9` or `-1.25`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = || ParseRationalError(s.to_string());
        let t = s.trim();
        if t.is_empty() {
            return Err(err());
        }
        if let Some((n, d)) = t.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| err())?;
            let d: BigInt = d.trim().parse().map_err(|_| err())?;
            if d.is_zero() {
                return Err(err());
            }
            return Ok(Rational::from_big(BigRational::new(n, d)));
        }
        if let Some((ip, fp)) = t.split_once('.') {
            let neg = ip.starts_with('-');
            let ip_digits = ip.trim_start_matches(['-', '+']);
            if !fp.chars().all(|c| c.is_ascii_digit())
                || !ip_digits.chars().all(|c| c.is_ascii_digit())
                || (ip_digits.is_empty() && fp.is_empty())
            {
                return Err(err());
            }
            let digits = format!("{ip_digits}{fp}");
            let n: BigInt = if digits.is_empty() {
                BigInt::zero()
            } else {
                digits.parse().map_err(|_| err())?
            };
            let d = BigInt::from(10u32).pow(fp.len() as u32);
            let r = BigRational::new(n, d);
            return Ok(Rational::from_big(if neg { -r } else { r }));
        }
        let n: BigInt = t.parse().map_err(|_| err())?;
        Ok(Rational::from_big(BigRational::from_integer(n)))
    }
}

/// Shorthand for `Rational::new`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(num, den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_small_and_big() {
        let big = Rational::new(i64::MAX, 1) + Rational::one();
        assert!(matches!(big.0, Repr::Big(_)));
        let back = big - Rational::one();
        assert!(matches!(back.0, Repr::Small { .. }));
        assert_eq!(back, Rational::new(i64::MAX, 1));
    }

    #[test]
    fn arithmetic_matches_bigrational() {
        let xs = [rat(1, 3), rat(-7, 10), rat(9, 10), rat(i64::MAX, 3), rat(5, i64::MAX)];
        for a in &xs {
            for b in &xs {
                let (ba, bb) = (a.to_big(), b.to_big());
                assert_eq!((a + b).to_big(), &ba + &bb);
                assert_eq!((a - b).to_big(), &ba - &bb);
                assert_eq!((a * b).to_big(), &ba * &bb);
                assert_eq!((a / b).to_big(), &ba / &bb);
                assert_eq!(a.cmp(b), ba.cmp(&bb));
            }
        }
    }

    #[test]
    fn parse_and_render() {
        assert_eq!("9/10".parse::<Rational>().unwrap(), rat(9, 10));
        assert_eq!("0.9".parse::<Rational>().unwrap(), rat(9, 10));
        assert_eq!("-1.25".parse::<Rational>().unwrap(), rat(-5, 4));
        assert_eq!("4/8".parse::<Rational>().unwrap().to_string(), "1/2");
        assert!("1/0".parse::<Rational>().is_err());
        assert!("abc".parse::<Rational>().is_err());
        assert_eq!(rat(2, 3).to_decimal(6), "0.666667");
        assert_eq!(rat(-1, 8).to_decimal(2), "-0.13");
        assert_eq!(Rational::one().to_decimal(3), "1.000");
    }

    #[test]
    fn pow_is_exact() {
        assert_eq!(rat(9, 10).pow(6), rat(531441, 1000000));
        assert_eq!(rat(1, 2).pow(0), Rational::one());
    }
}
