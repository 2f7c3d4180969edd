//! Exact rationals and linear forms `a + b·t` over them.
//!
//! Every quantity in the plane and space reductions lives here. There is no
//! floating point on any decision path; `to_f64` exists for display only.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub, SubAssign};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Exact fraction, always in lowest terms with a positive denominator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Rational(BigRational);

impl Rational {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Result<Self> {
        let denom = denom.into();
        if denom.is_zero() {
            return Err(Error::InvalidInput("zero denominator".into()));
        }
        Ok(Rational(BigRational::new(numer.into(), denom)))
    }

    /// Panics on a zero denominator; for literals known to be valid.
    pub fn frac(numer: i64, denom: i64) -> Self {
        Rational::new(numer, denom).expect("nonzero denominator")
    }

    pub fn integer(n: impl Into<BigInt>) -> Self {
        Rational(BigRational::from_integer(n.into()))
    }

    pub fn zero() -> Self {
        Rational(BigRational::zero())
    }

    pub fn one() -> Self {
        Rational(BigRational::one())
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        self.0.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        self.0.is_negative()
    }

    pub fn is_integer(&self) -> bool {
        self.0.is_integer()
    }

    pub fn abs(&self) -> Self {
        Rational(self.0.abs())
    }

    pub fn floor(&self) -> BigInt {
        self.numer().div_floor(self.denom())
    }

    pub fn ceil(&self) -> BigInt {
        -((-self.numer()).div_floor(self.denom()))
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64().unwrap_or(f64::NAN)
    }

    /// Round to the nearest integer, ties to even.
    pub fn round_half_even(&self) -> BigInt {
        let fl = self.floor();
        let rem = self.numer() - &fl * self.denom();
        let twice: BigInt = rem * 2;
        match twice.cmp(self.denom()) {
            Ordering::Less => fl,
            Ordering::Greater => fl + 1,
            Ordering::Equal => {
                if fl.is_even() {
                    fl
                } else {
                    fl + 1
                }
            }
        }
    }

    /// Fixed-point rendering with `digits` fractional digits, half-to-even.
    pub fn to_decimal(&self, digits: u32) -> String {
        let scale = BigInt::from(10u32).pow(digits);
        let scaled = (self * &Rational::integer(scale)).round_half_even();
        let negative = scaled.is_negative();
        let mut body = scaled.abs().to_string();
        if digits > 0 {
            let d = digits as usize;
            if body.len() <= d {
                body = format!("{}{}", "0".repeat(d + 1 - body.len()), body);
            }
            body.insert(body.len() - d, '.');
        }
        if negative {
            format!("-{body}")
        } else {
            body
        }
    }
}

/// Smallest `d` with `10^-d <= precision`. Precision must be positive.
pub fn decimal_digits_for(precision: &Rational) -> u32 {
    assert!(precision.is_positive(), "precision must be positive");
    let mut d = 0u32;
    let mut step = Rational::one();
    while &step > precision {
        step = step / Rational::integer(10);
        d += 1;
    }
    d
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.numer())
        } else {
            write!(f, "{}/{}", self.numer(), self.denom())
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl From<i64> for Rational {
    fn from(n: i64) -> Self {
        Rational::integer(n)
    }
}

impl From<u64> for Rational {
    fn from(n: u64) -> Self {
        Rational::integer(n)
    }
}

impl From<BigInt> for Rational {
    fn from(n: BigInt) -> Self {
        Rational::integer(n)
    }
}

/// Scans an unsigned decimal integer starting at `pos`; returns the value and
/// the position after it.
fn scan_digits(s: &str, pos: usize) -> Option<(BigInt, usize)> {
    let bytes = s.as_bytes();
    let mut end = pos;
    while end < bytes.len() && bytes[end].is_ascii_digit() {
        end += 1;
    }
    if end == pos {
        return None;
    }
    Some((s[pos..end].parse().expect("ascii digits"), end))
}

/// Scans an unsigned rational `p` or `p/q` at `pos`.
fn scan_unsigned_rational(s: &str, pos: usize) -> Result<Option<(Rational, usize)>> {
    let Some((numer, mut end)) = scan_digits(s, pos) else {
        return Ok(None);
    };
    let mut denom = BigInt::one();
    if s.as_bytes().get(end) == Some(&b'/') {
        let (d, e) = scan_digits(s, end + 1)
            .ok_or_else(|| Error::parse(end + 1, "expected denominator digits"))?;
        if d.is_zero() {
            return Err(Error::parse(end + 1, "zero denominator"));
        }
        denom = d;
        end = e;
    }
    Ok(Some((Rational(BigRational::new(numer, denom)), end)))
}

impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s_trim = s.trim_start();
        let lead = s.len() - s_trim.len();
        let s_trim = s_trim.trim_end();
        let (negative, start) = match s_trim.as_bytes().first() {
            Some(b'-') => (true, 1),
            Some(b'+') => (false, 1),
            Some(_) => (false, 0),
            None => return Err(Error::parse(lead, "empty rational")),
        };
        let (value, end) = scan_unsigned_rational(s_trim, start)
            .map_err(|e| e.offset(lead))?
            .ok_or_else(|| Error::parse(lead + start, "expected digits"))?;
        if end != s_trim.len() {
            return Err(Error::parse(lead + end, "unexpected trailing characters"));
        }
        Ok(if negative { -value } else { value })
    }
}

impl Serialize for Rational {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

macro_rules! forward_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational((&self.0).$method(&rhs.0))
            }
        }
        impl $trait<Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational(self.0.$method(rhs.0))
            }
        }
        impl $trait<&Rational> for Rational {
            type Output = Rational;
            fn $method(self, rhs: &Rational) -> Rational {
                Rational(self.0.$method(&rhs.0))
            }
        }
        impl $trait<Rational> for &Rational {
            type Output = Rational;
            fn $method(self, rhs: Rational) -> Rational {
                Rational((&self.0).$method(rhs.0))
            }
        }
    };
}

forward_binop!(Add, add);
forward_binop!(Sub, sub);
forward_binop!(Mul, mul);
forward_binop!(Div, div);

impl AddAssign<&Rational> for Rational {
    fn add_assign(&mut self, rhs: &Rational) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Rational> for Rational {
    fn sub_assign(&mut self, rhs: &Rational) {
        self.0 -= &rhs.0;
    }
}

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-self.0)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational(-&self.0)
    }
}

/// Linear polynomial `a + b·t` in one indeterminate.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct LinForm {
    pub a: Rational,
    pub b: Rational,
}

impl LinForm {
    pub fn new(a: Rational, b: Rational) -> Self {
        LinForm { a, b }
    }

    pub fn constant(a: Rational) -> Self {
        LinForm {
            a,
            b: Rational::zero(),
        }
    }

    /// Shorthand for integer coefficients.
    pub fn ints(a: i64, b: i64) -> Self {
        LinForm::new(a.into(), b.into())
    }

    pub fn is_constant(&self) -> bool {
        self.b.is_zero()
    }

    pub fn eval(&self, x: &Rational) -> Rational {
        &self.a + &self.b * x
    }

    /// Root `-a/b`, or `None` for constants.
    pub fn root(&self) -> Option<Rational> {
        if self.b.is_zero() {
            None
        } else {
            Some(-(&self.a / &self.b))
        }
    }

    pub fn scale(&self, c: &Rational) -> LinForm {
        LinForm::new(&self.a * c, &self.b * c)
    }
}

pub fn linform_eval(f: &LinForm, x: &Rational) -> Rational {
    f.eval(x)
}

pub fn linform_root(f: &LinForm) -> Option<Rational> {
    f.root()
}

/// Compare by value at `tau`.
pub fn tau_compare(f: &LinForm, g: &LinForm, tau: &Rational) -> Ordering {
    f.eval(tau).cmp(&g.eval(tau))
}

/// Total order used for sorting: value at `tau`, then `a`, then `b`.
/// Agrees with [`tau_compare`] whenever that is not `Equal`.
pub fn tau_order(f: &LinForm, g: &LinForm, tau: &Rational) -> Ordering {
    tau_compare(f, g, tau)
        .then_with(|| f.a.cmp(&g.a))
        .then_with(|| f.b.cmp(&g.b))
}

impl Add<&LinForm> for &LinForm {
    type Output = LinForm;
    fn add(self, rhs: &LinForm) -> LinForm {
        LinForm::new(&self.a + &rhs.a, &self.b + &rhs.b)
    }
}

impl Sub<&LinForm> for &LinForm {
    type Output = LinForm;
    fn sub(self, rhs: &LinForm) -> LinForm {
        LinForm::new(&self.a - &rhs.a, &self.b - &rhs.b)
    }
}

impl Add for LinForm {
    type Output = LinForm;
    fn add(self, rhs: LinForm) -> LinForm {
        &self + &rhs
    }
}

impl Sub for LinForm {
    type Output = LinForm;
    fn sub(self, rhs: LinForm) -> LinForm {
        &self - &rhs
    }
}

impl Neg for &LinForm {
    type Output = LinForm;
    fn neg(self) -> LinForm {
        LinForm::new(-&self.a, -&self.b)
    }
}

fn fmt_t_term(b: &Rational) -> String {
    if b == &Rational::one() {
        "t".to_string()
    } else if b == &-Rational::one() {
        "-t".to_string()
    } else {
        format!("{b}t")
    }
}

impl fmt::Display for LinForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", self.a)
        } else if self.a.is_zero() {
            f.write_str(&fmt_t_term(&self.b))
        } else if self.b.is_negative() {
            write!(f, "{}-{}", self.a, fmt_t_term(&-&self.b))
        } else {
            write!(f, "{}+{}", self.a, fmt_t_term(&self.b))
        }
    }
}

impl fmt::Debug for LinForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for LinForm {
    type Err = Error;

    /// Accepts `a`, `bt`, `a+bt`, `a-bt`, `bt+a`, with rational coefficients
    /// and an implicit coefficient of one on a bare `t`.
    fn from_str(s: &str) -> Result<Self> {
        let bytes = s.as_bytes();
        let skip_ws = |mut p: usize| {
            while p < bytes.len() && bytes[p].is_ascii_whitespace() {
                p += 1;
            }
            p
        };
        let mut pos = skip_ws(0);
        if pos == bytes.len() {
            return Err(Error::parse(pos, "empty linear form"));
        }
        let mut constant: Option<Rational> = None;
        let mut linear: Option<Rational> = None;
        let mut first = true;
        while pos < bytes.len() {
            let term_start = pos;
            let negative = match bytes[pos] {
                b'-' => {
                    pos += 1;
                    true
                }
                b'+' => {
                    pos += 1;
                    false
                }
                _ if first => false,
                _ => return Err(Error::parse(pos, "expected '+' or '-'")),
            };
            pos = skip_ws(pos);
            let coef = scan_unsigned_rational(s, pos)?;
            let (mut value, after) = match coef {
                Some((v, e)) => (Some(v), e),
                None => (None, pos),
            };
            pos = after;
            let is_t = bytes.get(pos) == Some(&b't');
            if is_t {
                pos += 1;
                value.get_or_insert_with(Rational::one);
            }
            let Some(mut value) = value else {
                return Err(Error::parse(pos, "expected a coefficient or 't'"));
            };
            if negative {
                value = -value;
            }
            let slot = if is_t { &mut linear } else { &mut constant };
            if slot.is_some() {
                return Err(Error::parse(term_start, "duplicate term"));
            }
            *slot = Some(value);
            first = false;
            pos = skip_ws(pos);
        }
        Ok(LinForm::new(
            constant.unwrap_or_default(),
            linear.unwrap_or_default(),
        ))
    }
}

impl Serialize for LinForm {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for LinForm {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
