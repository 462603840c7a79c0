//! Exact Laurent polynomials over the rationals in three formal symbols.
//!
//! `P` stands for `q^-1`, `S` for `sqrt(c)` and `T` for the circle parameter
//! `t1`. All three are invertible; the conjugate of `T` is `T^-1` while `P`
//! and `S` are real. The parameter `c` is always written as `S^2`.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num::complex::Complex64;
use num::traits::{One, Signed, ToPrimitive, Zero};
use num::{BigInt, BigRational};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("q must be finite and > 1, got {0}")]
    Q(f64),
    #[error("c must be finite and > 0, got {0}")]
    C(f64),
    #[error("t1 must have unit modulus, got |t1| = {0}")]
    T1(f64),
}

/// Exponents of `P^p S^s T^t`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Exponents {
    pub p: i32,
    pub s: i32,
    pub t: i32,
}

impl Exponents {
    pub const ONE: Exponents = Exponents { p: 0, s: 0, t: 0 };

    pub const fn new(p: i32, s: i32, t: i32) -> Self {
        Exponents { p, s, t }
    }

    fn checked_add(self, other: Exponents) -> Exponents {
        let add = |a: i32, b: i32| a.checked_add(b).expect("Laurent exponent overflow");
        Exponents {
            p: add(self.p, other.p),
            s: add(self.s, other.s),
            t: add(self.t, other.t),
        }
    }

    fn conj(self) -> Exponents {
        Exponents {
            t: self.t.checked_neg().expect("Laurent exponent overflow"),
            ..self
        }
    }
}

/// A finite sum of rational multiples of `P^p S^s T^t`.
///
/// Zero coefficients are never stored, so structural equality is ring
/// equality.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct LaurentPoly {
    terms: BTreeMap<Exponents, BigRational>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        LaurentPoly::default()
    }

    pub fn one() -> Self {
        Self::constant(BigRational::one())
    }

    pub fn constant(value: BigRational) -> Self {
        Self::monomial(value, Exponents::ONE)
    }

    pub fn integer(value: i64) -> Self {
        Self::constant(BigRational::from_integer(BigInt::from(value)))
    }

    pub fn monomial(coeff: BigRational, exps: Exponents) -> Self {
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert(exps, coeff);
        }
        LaurentPoly { terms }
    }

    /// `P^p S^s T^t` with unit coefficient.
    pub fn mono(p: i32, s: i32, t: i32) -> Self {
        Self::monomial(BigRational::one(), Exponents::new(p, s, t))
    }

    /// `P = q^-1`
    pub fn p() -> Self {
        Self::mono(1, 0, 0)
    }

    /// `S = sqrt(c)`
    pub fn s() -> Self {
        Self::mono(0, 1, 0)
    }

    /// `T = t1`
    pub fn t() -> Self {
        Self::mono(0, 0, 1)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &BigRational)> {
        self.terms.iter()
    }

    pub fn coeff(&self, exps: Exponents) -> BigRational {
        self.terms.get(&exps).cloned().unwrap_or_else(BigRational::zero)
    }

    /// If this is a single monomial, its coefficient and exponents.
    pub fn as_monomial(&self) -> Option<(&BigRational, Exponents)> {
        if self.terms.len() == 1 {
            self.terms.iter().next().map(|(e, c)| (c, *e))
        } else {
            None
        }
    }

    fn add_term(&mut self, exps: Exponents, coeff: BigRational) {
        if coeff.is_zero() {
            return;
        }
        let slot = self.terms.entry(exps).or_insert_with(BigRational::zero);
        *slot += coeff;
        if slot.is_zero() {
            self.terms.remove(&exps);
        }
    }

    /// Multiplies every exponent triple by a monomial shift.
    pub fn shift(&self, exps: Exponents) -> Self {
        LaurentPoly {
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.checked_add(exps), c.clone()))
                .collect(),
        }
    }

    pub fn scale(&self, factor: &BigRational) -> Self {
        if factor.is_zero() {
            return LaurentPoly::zero();
        }
        LaurentPoly {
            terms: self.terms.iter().map(|(e, c)| (*e, c * factor)).collect(),
        }
    }

    /// Complex conjugation: fixes `P`, `S` and rational coefficients, sends `T` to `T^-1`.
    pub fn conj(&self) -> Self {
        LaurentPoly {
            terms: self.terms.iter().map(|(e, c)| (e.conj(), c.clone())).collect(),
        }
    }

    /// Nonnegative integer power.
    pub fn pow(&self, n: u32) -> Self {
        let mut acc = LaurentPoly::one();
        for _ in 0..n {
            acc = &acc * self;
        }
        acc
    }

    /// Substitutes `P = 1/q`, `S = sqrt(c)`, `T = t1`.
    pub fn eval(&self, q: f64, c: f64, t1: Complex64) -> Result<Complex64, DomainError> {
        check_domain(q, c, t1)?;
        let p = 1.0 / q;
        let s = c.sqrt();
        Ok(self
            .terms
            .iter()
            .map(|(e, coeff)| {
                let r = rational_to_f64(coeff);
                let real = r * p.powi(e.p) * s.powi(e.s);
                t1.powi(e.t) * real
            })
            .sum())
    }
}

pub(crate) fn check_domain(q: f64, c: f64, t1: Complex64) -> Result<(), DomainError> {
    if !(q.is_finite() && q > 1.0) {
        return Err(DomainError::Q(q));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(DomainError::C(c));
    }
    let modulus = t1.norm();
    if !modulus.is_finite() || (modulus - 1.0).abs() > 1e-12 {
        return Err(DomainError::T1(modulus));
    }
    Ok(())
}

pub(crate) fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // to_f64 only fails when numerator or denominator overflow f64 on their own.
        let n = r.numer().to_f64().unwrap_or(f64::INFINITY);
        let d = r.denom().to_f64().unwrap_or(f64::INFINITY);
        n / d
    })
}

impl From<BigRational> for LaurentPoly {
    fn from(value: BigRational) -> Self {
        LaurentPoly::constant(value)
    }
}

impl From<i64> for LaurentPoly {
    fn from(value: i64) -> Self {
        LaurentPoly::integer(value)
    }
}

impl<'a> Add<&'a LaurentPoly> for &'a LaurentPoly {
    type Output = LaurentPoly;

    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Add for LaurentPoly {
    type Output = LaurentPoly;

    fn add(mut self, rhs: LaurentPoly) -> LaurentPoly {
        self += &rhs;
        self
    }
}

impl AddAssign<&LaurentPoly> for LaurentPoly {
    fn add_assign(&mut self, rhs: &LaurentPoly) {
        for (e, c) in &rhs.terms {
            self.add_term(*e, c.clone());
        }
    }
}

impl Neg for &LaurentPoly {
    type Output = LaurentPoly;

    fn neg(self) -> LaurentPoly {
        LaurentPoly {
            terms: self.terms.iter().map(|(e, c)| (*e, -c)).collect(),
        }
    }
}

impl Neg for LaurentPoly {
    type Output = LaurentPoly;

    fn neg(self) -> LaurentPoly {
        -&self
    }
}

impl<'a> Sub<&'a LaurentPoly> for &'a LaurentPoly {
    type Output = LaurentPoly;

    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(*e, -c);
        }
        out
    }
}

impl Sub for LaurentPoly {
    type Output = LaurentPoly;

    fn sub(self, rhs: LaurentPoly) -> LaurentPoly {
        &self - &rhs
    }
}

impl<'a> Mul<&'a LaurentPoly> for &'a LaurentPoly {
    type Output = LaurentPoly;

    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = LaurentPoly::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                out.add_term(ea.checked_add(*eb), ca * cb);
            }
        }
        out
    }
}

impl Mul for LaurentPoly {
    type Output = LaurentPoly;

    fn mul(self, rhs: LaurentPoly) -> LaurentPoly {
        &self * &rhs
    }
}

fn fmt_monomial(f: &mut fmt::Formatter<'_>, coeff: &BigRational, e: &Exponents) -> fmt::Result {
    let mut factors = Vec::new();
    for (name, exp) in [("P", e.p), ("S", e.s), ("T", e.t)] {
        match exp {
            0 => {}
            1 => factors.push(name.to_string()),
            _ => factors.push(format!("{name}^{exp}")),
        }
    }
    let abs = coeff.abs();
    if factors.is_empty() {
        write!(f, "{abs}")
    } else if abs.is_one() {
        write!(f, "{}", factors.join("*"))
    } else {
        write!(f, "{abs}*{}", factors.join("*"))
    }
}

impl fmt::Display for LaurentPoly {
    /// Renders e.g. `1 - S^2` or `-P*S*T^2`. Terms follow exponent order.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (e, c)) in self.terms.iter().enumerate() {
            let negative = c.is_negative();
            match (i, negative) {
                (0, true) => write!(f, "-")?,
                (0, false) => {}
                (_, true) => write!(f, " - ")?,
                (_, false) => write!(f, " + ")?,
            }
            fmt_monomial(f, c, e)?;
        }
        Ok(())
    }
}
