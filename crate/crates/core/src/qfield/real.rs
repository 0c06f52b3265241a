//! Real-valued evaluation of field elements and adaptive-precision
//! magnitude comparisons in log space.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use super::QuadElem;
use crate::error::{Error, Result};
use crate::interval::Interval;

/// Precision schedule for adaptive decisions: start at `start_bits`, double
/// until the decision separates, give up beyond `cap_bits`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Precision {
    pub start_bits: u64,
    pub cap_bits: u64,
}

impl Default for Precision {
    fn default() -> Self {
        Precision {
            start_bits: 128,
            cap_bits: 1 << 20,
        }
    }
}

impl Precision {
    pub fn with_start(start_bits: u64) -> Self {
        Precision {
            start_bits,
            ..Precision::default()
        }
    }

    /// Run `step` at increasing precision until it returns `Some`.
    pub fn decide<T>(&self, mut step: impl FnMut(u64) -> Result<Option<T>>) -> Result<T> {
        let mut bits = self.start_bits.max(32);
        loop {
            if let Some(v) = step(bits)? {
                return Ok(v);
            }
            if bits >= self.cap_bits {
                return Err(Error::Undecidable {
                    cap_bits: self.cap_bits,
                });
            }
            bits = (bits * 2).min(self.cap_bits);
        }
    }
}

/// Enclosure of the real value `u + v*sqrt(D)` with relative width about
/// `2^-prec`.
///
/// When the rational and surd parts have opposite signs the value is
/// computed as `N(x) / conj(x)`, which involves no cancellation, so the
/// relative precision holds even for elements that are tiny compared to
/// their coordinates.
pub fn eval_interval(x: &QuadElem, prec: u64) -> Interval {
    let (a, b, c) = x.numer_parts();
    if b.is_zero() {
        return Interval::from_ratio(a, c, prec);
    }
    let p = prec + 8;
    let d = x.d();
    let sqrt_d = Interval::from_int(d, p + 4).sqrt(p + 4).expect("D > 0");
    let surd = Interval::from_int(b, p).mul(&sqrt_d, p);
    let numer = if a.is_zero() || a.sign() == b.sign() {
        Interval::from_int(a, p).add(&surd, p)
    } else {
        let n = a * a - b * b * d;
        let conj = Interval::from_int(a, p).sub(&surd, p);
        Interval::from_int(&n, p)
            .div(&conj, p)
            .expect("conjugate of a nonzero element is nonzero")
    };
    numer.div_int(c, prec + 2)
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum LogBase {
    Elem(QuadElem),
    Rational(BigRational),
}

/// A product of powers `e^c * prod |base_i|^(e_i)` with rational exponents,
/// evaluated through its natural logarithm `c + sum e_i ln|base_i|`.
///
/// Astronomically large powers such as `|zeta|^N` for `N` in the millions
/// stay small in this form.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LogExpr {
    terms: Vec<(LogBase, BigRational)>,
    constant: BigRational,
}

impl LogExpr {
    pub fn new() -> Self {
        LogExpr::default()
    }

    /// `|x|`.
    pub fn of(x: &QuadElem) -> Self {
        LogExpr::new().elem_pow(x, BigRational::from_integer(1.into()))
    }

    /// Multiply by `|x|^e`.
    pub fn elem_pow(mut self, x: &QuadElem, e: BigRational) -> Self {
        if !e.is_zero() {
            match x.as_rational() {
                Some(r) => self.terms.push((LogBase::Rational(r), e)),
                None => self.terms.push((LogBase::Elem(x.clone()), e)),
            }
        }
        self
    }

    /// Multiply by `|r|^e`.
    pub fn rational_pow(mut self, r: BigRational, e: BigRational) -> Self {
        if !e.is_zero() {
            self.terms.push((LogBase::Rational(r), e));
        }
        self
    }

    pub fn int_pow(self, k: impl Into<BigInt>, e: BigRational) -> Self {
        self.rational_pow(BigRational::from_integer(k.into()), e)
    }

    /// Multiply by `e^c`.
    pub fn exp_const(mut self, c: BigRational) -> Self {
        self.constant += c;
        self
    }

    /// Multiply by another expression.
    pub fn times(mut self, other: &LogExpr) -> Self {
        self.terms.extend(other.terms.iter().cloned());
        self.constant += &other.constant;
        self
    }

    /// Raise the whole expression to the power `e`.
    pub fn powr(mut self, e: &BigRational) -> Self {
        for t in &mut self.terms {
            t.1 = &t.1 * e;
        }
        self.constant = &self.constant * e;
        self
    }

    pub fn recip(self) -> Self {
        self.powr(&BigRational::from_integer((-1).into()))
    }

    fn as_single_elem(&self) -> Option<&QuadElem> {
        if !self.constant.is_zero() || self.terms.len() != 1 {
            return None;
        }
        match &self.terms[0] {
            (LogBase::Elem(x), e) if e.is_integer() && e.numer() == &BigInt::from(1) => Some(x),
            _ => None,
        }
    }

    /// Enclosure of the natural log of the expression, with absolute error
    /// around `2^-prec`.
    pub fn ln_interval(&self, prec: u64) -> Result<Interval> {
        let mut acc = Interval::from_rational(&self.constant, prec + 8);
        for (base, e) in &self.terms {
            let guard = e.numer().bits() + 8;
            let p = prec + guard;
            let iv = match base {
                LogBase::Elem(x) => {
                    if x.is_zero() {
                        return Err(Error::LogOfZero);
                    }
                    eval_interval(x, p)
                }
                LogBase::Rational(r) => {
                    if r.is_zero() {
                        return Err(Error::LogOfZero);
                    }
                    Interval::from_rational(&r.abs(), p)
                }
            };
            let iv = if iv.hi_mantissa().is_negative() { iv.neg() } else { iv };
            let ln = iv.ln(p).ok_or(Error::LogOfZero)?;
            acc = acc.add(&ln.mul_rational(e, p + guard), p + guard);
        }
        Ok(acc)
    }

    /// Approximate `log2` of the expression.
    pub fn log2_estimate(&self) -> f64 {
        self.ln_interval(64)
            .map(|iv| iv.mid_f64() / std::f64::consts::LN_2)
            .unwrap_or(f64::NEG_INFINITY)
    }

    /// Compare the natural log of the expression with a rational bound.
    pub fn cmp_ln(&self, bound: &BigRational, policy: &Precision) -> Result<Ordering> {
        policy.decide(|bits| {
            let iv = self.ln_interval(bits)?;
            let b = Interval::from_rational(bound, bits + 8);
            Ok(iv.certain_cmp(&b).filter(|o| *o != Ordering::Equal))
        })
    }
}

/// Decide `|x|` versus `|y|` for two magnitude expressions.
///
/// Single field elements are compared exactly (and may compare equal);
/// everything else is decided in log space with doubling precision, and an
/// [`Error::Undecidable`] at the cap signals a possible exact equality.
pub fn compare_abs(x: &LogExpr, y: &LogExpr, policy: &Precision) -> Result<Ordering> {
    if let (Some(a), Some(b)) = (x.as_single_elem(), y.as_single_elem()) {
        return a.cmp_abs_exact(b);
    }
    policy.decide(|bits| {
        let lx = x.ln_interval(bits)?;
        let ly = y.ln_interval(bits)?;
        Ok(lx.certain_cmp(&ly).filter(|o| *o != Ordering::Equal))
    })
}
