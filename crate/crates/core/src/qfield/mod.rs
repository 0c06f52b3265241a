//! Exact arithmetic in real quadratic fields `K = Q(sqrt(D))`.
//!
//! Elements are stored as `(a + b*sqrt(D)) / c` with integers `a`, `b` and a
//! positive `c`, reduced so that `gcd(a, b, c) = 1`. The representation is
//! canonical, so structural equality is field equality. Rational
//! coordinates `u = a/c`, `v = b/c` are available through [`QuadElem::u`]
//! and [`QuadElem::v`].
//!
//! The real embedding is fixed with `sqrt(D) > 0`; [`QuadElem::conjugate`]
//! is the other embedding.

mod real;
mod text;

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::numtheory;

pub use real::{compare_abs, eval_interval, LogExpr, Precision};

/// The field `Q(sqrt(D))` for a square-free `D >= 2`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct FieldDesc {
    d: BigInt,
}

impl FieldDesc {
    pub fn new(d: impl Into<BigInt>) -> Result<Self> {
        let d = d.into();
        if d < BigInt::from(2) {
            return Err(Error::InvalidDiscriminant(d.to_string(), "D must be at least 2"));
        }
        let small = d.to_u64().ok_or_else(|| {
            Error::InvalidDiscriminant(d.to_string(), "D too large for square-free check")
        })?;
        if !numtheory::is_square_free(small) {
            return Err(Error::InvalidDiscriminant(d.to_string(), "D must be square-free"));
        }
        Ok(FieldDesc { d })
    }

    pub fn d(&self) -> &BigInt {
        &self.d
    }

    /// `D mod 4 == 1`, i.e. half-integral coordinates occur in the ring of integers.
    pub fn has_half_integers(&self) -> bool {
        self.d.mod_floor(&BigInt::from(4)) == BigInt::one()
    }

    fn check_same(&self, other: &FieldDesc) -> Result<()> {
        if self.d != other.d {
            return Err(Error::FieldMismatch(format!("an element of Q(sqrt({}))", other.d), self.d.to_string()));
        }
        Ok(())
    }
}

impl fmt::Display for FieldDesc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q(sqrt({}))", self.d)
    }
}

/// An element `(a + b*sqrt(D)) / c` of a real quadratic field.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct QuadElem {
    field: FieldDesc,
    a: BigInt,
    b: BigInt,
    c: BigInt,
}

/// Result of an integrality test, carrying the trace and norm that decide it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IntegralityWitness {
    pub elem: QuadElem,
    pub is_integral: bool,
    pub trace: BigRational,
    pub norm: BigRational,
}

/// gcd where `small` is expected to be much shorter than `big`; reduces
/// `big` modulo `small` first so huge operands are only touched once.
fn gcd_with_small(small: &BigInt, big: &BigInt) -> BigInt {
    if small.is_zero() {
        return big.abs();
    }
    if small.is_one() {
        return BigInt::one();
    }
    let r = big.mod_floor(&small.abs());
    small.abs().gcd(&r)
}

/// Build a reduced rational from a possibly huge numerator and a small
/// denominator without running gcd on the large operand.
pub(crate) fn ratio(num: BigInt, den: BigInt) -> BigRational {
    assert!(!den.is_zero(), "zero denominator");
    let (num, den) = if den.is_negative() { (-num, -den) } else { (num, den) };
    let g = gcd_with_small(&den, &num);
    if g.is_one() {
        BigRational::new_raw(num, den)
    } else {
        BigRational::new_raw(num / &g, den / &g)
    }
}

impl QuadElem {
    /// `(a + b*sqrt(D)) / c`; `c` must be nonzero.
    pub fn from_parts(field: &FieldDesc, a: BigInt, b: BigInt, c: BigInt) -> Result<Self> {
        if c.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(QuadElem::normalized(field.clone(), a, b, c))
    }

    /// `u + v*sqrt(D)` from rational coordinates.
    pub fn new(field: &FieldDesc, u: BigRational, v: BigRational) -> Self {
        let c = u.denom().lcm(v.denom());
        let a = u.numer() * (&c / u.denom());
        let b = v.numer() * (&c / v.denom());
        QuadElem::normalized(field.clone(), a, b, c)
    }

    pub fn from_int(field: &FieldDesc, x: impl Into<BigInt>) -> Self {
        QuadElem {
            field: field.clone(),
            a: x.into(),
            b: BigInt::zero(),
            c: BigInt::one(),
        }
    }

    pub fn rational(field: &FieldDesc, r: &BigRational) -> Self {
        QuadElem::normalized(field.clone(), r.numer().clone(), BigInt::zero(), r.denom().clone())
    }

    pub fn zero(field: &FieldDesc) -> Self {
        QuadElem::from_int(field, 0)
    }

    pub fn one(field: &FieldDesc) -> Self {
        QuadElem::from_int(field, 1)
    }

    /// `sqrt(D)` itself.
    pub fn sqrt_d(field: &FieldDesc) -> Self {
        QuadElem {
            field: field.clone(),
            a: BigInt::zero(),
            b: BigInt::one(),
            c: BigInt::one(),
        }
    }

    fn normalized(field: FieldDesc, mut a: BigInt, mut b: BigInt, mut c: BigInt) -> Self {
        if c.is_negative() {
            a = -a;
            b = -b;
            c = -c;
        }
        if a.is_zero() && b.is_zero() {
            return QuadElem {
                field,
                a,
                b,
                c: BigInt::one(),
            };
        }
        if !c.is_one() {
            let mut g = gcd_with_small(&c, &a);
            if !g.is_one() {
                g = gcd_with_small(&g, &b);
            }
            if !g.is_one() {
                a /= &g;
                b /= &g;
                c /= &g;
            }
        }
        QuadElem { field, a, b, c }
    }

    pub fn field(&self) -> &FieldDesc {
        &self.field
    }

    pub fn d(&self) -> &BigInt {
        &self.field.d
    }

    /// Integer parts of the representation `(a + b*sqrt(D)) / c`.
    pub fn numer_parts(&self) -> (&BigInt, &BigInt, &BigInt) {
        (&self.a, &self.b, &self.c)
    }

    /// Rational coordinate `u` of `u + v*sqrt(D)`.
    pub fn u(&self) -> BigRational {
        ratio(self.a.clone(), self.c.clone())
    }

    /// Rational coordinate `v` of `u + v*sqrt(D)`.
    pub fn v(&self) -> BigRational {
        ratio(self.b.clone(), self.c.clone())
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        self.is_rational().then(|| self.u())
    }

    pub fn conjugate(&self) -> Self {
        QuadElem {
            field: self.field.clone(),
            a: self.a.clone(),
            b: -&self.b,
            c: self.c.clone(),
        }
    }

    /// `N(x) = x * conj(x) = u^2 - D v^2`.
    pub fn norm(&self) -> BigRational {
        let num = &self.a * &self.a - &self.b * &self.b * &self.field.d;
        ratio(num, &self.c * &self.c)
    }

    /// `tr(x) = x + conj(x) = 2u`.
    pub fn trace(&self) -> BigRational {
        ratio(&self.a << 1u32, self.c.clone())
    }

    /// `(x - conj(x)) * sqrt(D) = 2vD`, the trace of `sqrt(D) * x`.
    pub fn twisted_trace(&self) -> BigRational {
        ratio((&self.b * &self.field.d) << 1u32, self.c.clone())
    }

    /// Multiply by `sqrt(D)`: `(u, v) -> (vD, u)`.
    pub fn sqrt_d_mul(&self) -> Self {
        QuadElem::normalized(
            self.field.clone(),
            &self.b * &self.field.d,
            self.a.clone(),
            self.c.clone(),
        )
    }

    /// The trace as an integer, if it is one.
    pub fn trace_int(&self) -> Option<BigInt> {
        exact_quotient(&(&self.a << 1u32), &self.c)
    }

    /// The twisted trace as an integer, if it is one.
    pub fn twisted_trace_int(&self) -> Option<BigInt> {
        exact_quotient(&((&self.b * &self.field.d) << 1u32), &self.c)
    }

    pub fn is_integral(&self) -> IntegralityWitness {
        let trace = self.trace();
        let norm = self.norm();
        IntegralityWitness {
            elem: self.clone(),
            is_integral: trace.is_integer() && norm.is_integer(),
            trace,
            norm,
        }
    }

    /// Fast integrality test without building the witness.
    pub fn integral(&self) -> bool {
        if self.c.is_one() {
            return true;
        }
        let c2 = &self.c * &self.c;
        (&self.a << 1u32).is_multiple_of(&self.c)
            && (&self.a * &self.a - &self.b * &self.b * &self.field.d).is_multiple_of(&c2)
    }

    /// Smallest positive integer `A` with `A * x` integral, together with `A * x`.
    pub fn clear_denominator(&self) -> (BigInt, QuadElem) {
        // {A : A x integral} is an ideal of Z containing c; strip primes of c.
        let mut a_den = self.c.clone();
        let small = self.c.to_u64();
        if let Some(c) = small {
            for (p, _) in numtheory::factorize(c) {
                let p = BigInt::from(p);
                while a_den.is_multiple_of(&p) {
                    let cand = &a_den / &p;
                    if self.scale_int(&cand).integral() {
                        a_den = cand;
                    } else {
                        break;
                    }
                }
            }
        } else if self.c.is_even() && self.scale_int(&(&self.c >> 1u32)).integral() {
            // Denominators beyond trial-division range: only the factor 2 of
            // the half-integral case is stripped.
            a_den = &self.c >> 1u32;
        }
        let y = self.scale_int(&a_den);
        (a_den, y)
    }

    pub fn scale_int(&self, k: &BigInt) -> Self {
        QuadElem::normalized(self.field.clone(), &self.a * k, &self.b * k, self.c.clone())
    }

    pub fn scale(&self, r: &BigRational) -> Self {
        QuadElem::normalized(
            self.field.clone(),
            &self.a * r.numer(),
            &self.b * r.numer(),
            &self.c * r.denom(),
        )
    }

    pub fn neg(&self) -> Self {
        QuadElem {
            field: self.field.clone(),
            a: -&self.a,
            b: -&self.b,
            c: self.c.clone(),
        }
    }

    pub fn try_add(&self, other: &QuadElem) -> Result<Self> {
        self.field.check_same(&other.field)?;
        if self.c == other.c {
            return Ok(QuadElem::normalized(
                self.field.clone(),
                &self.a + &other.a,
                &self.b + &other.b,
                self.c.clone(),
            ));
        }
        Ok(QuadElem::normalized(
            self.field.clone(),
            &self.a * &other.c + &other.a * &self.c,
            &self.b * &other.c + &other.b * &self.c,
            &self.c * &other.c,
        ))
    }

    pub fn try_sub(&self, other: &QuadElem) -> Result<Self> {
        self.try_add(&other.neg())
    }

    pub fn try_mul(&self, other: &QuadElem) -> Result<Self> {
        self.field.check_same(&other.field)?;
        let (a, b) = mul_pairs(&self.a, &self.b, &other.a, &other.b, &self.field.d);
        Ok(QuadElem::normalized(self.field.clone(), a, b, &self.c * &other.c))
    }

    /// `x / y = x * conj(y) / N(y)`.
    pub fn try_div(&self, other: &QuadElem) -> Result<Self> {
        self.field.check_same(&other.field)?;
        if other.is_zero() {
            return Err(Error::DivisionByZero);
        }
        let (a, b) = mul_pairs(&self.a, &self.b, &other.a, &(-&other.b), &self.field.d);
        let n = &other.a * &other.a - &other.b * &other.b * &self.field.d;
        // x/y = (a + b sqrt D) * c_y / (c_x * n)
        Ok(QuadElem::normalized(
            self.field.clone(),
            a * &other.c,
            b * &other.c,
            &self.c * n,
        ))
    }

    /// `x^k` by binary exponentiation on the integer numerator pair; the
    /// denominator `c^k` is applied once at the end.
    pub fn pow_int(&self, k: impl Into<BigUint>) -> Self {
        let k: BigUint = k.into();
        let d = &self.field.d;
        let (mut ra, mut rb) = (BigInt::one(), BigInt::zero());
        let nbits = k.bits();
        for i in (0..nbits).rev() {
            let (sa, sb) = square_pair(&ra, &rb, d);
            ra = sa;
            rb = sb;
            if k.bit(i) {
                let (ma, mb) = mul_pairs(&ra, &rb, &self.a, &self.b, d);
                ra = ma;
                rb = mb;
            }
        }
        if self.c.is_one() {
            return QuadElem {
                field: self.field.clone(),
                a: ra,
                b: rb,
                c: BigInt::one(),
            };
        }
        // Power-of-two denominators (the half-integral case) reduce by shifting.
        if self.c.magnitude().count_ones() == 1 {
            let c_tz = self.c.trailing_zeros().unwrap_or(0);
            let total = c_tz * k.to_u64().unwrap_or(u64::MAX);
            let tz = [ra.trailing_zeros(), rb.trailing_zeros()]
                .into_iter()
                .flatten()
                .min()
                .unwrap_or(0)
                .min(total);
            let rest = total - tz;
            return QuadElem {
                field: self.field.clone(),
                a: ra >> tz,
                b: rb >> tz,
                c: BigInt::one() << rest,
            };
        }
        let c = num_traits::pow::Pow::pow(&self.c, &k);
        QuadElem::normalized(self.field.clone(), ra, rb, c)
    }

    /// Exact sign of the real value `u + v*sqrt(D)`.
    pub fn signum(&self) -> Ordering {
        sign_of_surd(&self.a, &self.b, &self.field.d)
    }

    pub fn is_positive(&self) -> bool {
        self.signum() == Ordering::Greater
    }

    pub fn abs(&self) -> Self {
        if self.signum() == Ordering::Less {
            self.neg()
        } else {
            self.clone()
        }
    }

    /// Exact comparison of `|self|` with `|other|`.
    pub fn cmp_abs_exact(&self, other: &QuadElem) -> Result<Ordering> {
        let diff = self.abs().try_sub(&other.abs())?;
        Ok(diff.signum())
    }

    /// Exact comparison of the real values.
    pub fn cmp_value(&self, other: &QuadElem) -> Result<Ordering> {
        Ok(self.try_sub(other)?.signum())
    }
}

fn exact_quotient(n: &BigInt, c: &BigInt) -> Option<BigInt> {
    if c.is_one() {
        return Some(n.clone());
    }
    let (q, r) = n.div_rem(c);
    r.is_zero().then_some(q)
}

/// `(a1 + b1 s)(a2 + b2 s)` with `s^2 = d`, using three multiplications.
pub(crate) fn mul_pairs(a1: &BigInt, b1: &BigInt, a2: &BigInt, b2: &BigInt, d: &BigInt) -> (BigInt, BigInt) {
    let aa = a1 * a2;
    let bb = b1 * b2;
    let cross = (a1 + b1) * (a2 + b2) - &aa - &bb;
    (aa + bb * d, cross)
}

pub(crate) fn square_pair(a: &BigInt, b: &BigInt, d: &BigInt) -> (BigInt, BigInt) {
    let aa = a * a;
    let bb = b * b;
    let ab = (a * b) << 1u32;
    (aa + bb * d, ab)
}

/// Sign of `a + b*sqrt(d)` for integers `a`, `b` and non-square `d > 0`.
pub(crate) fn sign_of_surd(a: &BigInt, b: &BigInt, d: &BigInt) -> Ordering {
    let sa = a.sign();
    let sb = b.sign();
    let to_ord = |s: Sign| match s {
        Sign::Minus => Ordering::Less,
        Sign::NoSign => Ordering::Equal,
        Sign::Plus => Ordering::Greater,
    };
    if sb == Sign::NoSign {
        return to_ord(sa);
    }
    if sa == Sign::NoSign || sa == sb {
        return to_ord(sb);
    }
    // Opposite signs: the larger of a^2 and D b^2 wins.
    let a2 = a * a;
    let b2d = b * b * d;
    match a2.cmp(&b2d) {
        Ordering::Greater => to_ord(sa),
        Ordering::Less => to_ord(sb),
        Ordering::Equal => Ordering::Equal,
    }
}

impl fmt::Display for QuadElem {
    /// Canonical form `a/d + b/d*sqrt(D)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{} + {}/{}*sqrt({})", self.a, self.c, self.b, self.c, self.field.d)
    }
}

macro_rules! forward_binop {
    ($tr:ident, $method:ident, $call:ident) => {
        impl<'a> std::ops::$tr<&'a QuadElem> for &'a QuadElem {
            type Output = QuadElem;
            /// Panics if the operands live in different fields.
            fn $method(self, rhs: &'a QuadElem) -> QuadElem {
                self.$call(rhs).expect("quadratic field operation")
            }
        }
    };
}

forward_binop!(Add, add, try_add);
forward_binop!(Sub, sub, try_sub);
forward_binop!(Mul, mul, try_mul);
forward_binop!(Div, div, try_div);

impl std::ops::Neg for &QuadElem {
    type Output = QuadElem;
    fn neg(self) -> QuadElem {
        QuadElem::neg(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(d: i64) -> FieldDesc {
        FieldDesc::new(d).unwrap()
    }

    fn q(field: &FieldDesc, a: i64, b: i64, c: i64) -> QuadElem {
        QuadElem::from_parts(field, a.into(), b.into(), c.into()).unwrap()
    }

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn field_rejects_bad_discriminants() {
        assert!(FieldDesc::new(1).is_err());
        assert!(FieldDesc::new(4).is_err());
        assert!(FieldDesc::new(12).is_err());
        assert!(FieldDesc::new(2).is_ok());
        assert!(FieldDesc::new(13).is_ok());
    }

    #[test]
    fn arithmetic_examples() {
        let k = f(2);
        let z = q(&k, 3, 2, 1);
        assert_eq!(&z * &z.conjugate(), QuadElem::one(&k));
        let s = q(&k, 1, 1, 1);
        assert_eq!(&s * &s, q(&k, 3, 2, 1));
        let k5 = f(5);
        let phi = q(&k5, 1, 1, 2);
        assert_eq!(&phi + &phi.conjugate(), QuadElem::one(&k5));
        assert_eq!(&z / &z, QuadElem::one(&k));
        assert_eq!(&QuadElem::one(&k) / &z, z.conjugate());
    }

    #[test]
    fn mismatched_fields_error() {
        let a = q(&f(2), 1, 1, 1);
        let b = q(&f(3), 1, 1, 1);
        assert!(matches!(a.try_add(&b), Err(Error::FieldMismatch(..))));
        assert!(matches!(a.try_div(&QuadElem::zero(&f(2))), Err(Error::DivisionByZero)));
    }

    #[test]
    fn norm_trace_twisted() {
        let k = f(2);
        let z = q(&k, 3, 2, 1);
        assert_eq!(z.norm(), r(1, 1));
        assert_eq!(z.trace(), r(6, 1));
        assert_eq!(QuadElem::sqrt_d(&k).norm(), r(-2, 1));
        assert_eq!(z.twisted_trace(), r(8, 1));
        assert_eq!(z.sqrt_d_mul(), q(&k, 4, 3, 1));
        assert_eq!(z.sqrt_d_mul().trace(), r(8, 1));
        assert_eq!(q(&k, 17, 12, 1).twisted_trace(), r(48, 1));
        assert_eq!(QuadElem::from_int(&k, 7).twisted_trace(), r(0, 1));
    }

    #[test]
    fn powers() {
        let k = f(2);
        let z = q(&k, 3, 2, 1);
        assert_eq!(z.pow_int(2u32), q(&k, 17, 12, 1));
        assert_eq!(z.pow_int(3u32), q(&k, 99, 70, 1));
        assert_eq!(z.pow_int(0u32), QuadElem::one(&k));
        let k5 = f(5);
        let phi = q(&k5, 1, 1, 2);
        // phi^2 = (3 + sqrt5)/2, phi^5 = (11 + 5 sqrt5)/2
        assert_eq!(phi.pow_int(2u32), q(&k5, 3, 1, 2));
        assert_eq!(phi.pow_int(5u32), q(&k5, 11, 5, 2));
        let third = q(&k, 1, 1, 3);
        assert_eq!(third.pow_int(2u32), q(&k, 3, 2, 9));
    }

    #[test]
    fn integrality() {
        let k5 = f(5);
        let w = q(&k5, 1, 1, 2).is_integral();
        assert!(w.is_integral);
        assert_eq!(w.trace, r(1, 1));
        assert_eq!(w.norm, r(-1, 1));
        let k2 = f(2);
        let w = q(&k2, 1, 1, 2).is_integral();
        assert!(!w.is_integral);
        assert_eq!(w.norm, r(-1, 4));
        assert!(QuadElem::from_int(&k2, 5).is_integral().is_integral);
    }

    #[test]
    fn clear_denominator_examples() {
        let k2 = f(2);
        let (a, y) = q(&k2, 0, 1, 3).clear_denominator();
        assert_eq!(a, BigInt::from(3));
        assert_eq!(y, QuadElem::sqrt_d(&k2));
        let k5 = f(5);
        let (a, y) = q(&k5, 1, 1, 2).clear_denominator();
        assert_eq!(a, BigInt::one());
        assert_eq!(y, q(&k5, 1, 1, 2));
        let k3 = f(3);
        let (a, y) = q(&k3, 7, 0, 2).clear_denominator();
        assert_eq!(a, BigInt::from(2));
        assert_eq!(y, QuadElem::from_int(&k3, 7));
        // (1 + sqrt5)/6 needs only 3 since (1 + sqrt5)/2 is integral
        let (a, _) = q(&k5, 1, 1, 6).clear_denominator();
        assert_eq!(a, BigInt::from(3));
    }

    #[test]
    fn exact_sign() {
        let k = f(2);
        assert_eq!(q(&k, 3, -2, 1).signum(), Ordering::Greater);
        assert_eq!(q(&k, -3, 2, 1).signum(), Ordering::Less);
        assert_eq!(q(&k, 1, -1, 1).signum(), Ordering::Less);
        assert_eq!(QuadElem::zero(&k).signum(), Ordering::Equal);
        assert_eq!(q(&k, 3, 2, 1).cmp_abs_exact(&q(&k, -6, 0, 1)).unwrap(), Ordering::Less);
    }
}
