//! Divisibility decompositions of traces of powers.
//!
//! For integral `w` and square-free `L`,
//!
//! ```text
//! tr(w^L)  = Phi_L(w)  * Psi_L(w)      (L odd)
//! ttr(w^L) = tPhi_L(w) * tPsi_L(w)     (any square-free L)
//! ```
//!
//! where `Phi_L = prod_{l | L} tr(w^(L/l))^mu(l)` and `Psi_L` is the
//! complementary product over `l > 1`; the twisted versions use the twisted
//! trace `ttr(x) = tr(sqrt(D) x)`. `Phi` is computed as an exact quotient of
//! two big-integer products, and a nonzero remainder is reported as an
//! error rather than rounded away.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::numtheory;
use crate::par::{self, Execution};
use crate::qfield::{LogExpr, Precision, QuadElem};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceFactorization {
    pub omega: QuadElem,
    pub l: u64,
    /// `tr(w^L)`, or `ttr(w^L)` when twisted.
    pub total: BigInt,
    pub phi_part: BigInt,
    pub psi_part: BigInt,
    pub twisted: bool,
}

fn require_integral(omega: &QuadElem) -> Result<()> {
    if omega.integral() {
        Ok(())
    } else {
        Err(Error::NotIntegral(omega.to_string()))
    }
}

/// `tr(w^k)` for integral `w`.
pub fn trace_power(omega: &QuadElem, k: u64) -> Result<BigInt> {
    require_integral(omega)?;
    Ok(omega
        .pow_int(k)
        .trace_int()
        .expect("trace of an algebraic integer is an integer"))
}

/// `ttr(w^k)` for integral `w`.
pub fn twisted_trace_power(omega: &QuadElem, k: u64) -> Result<BigInt> {
    require_integral(omega)?;
    Ok(omega
        .pow_int(k)
        .twisted_trace_int()
        .expect("twisted trace of an algebraic integer is an integer"))
}

/// `n / d`, failing unless the division is exact.
pub fn exact_div(n: &BigInt, d: &BigInt) -> Result<BigInt> {
    if d.is_zero() {
        return Err(Error::DivisionByZero);
    }
    let (q, r) = n.div_rem(d);
    if !r.is_zero() {
        return Err(Error::NonExactDivision(format!(
            "{}-bit value by {}-bit divisor",
            n.bits(),
            d.bits()
        )));
    }
    Ok(q)
}

/// Balanced product, keeping operand sizes similar.
fn product(mut xs: Vec<BigInt>) -> BigInt {
    if xs.is_empty() {
        return BigInt::one();
    }
    while xs.len() > 1 {
        xs.sort_by_key(|x| std::cmp::Reverse(x.bits()));
        let a = xs.pop().unwrap();
        let b = xs.pop().unwrap();
        xs.push(a * b);
    }
    xs.pop().unwrap()
}

/// Split `tr(w^L)` (or `ttr(w^L)`) into `Phi_L(w) * Psi_L(w)`.
pub fn phi_psi(omega: &QuadElem, l: u64, twisted: bool) -> Result<TraceFactorization> {
    phi_psi_with(omega, l, twisted, Execution::default())
}

pub fn phi_psi_with(omega: &QuadElem, l: u64, twisted: bool, exec: Execution) -> Result<TraceFactorization> {
    require_integral(omega)?;
    if l == 0 || !numtheory::is_square_free(l) {
        return Err(Error::Precondition(format!("L = {l} must be a positive square-free integer")));
    }
    if twisted {
        if omega.is_rational() {
            return Err(Error::Precondition("twisted factorization needs an irrational omega".into()));
        }
    } else {
        if l.is_multiple_of(2) {
            return Err(Error::Precondition(format!("untwisted factorization needs odd L, got {l}")));
        }
        if omega.trace().is_zero() {
            return Err(Error::Precondition("untwisted factorization needs tr(omega) != 0".into()));
        }
    }
    let primes: Vec<u64> = numtheory::factorize(l).into_iter().map(|(p, _)| p).collect();
    let divisors = numtheory::square_free_divisors(&primes);
    let values = par::map(exec, &divisors, |&(ell, _)| {
        let x = omega.pow_int(l / ell);
        if twisted {
            x.twisted_trace_int()
        } else {
            x.trace_int()
        }
        .expect("integral element")
    });
    let mut numer = Vec::new();
    let mut denom = Vec::new();
    for (&(ell, mu), t) in divisors.iter().zip(&values) {
        if t.is_zero() {
            return Err(Error::ZeroTrace(ell));
        }
        if mu > 0 {
            numer.push(t.clone());
        } else {
            denom.push(t.clone());
        }
    }
    let total = values[0].clone();
    let (num, den) = par::join(exec, || product(numer), || product(denom));
    let phi_part = exact_div(&num, &den)?;
    let psi_part = exact_div(&total, &phi_part)?;
    Ok(TraceFactorization {
        omega: omega.clone(),
        l,
        total,
        phi_part,
        psi_part,
        twisted,
    })
}

/// One `|X| / (sqrt(D)^s |w|^e)` ratio checked against `[e^-2, e^2]`.
#[derive(Clone, Debug, Serialize)]
pub struct MagnitudeEntry {
    pub name: &'static str,
    /// Exponent `e` of `|w|`.
    pub omega_exponent: u64,
    /// Whether a `sqrt(D)` factor is divided out.
    pub sqrt_d: bool,
    /// Natural log of the ratio, midpoint of the certified enclosure.
    pub ln_ratio: f64,
    pub ratio: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct MagnitudeReport {
    pub l: u64,
    pub twisted: bool,
    pub phi_l: u64,
    /// `log2 |conj(w) / w|`.
    pub conj_ratio_log2: f64,
    pub entries: Vec<MagnitudeEntry>,
    pub precision_bits: u64,
}

impl MagnitudeReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }
}

/// Whether `|conj(w)/w| <= 1/2`, decided exactly.
pub fn conjugate_ratio_ok(omega: &QuadElem) -> Result<bool> {
    let half = omega.scale(&BigRational::new(1.into(), 2.into()));
    Ok(omega.conjugate().cmp_abs_exact(&half)? != Ordering::Greater)
}

/// Certify `e^-2 <= |X| / (sqrt(D)^s |w|^e) <= e^2` for the total and both
/// factors, deciding each with interval arithmetic in log space.
pub fn magnitude_bounds(fact: &TraceFactorization, policy: &Precision) -> Result<MagnitudeReport> {
    let omega = &fact.omega;
    if !conjugate_ratio_ok(omega)? {
        return Err(Error::Precondition("magnitude bounds need |conj(w)/w| <= 1/2".into()));
    }
    if fact.twisted && fact.l == 1 {
        return Err(Error::Precondition("twisted magnitude bounds need L > 1".into()));
    }
    let l = fact.l;
    let phi = numtheory::euler_phi(l);
    let specs: [(&'static str, &BigInt, u64, bool); 3] = [
        ("total", &fact.total, l, fact.twisted),
        ("phi", &fact.phi_part, phi, false),
        ("psi", &fact.psi_part, l - phi, fact.twisted),
    ];
    let two = BigRational::from_integer(2.into());
    let mut entries = Vec::with_capacity(3);
    let mut bits_used = policy.start_bits;
    for (name, value, e, sqrt_d) in specs {
        let mut expr = LogExpr::new()
            .int_pow(value.clone(), BigRational::one())
            .elem_pow(omega, BigRational::from_integer((-(e as i64)).into()));
        if sqrt_d {
            expr = expr.int_pow(omega.d().clone(), BigRational::new((-1).into(), 2.into()));
        }
        let (passed, iv) = decide_within(&expr, &two, policy, &mut bits_used)?;
        let ln_ratio = iv.mid_f64();
        entries.push(MagnitudeEntry {
            name,
            omega_exponent: e,
            sqrt_d,
            ln_ratio,
            ratio: ln_ratio.exp(),
            passed,
        });
    }
    let conj_ratio_log2 = LogExpr::of(&omega.conjugate())
        .times(&LogExpr::of(omega).recip())
        .log2_estimate();
    Ok(MagnitudeReport {
        l,
        twisted: fact.twisted,
        phi_l: phi,
        conj_ratio_log2,
        entries,
        precision_bits: bits_used,
    })
}

/// Decide whether the log of `expr` lies in `[-bound, bound]`.
pub(crate) fn decide_within(
    expr: &LogExpr,
    bound: &BigRational,
    policy: &Precision,
    bits_used: &mut u64,
) -> Result<(bool, Interval)> {
    let neg = -bound.clone();
    policy.decide(|bits| {
        let iv = expr.ln_interval(bits)?;
        *bits_used = (*bits_used).max(bits);
        if iv.ge_rational(&neg) && iv.le_rational(bound) {
            Ok(Some((true, iv)))
        } else if !iv.ge_rational(&neg) && iv.le_rational(&neg) || iv.ge_rational(bound) && !iv.le_rational(bound) {
            Ok(Some((false, iv)))
        } else {
            Ok(None)
        }
    })
}
