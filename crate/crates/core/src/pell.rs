//! Continued fraction of `sqrt(D)` and fundamental solutions of
//! `x^2 - D y^2 = +-1`, giving the unit `zeta` used by the constructions.

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::qfield::{FieldDesc, QuadElem};

/// `sqrt(D) = [a0; period, period, ...]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CfExpansion {
    #[serde(serialize_with = "crate::json::ser_display")]
    pub d: BigInt,
    #[serde(serialize_with = "crate::json::ser_display")]
    pub a0: BigInt,
    #[serde(serialize_with = "crate::json::ser_display_vec")]
    pub period: Vec<BigInt>,
}

/// Norm of the requested unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum UnitNorm {
    #[serde(rename = "1")]
    Plus,
    #[serde(rename = "-1")]
    Minus,
}

impl UnitNorm {
    pub fn value(self) -> i32 {
        match self {
            UnitNorm::Plus => 1,
            UnitNorm::Minus => -1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PellSolution {
    pub x: BigInt,
    pub y: BigInt,
    pub d: BigInt,
    pub norm: UnitNorm,
}

impl PellSolution {
    fn checked(x: BigInt, y: BigInt, d: &BigInt, norm: UnitNorm) -> Result<Self> {
        let lhs = &x * &x - d * &y * &y;
        if lhs != BigInt::from(norm.value()) {
            return Err(Error::IdentityFailed(format!(
                "{x}^2 - {d}*{y}^2 = {lhs}, expected {}",
                norm.value()
            )));
        }
        Ok(PellSolution {
            x,
            y,
            d: d.clone(),
            norm,
        })
    }

    pub fn to_elem(&self, field: &FieldDesc) -> QuadElem {
        QuadElem::from_parts(field, self.x.clone(), self.y.clone(), BigInt::one())
            .expect("unit denominator")
    }
}

/// Periodic continued fraction of `sqrt(D)` via the integer `(P, Q)`
/// recurrence.
pub fn cf_sqrt(field: &FieldDesc) -> CfExpansion {
    let d = field.d().clone();
    let a0 = d.sqrt();
    let two_a0 = &a0 << 1u32;
    let mut m = BigInt::zero();
    let mut q = BigInt::one();
    let mut a = a0.clone();
    let mut period = Vec::new();
    loop {
        m = &q * &a - &m;
        q = (&d - &m * &m) / &q;
        a = (&a0 + &m) / &q;
        period.push(a.clone());
        if a == two_a0 {
            break;
        }
    }
    CfExpansion { d, a0, period }
}

/// Fundamental solution of `x^2 - D y^2 = norm` from the convergent at the
/// end of the first period (squared when `+1` is requested and the period is
/// odd).
pub fn fundamental_unit_solution(field: &FieldDesc, norm: UnitNorm) -> Result<PellSolution> {
    let cf = cf_sqrt(field);
    let r = cf.period.len();
    // Convergent p_{r-1}/q_{r-1}.
    let (mut p_prev, mut p) = (BigInt::one(), cf.a0.clone());
    let (mut q_prev, mut q) = (BigInt::zero(), BigInt::one());
    for a in &cf.period[..r - 1] {
        let p_next = a * &p + &p_prev;
        let q_next = a * &q + &q_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
    }
    let d = field.d();
    let odd = r % 2 == 1;
    match (norm, odd) {
        (UnitNorm::Minus, false) => Err(Error::NoNegativePell(d.to_string())),
        (UnitNorm::Minus, true) | (UnitNorm::Plus, false) => PellSolution::checked(p, q, d, norm),
        (UnitNorm::Plus, true) => {
            let x = &p * &p + d * &q * &q;
            let y = (&p * &q) << 1u32;
            PellSolution::checked(x, y, d, norm)
        }
    }
}

/// The unit `zeta = x + y sqrt(D) > 1` with `N(zeta) = norm`.
pub fn unit_zeta(field: &FieldDesc, norm: UnitNorm) -> Result<QuadElem> {
    Ok(fundamental_unit_solution(field, norm)?.to_elem(field))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(d: i64) -> FieldDesc {
        FieldDesc::new(d).unwrap()
    }

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn cf_examples() {
        let c = cf_sqrt(&f(2));
        assert_eq!((c.a0, c.period), (BigInt::from(1), ints(&[2])));
        let c = cf_sqrt(&f(3));
        assert_eq!((c.a0, c.period), (BigInt::from(1), ints(&[1, 2])));
        let c = cf_sqrt(&f(13));
        assert_eq!((c.a0, c.period), (BigInt::from(3), ints(&[1, 1, 1, 1, 6])));
    }

    #[test]
    fn pell_examples() {
        let s = fundamental_unit_solution(&f(2), UnitNorm::Plus).unwrap();
        assert_eq!((s.x, s.y), (BigInt::from(3), BigInt::from(2)));
        let s = fundamental_unit_solution(&f(5), UnitNorm::Minus).unwrap();
        assert_eq!((s.x, s.y), (BigInt::from(2), BigInt::from(1)));
        let s = fundamental_unit_solution(&f(13), UnitNorm::Plus).unwrap();
        assert_eq!((s.x, s.y), (BigInt::from(649), BigInt::from(180)));
        assert!(matches!(
            fundamental_unit_solution(&f(3), UnitNorm::Minus),
            Err(Error::NoNegativePell(_))
        ));
    }

    #[test]
    fn zeta_examples() {
        let k = f(2);
        assert_eq!(unit_zeta(&k, UnitNorm::Plus).unwrap(), QuadElem::parse(&k, "3+2*sqrt(2)").unwrap());
        let k = f(3);
        assert_eq!(unit_zeta(&k, UnitNorm::Plus).unwrap(), QuadElem::parse(&k, "2+sqrt(3)").unwrap());
        let k = f(5);
        assert_eq!(unit_zeta(&k, UnitNorm::Plus).unwrap(), QuadElem::parse(&k, "9+4*sqrt(5)").unwrap());
    }

    #[test]
    fn fundamental_against_brute_force() {
        for d in 2u64..=100 {
            let Ok(k) = FieldDesc::new(d) else { continue };
            let s = fundamental_unit_solution(&k, UnitNorm::Plus).unwrap();
            let limit = 10_000u64;
            let brute = (1..=limit).find(|&y| {
                let x2 = 1 + d * y * y;
                let x = (x2 as f64).sqrt() as u64;
                (x.saturating_sub(1)..=x + 1).any(|x| x * x == x2)
            });
            match brute {
                Some(y) => assert_eq!(s.y, BigInt::from(y), "D = {d}"),
                None => assert!(s.y > BigInt::from(limit), "D = {d}"),
            }
            let z = s.to_elem(&k);
            assert_eq!(&z * &z.conjugate(), QuadElem::one(&k));
        }
    }
}
