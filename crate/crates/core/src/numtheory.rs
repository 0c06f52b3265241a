//! Small arithmetic functions, the greedy odd-prime blocks `L`, `L'` and the
//! CRT choice of `M`.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// Default cap on `L * L'` beyond which block selection logs a warning.
pub const DEFAULT_BLOCK_BUDGET: u64 = 10_000_000;

/// Prime factorization by trial division, ascending primes with multiplicity.
pub fn factorize(mut n: u64) -> Vec<(u64, u32)> {
    let mut out = Vec::new();
    if n < 2 {
        return out;
    }
    let mut push = |p: u64, n: &mut u64| {
        let mut e = 0;
        while (*n).is_multiple_of(p) {
            *n /= p;
            e += 1;
        }
        if e > 0 {
            out.push((p, e));
        }
    };
    push(2, &mut n);
    let mut p = 3u64;
    while p.saturating_mul(p) <= n {
        push(p, &mut n);
        p += 2;
    }
    if n > 1 {
        out.push((n, 1));
    }
    out
}

pub fn is_square_free(n: u64) -> bool {
    n >= 1 && factorize(n).iter().all(|&(_, e)| e == 1)
}

pub fn mobius(n: u64) -> i8 {
    assert!(n >= 1, "mobius(0) is undefined");
    let f = factorize(n);
    if f.iter().any(|&(_, e)| e > 1) {
        0
    } else if f.len().is_multiple_of(2) {
        1
    } else {
        -1
    }
}

pub fn euler_phi(n: u64) -> u64 {
    assert!(n >= 1, "phi(0) is undefined");
    factorize(n)
        .into_iter()
        .fold(n, |acc, (p, _)| acc / p * (p - 1))
}

pub fn is_prime(n: u64) -> bool {
    n >= 2 && factorize(n) == [(n, 1)]
}

/// Odd primes `3, 5, 7, ...` in order.
pub fn odd_primes() -> impl Iterator<Item = u64> {
    (3u64..).step_by(2).filter(|&n| is_prime(n))
}

/// Divisors of a square-free number given by its distinct primes, each
/// paired with its Möbius value. The first entry is `(1, 1)`.
pub fn square_free_divisors(primes: &[u64]) -> Vec<(u64, i8)> {
    let mut out = vec![(1u64, 1i8)];
    for &p in primes {
        let n = out.len();
        for i in 0..n {
            let (d, mu) = out[i];
            out.push((d * p, -mu));
        }
    }
    out
}

/// A block of distinct primes with product `L` and exact ratio `phi(L)/L`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PrimeBlock {
    pub primes: Vec<u64>,
    #[serde(serialize_with = "crate::json::ser_display")]
    pub product: BigUint,
    #[serde(serialize_with = "crate::json::ser_display")]
    pub totient_ratio: BigRational,
}

impl PrimeBlock {
    pub fn from_primes(mut primes: Vec<u64>) -> Self {
        primes.sort_unstable();
        primes.dedup();
        let product = primes.iter().fold(BigUint::one(), |acc, &p| acc * p);
        let totient_ratio = primes.iter().fold(BigRational::one(), |acc, &p| {
            acc * BigRational::new(BigInt::from(p - 1), BigInt::from(p))
        });
        PrimeBlock {
            primes,
            product,
            totient_ratio,
        }
    }

    /// The block `{2}`, used on the strongly divisible side of the twisted
    /// construction.
    pub fn two() -> Self {
        PrimeBlock::from_primes(vec![2])
    }

    pub fn product_u64(&self) -> Option<u64> {
        self.product.to_u64()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlockPair {
    #[serde(rename = "L")]
    pub l: PrimeBlock,
    #[serde(rename = "Lprime")]
    pub lp: PrimeBlock,
    #[serde(serialize_with = "crate::json::ser_display")]
    pub eps: BigRational,
}

impl BlockPair {
    /// `L * L'`.
    pub fn combined(&self) -> BigUint {
        &self.l.product * &self.lp.product
    }

    pub fn exceeds_budget(&self, budget: u64) -> bool {
        self.combined() > BigUint::from(budget)
    }
}

fn check_eps(eps: &BigRational) -> Result<()> {
    let half = BigRational::new(1.into(), 2.into());
    if !eps.is_positive() || eps >= &half {
        return Err(Error::Precondition(format!("eps = {eps} must lie in (0, 1/2)")));
    }
    Ok(())
}

/// Greedy scan of the odd primes not in `excluded`: keep a prime iff the
/// running product of `(1 - 1/p)` stays above `1/2`, stop once it lands in
/// `(1/2, 1/2 + eps)`.
pub fn greedy_odd_block(eps: &BigRational, excluded: &[u64]) -> Result<PrimeBlock> {
    check_eps(eps)?;
    let half = BigRational::new(1.into(), 2.into());
    let upper = &half + eps;
    let mut ratio = BigRational::one();
    let mut chosen = Vec::new();
    for p in odd_primes() {
        if excluded.contains(&p) {
            continue;
        }
        let next = &ratio * BigRational::new(BigInt::from(p - 1), BigInt::from(p));
        if next > half {
            ratio = next;
            chosen.push(p);
            if ratio < upper {
                break;
            }
        }
    }
    Ok(PrimeBlock::from_primes(chosen))
}

/// Disjoint blocks `L`, `L'` of odd primes with both `phi/L` ratios in
/// `(1/2, 1/2 + eps)`. `L` takes first pick of the small primes.
pub fn select_blocks(eps: &BigRational) -> Result<BlockPair> {
    let l = greedy_odd_block(eps, &[])?;
    let lp = greedy_odd_block(eps, &l.primes)?;
    let pair = BlockPair {
        l,
        lp,
        eps: eps.clone(),
    };
    if pair.exceeds_budget(DEFAULT_BLOCK_BUDGET) {
        log::warn!(
            "L * L' = {} exceeds the budget of {}; powers of this size are very expensive",
            pair.combined(),
            DEFAULT_BLOCK_BUDGET
        );
    }
    Ok(pair)
}

/// Smallest positive `M` with `L | M + 1` and `L' | M`, returned with
/// `m1 = (M + 1) / L` and `m2 = M / L'`.
pub fn crt_smallest_m(l: &BigUint, lp: &BigUint) -> Result<(BigUint, BigUint, BigUint)> {
    if l.is_zero() || lp.is_zero() {
        return Err(Error::Precondition("moduli must be positive".into()));
    }
    let li = BigInt::from(l.clone());
    let lpi = BigInt::from(lp.clone());
    let eg = lpi.extended_gcd(&li);
    if !eg.gcd.is_one() {
        return Err(Error::NotCoprime(l.to_string(), lp.to_string()));
    }
    // M = L' k with L' k = -1 (mod L), k in [1, L].
    let inv = eg.x.mod_floor(&li);
    let mut k = (-inv).mod_floor(&li);
    if k.is_zero() {
        k = li.clone();
    }
    let m = (&lpi * k).to_biguint().expect("positive");
    let m1 = (&m + 1u32) / l;
    let m2 = &m / lp;
    Ok((m, m1, m2))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn arithmetic_functions() {
        assert_eq!((mobius(1), euler_phi(1)), (1, 1));
        assert_eq!((mobius(15), euler_phi(15)), (1, 8));
        assert_eq!(mobius(12), 0);
        assert_eq!(mobius(30), -1);
        assert_eq!(euler_phi(36), 12);
        assert_eq!(factorize(360), vec![(2, 3), (3, 2), (5, 1)]);
        assert!(is_square_free(105) && !is_square_free(18));
    }

    #[test]
    fn divisors_with_mobius() {
        let mut d = square_free_divisors(&[3, 5]);
        d.sort();
        assert_eq!(d, vec![(1, 1), (3, -1), (5, -1), (15, 1)]);
        for (n, mu) in square_free_divisors(&[3, 5, 7, 11]) {
            assert_eq!(mobius(n), mu);
        }
    }

    #[test]
    fn greedy_blocks_examples() {
        let p = select_blocks(&r(1, 4)).unwrap();
        assert_eq!(p.l.primes, vec![3]);
        assert_eq!(p.l.totient_ratio, r(2, 3));
        assert_eq!(p.lp.primes, vec![5, 7]);
        assert_eq!(p.lp.totient_ratio, r(24, 35));

        let p = select_blocks(&r(15, 100)).unwrap();
        assert_eq!(p.l.primes, vec![3, 5]);
        assert_eq!(p.l.totient_ratio, r(8, 15));
        assert_eq!(p.lp.primes, vec![7, 11, 13, 17, 19]);
        assert_eq!(p.lp.product, BigUint::from(323323u32));

        let b = greedy_odd_block(&r(1, 100), &[]).unwrap();
        assert_eq!(b.primes, vec![3, 5, 17]);
        assert_eq!(b.totient_ratio, r(128, 255));
    }

    #[test]
    fn eps_out_of_range() {
        assert!(select_blocks(&r(0, 1)).is_err());
        assert!(select_blocks(&r(1, 2)).is_err());
        assert!(select_blocks(&r(-1, 4)).is_err());
    }

    #[test]
    fn crt_examples() {
        let b = |x: u64| BigUint::from(x);
        assert_eq!(crt_smallest_m(&b(3), &b(35)).unwrap(), (b(35), b(12), b(1)));
        assert_eq!(crt_smallest_m(&b(2), &b(35)).unwrap(), (b(35), b(18), b(1)));
        assert_eq!(crt_smallest_m(&b(3), &b(1)).unwrap(), (b(2), b(1), b(2)));
        assert!(matches!(crt_smallest_m(&b(3), &b(15)), Err(Error::NotCoprime(..))));
    }

    #[test]
    fn crt_minimality_by_scan() {
        for (l, lp) in [(3u64, 35u64), (15, 77), (2, 105), (35, 3), (1, 7), (7, 1)] {
            let (m, _, _) = crt_smallest_m(&BigUint::from(l), &BigUint::from(lp)).unwrap();
            let scan = (1..=l * lp).find(|x| (x + 1) % l == 0 && x % lp == 0).unwrap();
            assert_eq!(m, BigUint::from(scan), "L={l} L'={lp}");
        }
    }
}
