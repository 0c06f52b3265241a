//! Cross-checks against independent, deliberately naive implementations.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use quadapprox::construct::{self, ConstructOptions};
use quadapprox::numtheory;
use quadapprox::pell::{self, UnitNorm};
use quadapprox::qfield::eval_interval;
use quadapprox::spectrum::{self, SpectrumConfig};
use quadapprox::tracefact;
use quadapprox::{Error, Execution, FieldDesc, QuadElem};

fn field(d: u64) -> FieldDesc {
    FieldDesc::new(d).unwrap()
}

fn elem(d: u64, s: &str) -> QuadElem {
    QuadElem::parse(&field(d), s).unwrap()
}

/// Integer coefficients of the n-th cyclotomic polynomial, lowest degree first,
/// by dividing `x^n - 1` by every `Phi_d` with `d | n`, `d < n`.
fn cyclotomic(n: u64) -> Vec<i64> {
    let mut poly = vec![0i64; n as usize + 1];
    poly[0] = -1;
    poly[n as usize] = 1;
    for d in 1..n {
        if n.is_multiple_of(d) {
            poly = poly_div(&poly, &cyclotomic(d));
        }
    }
    poly
}

/// Exact division by a monic polynomial.
fn poly_div(num: &[i64], den: &[i64]) -> Vec<i64> {
    let mut rem = num.to_vec();
    let dd = den.len() - 1;
    let mut q = vec![0i64; num.len() - dd];
    for k in (0..q.len()).rev() {
        let c = rem[k + dd];
        q[k] = c;
        for (j, &b) in den.iter().enumerate() {
            rem[k + j] -= c * b;
        }
    }
    assert!(rem.iter().all(|&r| r == 0), "inexact polynomial division");
    q
}

/// `Phi_n^hom(x, y) = sum c_k x^k y^(deg - k)`, evaluated in the field.
fn cyclotomic_hom(n: u64, x: &QuadElem, y: &QuadElem) -> QuadElem {
    let c = cyclotomic(n);
    let deg = c.len() - 1;
    let mut acc = QuadElem::zero(x.field());
    for (k, &ck) in c.iter().enumerate() {
        if ck == 0 {
            continue;
        }
        let term = x
            .pow_int(k as u64)
            .try_mul(&y.pow_int((deg - k) as u64))
            .unwrap()
            .scale_int(&BigInt::from(ck));
        acc = acc.try_add(&term).unwrap();
    }
    acc
}

#[test]
fn cyclotomic_coefficients() {
    assert_eq!(cyclotomic(1), vec![-1, 1]);
    assert_eq!(cyclotomic(6), vec![1, -1, 1]);
    assert_eq!(cyclotomic(15), vec![1, -1, 0, 1, -1, 1, 0, -1, 1]);
    assert!(cyclotomic(105).contains(&-2));
}

#[test]
fn phi_matches_homogeneous_cyclotomic() {
    let omegas = [
        elem(2, "1+sqrt(2)"),
        elem(2, "3+2*sqrt(2)"),
        elem(3, "2-sqrt(3)"),
        elem(5, "(1+sqrt(5))/2"),
        elem(5, "(3-7*sqrt(5))/2"),
        elem(7, "-4+9*sqrt(7)"),
        elem(13, "(11+3*sqrt(13))/2"),
    ];
    for w in &omegas {
        let wc = w.conjugate();
        for l in [3u64, 5, 15, 21, 105] {
            let f = tracefact::phi_psi(w, l, false).unwrap();
            let expect = cyclotomic_hom(l, &w.neg(), &wc);
            assert_eq!(expect.as_rational(), Some(BigRational::from_integer(f.phi_part.clone())), "{w}, L = {l}");
        }
        for l in [2u64, 3, 6, 10, 15, 30] {
            let f = tracefact::phi_psi(w, l, true).unwrap();
            let expect = cyclotomic_hom(l, w, &wc);
            assert_eq!(
                expect.as_rational(),
                Some(BigRational::from_integer(f.phi_part.clone())),
                "{w}, twisted L = {l}"
            );
        }
    }
}

#[test]
fn sequential_factorization_matches_parallel() {
    let w = elem(2, "3+2*sqrt(2)");
    for l in [105u64, 1155] {
        let a = tracefact::phi_psi_with(&w, l, false, Execution::Sequential).unwrap();
        let b = tracefact::phi_psi_with(&w, l, false, Execution::Parallel).unwrap();
        assert_eq!(a, b);
    }
}

fn isqrt(n: u128) -> Option<u128> {
    let mut x = (n as f64).sqrt() as u128;
    while x * x > n {
        x -= 1;
    }
    while (x + 1) * (x + 1) <= n {
        x += 1;
    }
    (x * x == n).then_some(x)
}

#[test]
fn negative_pell_against_search() {
    for d in 2u64..=100 {
        if !numtheory::is_square_free(d) {
            continue;
        }
        let search = (1u128..=100_000).find_map(|y| {
            let x2 = (d as u128 * y * y).checked_sub(1)?;
            isqrt(x2).map(|x| (x, y))
        });
        match (pell::fundamental_unit_solution(&field(d), UnitNorm::Minus), search) {
            (Ok(s), Some((x, y))) => {
                assert_eq!((s.x, s.y), (BigInt::from(x), BigInt::from(y)), "D = {d}");
            }
            (Err(Error::NoNegativePell(_)), None) => {}
            (got, want) => panic!("D = {d}: {got:?} vs search {want:?}"),
        }
    }
}

#[test]
fn unit_zeta_is_smallest_pell_unit() {
    for d in [2u64, 3, 5, 6, 7, 13, 21, 29] {
        let k = field(d);
        let zeta = pell::unit_zeta(&k, UnitNorm::Plus).unwrap();
        assert!(zeta.integral());
        assert_eq!(zeta.norm(), BigRational::one(), "D = {d}");
        let z = eval_interval(&zeta, 64).mid_f64();
        // every norm-1 unit a + b sqrt(D) > 1 of Z[sqrt(D)] has a, b > 0
        for a in 1i64..200 {
            for b in 1i64..200 {
                let u = QuadElem::from_parts(&k, a.into(), b.into(), 1.into()).unwrap();
                if u.norm().is_one() {
                    assert!(eval_interval(&u, 64).mid_f64() >= z * (1.0 - 1e-12), "D = {d}: {u} < {zeta}");
                }
            }
        }
    }
}

#[test]
fn spectrum_matches_exact_sort() {
    for (d, s) in [(2u64, "sqrt(2)"), (5, "(1+sqrt(5))/2"), (3, "7/3+sqrt(3)/5")] {
        let alpha = elem(d, s);
        let count = 3000usize;
        let af = eval_interval(&alpha, 64).mid_f64();
        let bound = 1.3 * 4.0 * af.sqrt() * count as f64 / std::f64::consts::PI + 50.0;
        let mut pairs = Vec::new();
        let mut m = 1u64;
        while af * (m * m) as f64 <= bound {
            let mut n = 1u64;
            while af * (m * m) as f64 + (n * n) as f64 <= bound {
                pairs.push((m, n));
                n += 1;
            }
            m += 1;
        }
        let value = |p: &(u64, u64)| {
            alpha
                .scale_int(&BigInt::from(p.0 * p.0))
                .try_add(&QuadElem::from_int(alpha.field(), p.1 * p.1))
                .unwrap()
        };
        pairs.sort_by(|x, y| value(x).cmp_value(&value(y)).unwrap());
        assert!(pairs.len() > count);
        pairs.truncate(count);

        for exec in [Execution::Sequential, Execution::Parallel] {
            let cfg = SpectrumConfig {
                execution: exec,
                ..SpectrumConfig::default()
            };
            let levels = spectrum::enumerate_levels(&alpha, count as u64, &cfg).unwrap();
            let got: Vec<(u64, u64)> = levels.iter().map(|l| (l.m, l.n)).collect();
            assert_eq!(got, pairs, "{s} {exec:?}");
            for l in levels.iter().step_by(97) {
                let exact = eval_interval(&value(&(l.m, l.n)), 128);
                assert!(l.value.certain_cmp(&exact).is_none(), "{s}: enclosure misses level {:?}", (l.m, l.n));
            }
        }
    }
}

#[test]
fn sqrt2_quarter_certificate_by_hand() {
    let alpha = elem(2, "sqrt(2)");
    let eps = BigRational::new(1.into(), 4.into());
    let c = construct::symmetric_construct(&alpha, &eps, &ConstructOptions::default()).unwrap();
    let cert = &c.certificate;
    assert_eq!(cert.params.n, 1);
    // L = 3, L' = 35, M = 35, m1 = 12, m2 = 1, N = 105
    let zeta = pell::unit_zeta(alpha.field(), UnitNorm::Plus).unwrap();
    let omega_p = alpha.pow_int(12u32).try_mul(&zeta.pow_int(35u32)).unwrap();
    let p = omega_p.pow_int(3u32).trace_int().unwrap();
    assert_eq!(cert.p, p);
    assert_eq!(cert.p_split.0, cyclotomic_hom(3, &omega_p.neg(), &omega_p.conjugate()).as_rational().unwrap().to_integer());
    assert_eq!(&cert.p_split.0 * &cert.p_split.1, cert.p);
    assert_eq!(&cert.q_split.0 * &cert.q_split.1, cert.q);

    // alpha Q - P = (alpha - conj alpha) conj(alpha)^M conj(zeta)^N
    let lhs = alpha.scale_int(&cert.q).try_sub(&QuadElem::from_int(alpha.field(), cert.p.clone())).unwrap();
    let rhs = alpha
        .try_sub(&alpha.conjugate())
        .unwrap()
        .try_mul(&alpha.conjugate().pow_int(35u32))
        .unwrap()
        .try_mul(&zeta.conjugate().pow_int(105u32))
        .unwrap();
    assert_eq!(lhs, rhs);
    assert!(!cert.q.is_zero());
}
