//! Approximations `P/Q` to a quadratic irrationality whose numerator and
//! denominator both split into two factors of comparable size, packaged as
//! self-contained certificates with an independent verifier.
//!
//! All constructions work with `alpha_int = A * alpha`, the smallest integral
//! multiple of the input; `P / (A Q)` then approximates `alpha` itself.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::json::{dec, dec_opt, dec_pair, RealJson};
use crate::numtheory::{self, PrimeBlock, DEFAULT_BLOCK_BUDGET};
use crate::par::{self, Execution};
use crate::pell::{self, UnitNorm};
use crate::qfield::{eval_interval, FieldDesc, LogExpr, Precision, QuadElem};
use crate::tracefact::{self, MagnitudeReport};

/// Largest `n` tried by [`choose_n`] before giving up.
pub const MAX_N: u64 = 100_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Symmetric,
    TwistedP,
    TwistedQ,
    Strong,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Symmetric => "symmetric",
            Mode::TwistedP => "twisted-p",
            Mode::TwistedQ => "twisted-q",
            Mode::Strong => "strong",
        }
    }

    /// Whether twisted traces are used.
    pub fn twisted(self) -> bool {
        self != Mode::Symmetric
    }

    /// Exponent `e'` in the split bound `min(d1, d2) >> |X|^(1/2 - e')` for
    /// the P side (`p_side = true`) or the Q side.
    fn split_eps(self, eps: &BigRational, p_side: bool) -> BigRational {
        match (self, p_side) {
            (Mode::Strong, _) | (Mode::TwistedP, true) | (Mode::TwistedQ, false) => BigRational::zero(),
            _ => eps.clone(),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "symmetric" => Ok(Mode::Symmetric),
            "twisted-p" => Ok(Mode::TwistedP),
            "twisted-q" => Ok(Mode::TwistedQ),
            "strong" => Ok(Mode::Strong),
            _ => Err(Error::Parse {
                input: s.to_string(),
                reason: "expected symmetric, twisted-p, twisted-q or strong".into(),
            }),
        }
    }
}

/// Side carrying the block `{2}` in the twisted construction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TwoSide {
    P,
    Q,
    Both,
}

#[derive(Clone, Debug)]
pub struct ConstructOptions {
    pub norm: UnitNorm,
    pub precision: Precision,
    pub execution: Execution,
    /// Also run the factor magnitude diagnostics.
    pub explain: bool,
}

impl Default for ConstructOptions {
    fn default() -> Self {
        ConstructOptions {
            norm: UnitNorm::Plus,
            precision: Precision::default(),
            execution: Execution::default(),
            explain: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Params {
    #[serde(rename = "L", with = "dec_opt")]
    pub l: Option<BigUint>,
    #[serde(rename = "Lprime", with = "dec_opt")]
    pub lp: Option<BigUint>,
    #[serde(rename = "L_primes", default)]
    pub l_primes: Vec<u64>,
    #[serde(rename = "Lprime_primes", default)]
    pub lp_primes: Vec<u64>,
    #[serde(rename = "M", with = "dec")]
    pub m: BigUint,
    #[serde(with = "dec_opt")]
    pub m1: Option<BigUint>,
    #[serde(with = "dec_opt")]
    pub m2: Option<BigUint>,
    pub n: u64,
    #[serde(rename = "N", with = "dec")]
    pub big_n: BigUint,
}

/// Check outcomes recorded when the certificate was built.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Checks {
    pub approx: bool,
    #[serde(rename = "split_P")]
    pub split_p: bool,
    #[serde(rename = "split_Q")]
    pub split_q: bool,
    pub q_magnitude: bool,
    pub params: bool,
}

/// A machine-checkable approximation record. Integers are stored exactly and
/// serialized as decimal strings; field elements use the canonical
/// `a/c + b/c*sqrt(D)` text form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub alpha: String,
    #[serde(rename = "D", with = "dec")]
    pub d: BigInt,
    #[serde(rename = "A", with = "dec")]
    pub a: BigInt,
    pub alpha_int: String,
    pub zeta: String,
    #[serde(default)]
    pub beta: Option<String>,
    pub mode: Mode,
    #[serde(with = "dec_opt", default)]
    pub eps: Option<BigRational>,
    #[serde(with = "dec")]
    pub claimed_exponent: BigRational,
    pub params: Params,
    #[serde(rename = "P", with = "dec")]
    pub p: BigInt,
    #[serde(rename = "P_split", with = "dec_pair")]
    pub p_split: (BigInt, BigInt),
    #[serde(rename = "Q", with = "dec")]
    pub q: BigInt,
    #[serde(rename = "Q_split", with = "dec_pair")]
    pub q_split: (BigInt, BigInt),
    #[serde(default)]
    pub magnitude_bounds_skipped: bool,
    /// Enclosure of `|alpha_int * Q - P|`.
    #[serde(default)]
    pub error: Option<RealJson>,
    #[serde(default)]
    pub checks: Checks,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub status: Status,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifyReport {
    pub mode: Mode,
    pub checks: Vec<CheckOutcome>,
    pub error: Option<RealJson>,
    /// `log2 |A * Q|`, the denominator of the induced approximation
    /// `P / (A Q)` to `alpha`.
    pub alpha_denominator_log2: f64,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.status != Status::Fail)
    }

    fn ok(&self, name: &str) -> bool {
        self.checks
            .iter()
            .filter(|c| c.name == name)
            .all(|c| c.status != Status::Fail)
    }

    pub fn summary(&self) -> Checks {
        Checks {
            approx: self.ok("approx"),
            split_p: self.ok("split_P"),
            split_q: self.ok("split_Q"),
            q_magnitude: self.ok("q_magnitude"),
            params: self.ok("params"),
        }
    }

    pub fn failures(&self) -> Vec<&CheckOutcome> {
        self.checks.iter().filter(|c| c.status == Status::Fail).collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ChooseN {
    pub n: u64,
    /// `log2(lhs / rhs)` of the two conjugate-ratio inequalities and the
    /// size inequality at the chosen `n`; all positive.
    pub margins_log2: [f64; 3],
}

#[derive(Clone, Debug, Serialize)]
pub struct Explain {
    pub choose_n: ChooseN,
    pub p_factors: MagnitudeReport,
    pub q_factors: MagnitudeReport,
}

#[derive(Clone, Debug)]
pub struct Construction {
    pub certificate: Certificate,
    pub report: VerifyReport,
    pub explain: Option<Explain>,
}

fn r_int(x: impl Into<BigInt>) -> BigRational {
    BigRational::from_integer(x.into())
}

fn r_uint(x: &BigUint) -> BigRational {
    BigRational::from_integer(BigInt::from(x.clone()))
}

/// `(A, A * alpha)` after checking that `alpha` is a positive irrational.
fn prepare(alpha: &QuadElem) -> Result<(BigInt, QuadElem)> {
    if alpha.is_rational() {
        return Err(Error::Precondition(format!("alpha = {alpha} must be irrational")));
    }
    if !alpha.is_positive() {
        return Err(Error::Precondition(format!("alpha = {alpha} must be positive")));
    }
    Ok(alpha.clear_denominator())
}

fn blocks_for(mode: Mode, eps: &BigRational) -> Result<(PrimeBlock, PrimeBlock)> {
    let (l, lp) = match mode {
        Mode::Symmetric => {
            let pair = numtheory::select_blocks(eps)?;
            return Ok((pair.l, pair.lp));
        }
        Mode::TwistedP => (PrimeBlock::two(), numtheory::greedy_odd_block(eps, &[])?),
        Mode::TwistedQ => (numtheory::greedy_odd_block(eps, &[])?, PrimeBlock::two()),
        Mode::Strong => return Err(Error::Precondition("strong mode has no prime blocks".into())),
    };
    if &l.product * &lp.product > BigUint::from(DEFAULT_BLOCK_BUDGET) {
        log::warn!("L * L' = {} exceeds the block budget", &l.product * &lp.product);
    }
    Ok((l, lp))
}

struct NInputs<'a> {
    alpha_int: &'a QuadElem,
    zeta: &'a QuadElem,
    l: &'a BigUint,
    lp: &'a BigUint,
    m: &'a BigUint,
    m1: &'a BigUint,
    m2: &'a BigUint,
    eps: &'a BigRational,
    twisted: bool,
}

/// The three `lhs / rhs` quotients whose logs must be positive.
fn n_inequalities(x: &NInputs<'_>, n: u64) -> [LogExpr; 3] {
    let alpha = x.alpha_int;
    let alpha_bar = alpha.conjugate();
    let zeta = x.zeta;
    let zeta_bar = zeta.conjugate();
    let half = BigRational::new(1.into(), 2.into());
    let ratio = |k: &BigUint, m: &BigUint| {
        let k = r_uint(&(k * n));
        let m = r_uint(m);
        LogExpr::new()
            .elem_pow(zeta, k.clone())
            .elem_pow(&zeta_bar, -k)
            .rational_pow(half.clone(), BigRational::one())
            .elem_pow(&alpha_bar, -m.clone())
            .elem_pow(alpha, m)
    };
    let big_n = r_uint(&(x.l * x.lp * n));
    let m = r_uint(x.m);
    let mut size = LogExpr::new()
        .elem_pow(zeta, x.eps * &big_n)
        .rational_pow(BigRational::new(1.into(), 4.into()), BigRational::one())
        .elem_pow(&alpha.try_sub(&alpha_bar).expect("same field"), -BigRational::one())
        .rational_pow(alpha.norm(), -m.clone())
        .elem_pow(alpha, x.eps * m);
    if x.twisted {
        size = size.int_pow(alpha.d().clone(), -BigRational::one());
    }
    [ratio(x.lp, x.m1), ratio(x.l, x.m2), size]
}

/// Smallest `n >= 1` for which both conjugate-ratio inequalities and the
/// size inequality hold, decided in log space.
fn choose_n_inner(x: &NInputs<'_>, policy: &Precision) -> Result<ChooseN> {
    for n in 1..=MAX_N {
        let exprs = n_inequalities(x, n);
        let mut ok = true;
        for e in &exprs {
            if e.cmp_ln(&BigRational::zero(), policy)? != Ordering::Greater {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(ChooseN {
                n,
                margins_log2: exprs.map(|e| e.log2_estimate()),
            });
        }
    }
    Err(Error::Precondition(format!("no n <= {MAX_N} satisfies the size inequalities")))
}

/// Public entry point for the parameter scan of a given mode.
#[allow(clippy::too_many_arguments)]
pub fn choose_n(
    alpha_int: &QuadElem,
    zeta: &QuadElem,
    l: &BigUint,
    lp: &BigUint,
    eps: &BigRational,
    twisted: bool,
    policy: &Precision,
) -> Result<ChooseN> {
    let (m, m1, m2) = numtheory::crt_smallest_m(l, lp)?;
    choose_n_inner(
        &NInputs {
            alpha_int,
            zeta,
            l,
            lp,
            m: &m,
            m1: &m1,
            m2: &m2,
            eps,
            twisted,
        },
        policy,
    )
}

fn check_eps(eps: &BigRational) -> Result<()> {
    if !eps.is_positive() || eps >= &BigRational::new(1.into(), 2.into()) {
        return Err(Error::Precondition(format!("eps = {eps} must lie in (0, 1/2)")));
    }
    Ok(())
}

/// Symmetric or twisted construction selected by `mode`.
pub fn construct(alpha: &QuadElem, eps: &BigRational, mode: Mode, opts: &ConstructOptions) -> Result<Construction> {
    if mode == Mode::Strong {
        return Err(Error::Precondition("use strong_certificate for the strong mode".into()));
    }
    check_eps(eps)?;
    let (a, alpha_int) = prepare(alpha)?;
    let field = alpha.field();
    let zeta = pell::unit_zeta(field, opts.norm)?;
    let (bl, blp) = blocks_for(mode, eps)?;
    let (m, m1, m2) = numtheory::crt_smallest_m(&bl.product, &blp.product)?;
    let inputs = NInputs {
        alpha_int: &alpha_int,
        zeta: &zeta,
        l: &bl.product,
        lp: &blp.product,
        m: &m,
        m1: &m1,
        m2: &m2,
        eps,
        twisted: mode.twisted(),
    };
    let chosen = choose_n_inner(&inputs, &opts.precision)?;
    let n = chosen.n;
    let l = bl
        .product_u64()
        .ok_or_else(|| Error::ExponentTooLarge(bl.product.to_string()))?;
    let lp = blp
        .product_u64()
        .ok_or_else(|| Error::ExponentTooLarge(blp.product.to_string()))?;
    let big_n = &bl.product * &blp.product * n;
    log::info!("mode {mode}: L = {l}, L' = {lp}, M = {m}, n = {n}, N = {big_n}");

    let exec = opts.execution;
    let (omega_p, omega_q) = par::join(
        exec,
        || {
            alpha_int
                .pow_int(m1.clone())
                .try_mul(&zeta.pow_int(BigUint::from(lp) * n))
        },
        || {
            alpha_int
                .pow_int(m2.clone())
                .try_mul(&zeta.pow_int(BigUint::from(l) * n))
        },
    );
    let (omega_p, omega_q) = (omega_p?, omega_q?);
    let twisted = mode.twisted();
    let (fp, fq) = par::join(
        exec,
        || tracefact::phi_psi_with(&omega_p, l, twisted, exec),
        || tracefact::phi_psi_with(&omega_q, lp, twisted, exec),
    );
    let (fp, fq) = (fp?, fq?);

    let explain = if opts.explain {
        Some(Explain {
            choose_n: chosen,
            p_factors: tracefact::magnitude_bounds(&fp, &opts.precision)?,
            q_factors: tracefact::magnitude_bounds(&fq, &opts.precision)?,
        })
    } else {
        None
    };

    let mut cert = Certificate {
        alpha: alpha.to_string(),
        d: field.d().clone(),
        a,
        alpha_int: alpha_int.to_string(),
        zeta: zeta.to_string(),
        beta: None,
        mode,
        eps: Some(eps.clone()),
        claimed_exponent: BigRational::one() - eps,
        params: Params {
            l: Some(bl.product.clone()),
            lp: Some(blp.product.clone()),
            l_primes: bl.primes.clone(),
            lp_primes: blp.primes.clone(),
            m,
            m1: Some(m1),
            m2: Some(m2),
            n,
            big_n,
        },
        p: fp.total,
        p_split: (fp.phi_part, fp.psi_part),
        q: fq.total,
        q_split: (fq.phi_part, fq.psi_part),
        magnitude_bounds_skipped: false,
        error: None,
        checks: Checks::default(),
    };
    let report = verify_certificate(&cert, &opts.precision)?;
    cert.error = report.error.clone();
    cert.checks = report.summary();
    Ok(Construction {
        certificate: cert,
        report,
        explain,
    })
}

pub fn symmetric_construct(alpha: &QuadElem, eps: &BigRational, opts: &ConstructOptions) -> Result<Construction> {
    construct(alpha, eps, Mode::Symmetric, opts)
}

pub fn twisted_construct(
    alpha: &QuadElem,
    eps: &BigRational,
    two_side: TwoSide,
    opts: &ConstructOptions,
) -> Result<Construction> {
    let mode = match two_side {
        TwoSide::P => Mode::TwistedP,
        TwoSide::Q => Mode::TwistedQ,
        TwoSide::Both => {
            return Err(Error::Precondition(
                "L = L' = 2 is impossible: M + 1 and M cannot both be even".into(),
            ))
        }
    };
    construct(alpha, eps, mode, opts)
}

fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let sn = r.numer().sqrt();
    let sd = r.denom().sqrt();
    (&sn * &sn == *r.numer() && &sd * &sd == *r.denom()).then(|| BigRational::new(sn, sd))
}

/// Whether `A * alpha` is the square of a field element for some positive
/// integer `A`: `N(alpha)` is a rational square and `tr(alpha) > 0`.
pub fn square_class_test(alpha: &QuadElem) -> bool {
    !alpha.is_zero() && rational_sqrt(&alpha.norm()).is_some() && alpha.trace().is_positive()
}

/// Divide square prime factors `p^2` out of `a` while `beta / p` stays integral.
fn reduce_square(a: BigInt, beta: QuadElem) -> (BigInt, QuadElem) {
    let Some(a64) = a.to_u64() else {
        return (a, beta);
    };
    let (mut a, mut beta) = (a, beta);
    for (p, e) in numtheory::factorize(a64) {
        if e < 2 {
            continue;
        }
        let p = BigInt::from(p);
        let p2 = &p * &p;
        while a.is_multiple_of(&p2) {
            let cand = beta.scale(&BigRational::new(BigInt::one(), p.clone()));
            if !cand.integral() {
                break;
            }
            a /= &p2;
            beta = cand;
        }
    }
    (a, beta)
}

/// `(A, beta)` with `A * alpha = beta^2`, `A` a positive integer and `beta`
/// a positive algebraic integer.
pub fn square_decompose(alpha: &QuadElem) -> Result<(BigInt, QuadElem)> {
    if !square_class_test(alpha) {
        return Err(Error::Precondition(format!(
            "{alpha} is not in the square class: need N(alpha) a rational square and tr(alpha) > 0"
        )));
    }
    let field = alpha.field();
    let s = rational_sqrt(&alpha.norm()).expect("square class");
    // (alpha + s)^2 = alpha * (tr(alpha) + 2s)
    let beta0 = alpha.try_add(&QuadElem::rational(field, &s))?;
    let c = alpha.trace() + &s * r_int(2);
    let (p, q) = (c.numer().clone(), c.denom().clone());
    let beta1 = beta0.scale_int(&q);
    let (k, beta2) = beta1.clear_denominator();
    let a0 = &p * &q * &k * &k;
    let first = reduce_square(a0, beta2);
    let second = reduce_square(&first.0 * field.d(), first.1.sqrt_d_mul());
    let (a, beta) = if second.0 < first.0 { second } else { first };
    if beta.try_mul(&beta)? != alpha.scale_int(&a) {
        return Err(Error::IdentityFailed(format!("beta^2 != A * alpha for A = {a}, beta = {beta}")));
    }
    Ok((a, beta))
}

/// Strongly divisible certificate for index `n`:
/// `P_n = ttr(beta zeta^n) tr(beta zeta^n)`, `Q_n = ttr(zeta^n) tr(zeta^n)`.
pub fn strong_certificate(alpha: &QuadElem, n: u64, opts: &ConstructOptions) -> Result<Construction> {
    if alpha.is_rational() {
        return Err(Error::Precondition(format!("alpha = {alpha} must be irrational")));
    }
    if n == 0 {
        return Err(Error::Precondition("n must be at least 1".into()));
    }
    let (a, beta) = square_decompose(alpha)?;
    let field = alpha.field();
    let alpha_int = beta.try_mul(&beta)?;
    let zeta = pell::unit_zeta(field, opts.norm)?;
    let zn = zeta.pow_int(n);
    let z2n = zn.try_mul(&zn)?;
    let x = beta.try_mul(&zn)?;
    let int = |v: Option<BigInt>| v.ok_or_else(|| Error::NotIntegral("trace".into()));
    let p_split = (int(x.twisted_trace_int())?, int(x.trace_int())?);
    let q_split = (int(zn.twisted_trace_int())?, int(zn.trace_int())?);
    let p = &p_split.0 * &p_split.1;
    let q = &q_split.0 * &q_split.1;
    if p != int(alpha_int.try_mul(&z2n)?.twisted_trace_int())? {
        return Err(Error::IdentityFailed(format!("P_{n} != ttr(alpha_int zeta^{})", 2 * n)));
    }
    if q != int(z2n.twisted_trace_int())? {
        return Err(Error::IdentityFailed(format!("Q_{n} != ttr(zeta^{})", 2 * n)));
    }
    // alpha_int Q - P = (conj(alpha_int) - alpha_int) conj(zeta)^(2n) sqrt(D)
    let lhs = alpha_int
        .scale_int(&q)
        .try_sub(&QuadElem::from_int(field, p.clone()))?;
    let rhs = alpha_int
        .conjugate()
        .try_sub(&alpha_int)?
        .try_mul(&z2n.conjugate())?
        .sqrt_d_mul();
    if lhs != rhs {
        return Err(Error::IdentityFailed(format!("error identity fails at n = {n}")));
    }
    let half = x.scale(&BigRational::new(1.into(), 2.into()));
    let skipped = x.conjugate().cmp_abs_exact(&half)? == Ordering::Greater;
    let mut cert = Certificate {
        alpha: alpha.to_string(),
        d: field.d().clone(),
        a,
        alpha_int: alpha_int.to_string(),
        zeta: zeta.to_string(),
        beta: Some(beta.to_string()),
        mode: Mode::Strong,
        eps: None,
        claimed_exponent: BigRational::one(),
        params: Params {
            l: None,
            lp: None,
            l_primes: Vec::new(),
            lp_primes: Vec::new(),
            m: BigUint::zero(),
            m1: None,
            m2: None,
            n,
            big_n: BigUint::from(2 * n),
        },
        p,
        p_split,
        q,
        q_split,
        magnitude_bounds_skipped: skipped,
        error: None,
        checks: Checks::default(),
    };
    let report = verify_certificate(&cert, &opts.precision)?;
    cert.error = report.error.clone();
    cert.checks = report.summary();
    Ok(Construction {
        certificate: cert,
        report,
        explain: None,
    })
}

/// Strong certificates for `n_from..=n_to`, checking that consecutive
/// denominators grow by a factor within `[zeta^2 / 2, 2 zeta^2]`.
pub fn strong_sequence(alpha: &QuadElem, n_from: u64, n_to: u64, opts: &ConstructOptions) -> Result<Vec<Construction>> {
    if n_from == 0 || n_from > n_to {
        return Err(Error::Precondition(format!("need 1 <= n_from <= n_to, got {n_from}..{n_to}")));
    }
    let ns: Vec<u64> = (n_from..=n_to).collect();
    let out: Vec<Construction> = par::map(opts.execution, &ns, |&n| strong_certificate(alpha, n, opts))
        .into_iter()
        .collect::<Result<_>>()?;
    let zeta = pell::unit_zeta(alpha.field(), opts.norm)?;
    for w in out.windows(2) {
        let (q0, q1) = (&w[0].certificate.q, &w[1].certificate.q);
        let growth = LogExpr::new()
            .int_pow(q1.clone(), BigRational::one())
            .int_pow(q0.clone(), -BigRational::one())
            .elem_pow(&zeta, r_int(-2));
        let lo = growth.clone().int_pow(2, BigRational::one());
        let hi = growth.rational_pow(BigRational::new(1.into(), 2.into()), BigRational::one());
        if lo.cmp_ln(&BigRational::zero(), &opts.precision)? != Ordering::Greater
            || hi.cmp_ln(&BigRational::zero(), &opts.precision)? != Ordering::Less
        {
            return Err(Error::IdentityFailed(format!(
                "Q_{} / Q_{} is not within a factor 2 of zeta^2",
                w[1].certificate.params.n, w[0].certificate.params.n
            )));
        }
    }
    Ok(out)
}

struct Parsed {
    field: FieldDesc,
    alpha: QuadElem,
    alpha_int: QuadElem,
    zeta: QuadElem,
    beta: Option<QuadElem>,
}

fn parse_cert(cert: &Certificate) -> Result<Parsed> {
    let field = FieldDesc::new(cert.d.clone())?;
    let parse = |s: &str| QuadElem::parse(&field, s);
    Ok(Parsed {
        alpha: parse(&cert.alpha)?,
        alpha_int: parse(&cert.alpha_int)?,
        zeta: parse(&cert.zeta)?,
        beta: cert.beta.as_deref().map(parse).transpose()?,
        field,
    })
}

fn outcome(name: &'static str, status: Status, detail: impl Into<String>) -> CheckOutcome {
    CheckOutcome {
        name,
        status,
        detail: detail.into(),
    }
}

/// Pass iff `ln(expr)` is certified to have the sign `want`.
fn decide(name: &'static str, expr: &LogExpr, want: Ordering, policy: &Precision, what: &str) -> CheckOutcome {
    let log2 = expr.log2_estimate();
    match expr.cmp_ln(&BigRational::zero(), policy) {
        Ok(o) if o == want => outcome(name, Status::Pass, format!("{what}: log2 margin {log2:.4}")),
        Ok(_) => outcome(name, Status::Fail, format!("{what} violated: log2 margin {log2:.4}")),
        Err(e) => outcome(name, Status::Fail, format!("{what}: {e}")),
    }
}

fn check_params(cert: &Certificate, x: &Parsed) -> std::result::Result<(), String> {
    let pr = &cert.params;
    if x.alpha.scale_int(&cert.a) != x.alpha_int {
        return Err("alpha_int != A * alpha".into());
    }
    if !cert.a.is_positive() || !x.alpha_int.integral() || x.alpha_int.is_rational() {
        return Err("alpha_int must be an irrational algebraic integer with A > 0".into());
    }
    let zn = x.zeta.norm();
    if !x.zeta.integral() || !(zn.is_one() || zn == -BigRational::one()) || x.zeta.cmp_value(&QuadElem::one(&x.field)) != Ok(Ordering::Greater) {
        return Err(format!("zeta = {} is not a unit > 1", x.zeta));
    }
    if pr.n == 0 {
        return Err("n must be positive".into());
    }
    if cert.mode == Mode::Strong {
        let beta = x.beta.as_ref().ok_or("strong certificate without beta")?;
        if !beta.integral() || beta.try_mul(beta).ok().as_ref() != Some(&x.alpha_int) {
            return Err("beta^2 != alpha_int".into());
        }
        if !pr.m.is_zero() || pr.big_n != BigUint::from(2 * pr.n) {
            return Err("strong certificates need M = 0 and N = 2n".into());
        }
        if cert.claimed_exponent != BigRational::one() {
            return Err("strong certificates claim exponent 1".into());
        }
        let bzn = beta.try_mul(&x.zeta.pow_int(pr.n)).map_err(|e| e.to_string())?;
        let half = bzn.scale(&BigRational::new(1.into(), 2.into()));
        let skipped = bzn.conjugate().cmp_abs_exact(&half).map_err(|e| e.to_string())? == Ordering::Greater;
        if skipped != cert.magnitude_bounds_skipped {
            return Err("magnitude_bounds_skipped flag is inconsistent".into());
        }
        return Ok(());
    }
    let eps = cert.eps.as_ref().ok_or("missing eps")?;
    check_eps(eps).map_err(|e| e.to_string())?;
    if cert.claimed_exponent != BigRational::one() - eps {
        return Err("claimed exponent must be 1 - eps".into());
    }
    let (l, lp) = match (&pr.l, &pr.lp) {
        (Some(l), Some(lp)) => (l, lp),
        _ => return Err("missing L or L'".into()),
    };
    let (m1, m2) = match (&pr.m1, &pr.m2) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err("missing m1 or m2".into()),
    };
    let half = BigRational::new(1.into(), 2.into());
    let block_ok = |primes: &[u64], prod: &BigUint, two: bool| -> std::result::Result<(), String> {
        if two {
            return if primes == [2] && prod == &BigUint::from(2u32) {
                Ok(())
            } else {
                Err("the twisted side must use the block {2}".into())
            };
        }
        let b = PrimeBlock::from_primes(primes.to_vec());
        if b.primes.len() != primes.len() || primes.iter().any(|&p| p == 2 || !numtheory::is_prime(p)) {
            return Err(format!("block {primes:?} is not a set of distinct odd primes"));
        }
        if &b.product != prod {
            return Err(format!("block product {} != {prod}", b.product));
        }
        if b.totient_ratio <= half || b.totient_ratio >= &half + eps {
            return Err(format!("phi(L)/L = {} outside (1/2, 1/2 + eps)", b.totient_ratio));
        }
        Ok(())
    };
    block_ok(&pr.l_primes, l, cert.mode == Mode::TwistedP)?;
    block_ok(&pr.lp_primes, lp, cert.mode == Mode::TwistedQ)?;
    if pr.l_primes.iter().any(|p| pr.lp_primes.contains(p)) {
        return Err("L and L' share a prime".into());
    }
    if &pr.m + 1u32 != m1 * l || pr.m != m2 * lp {
        return Err("M + 1 = m1 L and M = m2 L' fail".into());
    }
    if pr.big_n != l * lp * pr.n {
        return Err("N != n L L'".into());
    }
    Ok(())
}

/// Independent re-check of a certificate: split products and balance,
/// the approximation inequality, the size of `Q`, and parameter
/// consistency. Failed checks are reported, not raised; an `Err` means the
/// certificate could not be read at all.
pub fn verify_certificate(cert: &Certificate, policy: &Precision) -> Result<VerifyReport> {
    let x = parse_cert(cert)?;
    let mut checks = Vec::new();

    checks.push(match check_params(cert, &x) {
        Ok(()) => outcome("params", Status::Pass, "consistent"),
        Err(e) => outcome("params", Status::Fail, e),
    });

    let d = x.field.d().clone();
    let err_elem = x
        .alpha_int
        .scale_int(&cert.q)
        .try_sub(&QuadElem::from_int(&x.field, cert.p.clone()))?;
    let error = if err_elem.is_zero() {
        None
    } else {
        let bits = policy.start_bits;
        let iv = eval_interval(&err_elem, bits);
        let iv = if iv.hi_mantissa().is_negative() { iv.neg() } else { iv };
        Some(RealJson::from_interval(&iv, bits))
    };

    // approx
    checks.push(if cert.q.is_zero() || err_elem.is_zero() {
        outcome("approx", Status::Fail, "Q = 0 or zero error for irrational alpha")
    } else if cert.mode == Mode::Strong {
        // |x| |Q| <= |alpha - conj(alpha)| D e^2
        let spread = x.alpha_int.try_sub(&x.alpha_int.conjugate())?;
        let e = LogExpr::of(&err_elem)
            .int_pow(cert.q.clone(), BigRational::one())
            .elem_pow(&spread, -BigRational::one())
            .int_pow(d.clone(), -BigRational::one())
            .exp_const(r_int(-2));
        decide("approx", &e, Ordering::Less, policy, "|alpha Q - P| <= C/|Q|")
    } else {
        let exponent = cert.claimed_exponent.clone();
        let e = LogExpr::of(&err_elem).int_pow(cert.q.clone(), exponent);
        decide("approx", &e, Ordering::Less, policy, "|alpha Q - P| <= |Q|^-(1-eps)")
    });

    // split_P, split_Q
    let eps = cert.eps.clone().unwrap_or_else(BigRational::zero);
    let quarter = BigRational::new(1.into(), 4.into());
    let half = BigRational::new(1.into(), 2.into());
    for (name, total, split, p_side) in [
        ("split_P", &cert.p, &cert.p_split, true),
        ("split_Q", &cert.q, &cert.q_split, false),
    ] {
        if &(&split.0 * &split.1) != total {
            checks.push(outcome(name, Status::Fail, "factors do not multiply to the total"));
            continue;
        }
        let skip = cert.mode == Mode::Strong && p_side && cert.magnitude_bounds_skipped;
        if skip {
            checks.push(outcome(name, Status::Skipped, "product exact; balance skipped below the ratio threshold"));
            continue;
        }
        let small = if split.0.abs() <= split.1.abs() { &split.0 } else { &split.1 };
        if small.is_zero() {
            checks.push(outcome(name, Status::Fail, "zero factor"));
            continue;
        }
        let e_side = cert.mode.split_eps(&eps, p_side);
        // min >= e^-4 D^(-1/4) |total|^(1/2 - e')
        let e = LogExpr::new()
            .int_pow(small.clone(), BigRational::one())
            .exp_const(r_int(4))
            .int_pow(d.clone(), quarter.clone())
            .int_pow(total.clone(), -(&half - e_side));
        checks.push(decide(name, &e, Ordering::Greater, policy, "product exact, balance"));
    }

    // q_magnitude: |Q| / (s |alpha|^M |zeta|^N) in [1/2, 2]
    if cert.q.is_zero() {
        checks.push(outcome("q_magnitude", Status::Fail, "Q = 0"));
    } else {
        let mut e = LogExpr::new()
            .int_pow(cert.q.clone(), BigRational::one())
            .elem_pow(&x.alpha_int, -r_uint(&cert.params.m))
            .elem_pow(&x.zeta, -r_uint(&cert.params.big_n));
        if cert.mode.twisted() {
            e = e.int_pow(d.clone(), -half.clone());
        }
        let lo = decide("q_magnitude", &e.clone().int_pow(2, BigRational::one()), Ordering::Greater, policy, "ratio >= 1/2");
        let hi = decide("q_magnitude", &e.rational_pow(half.clone(), BigRational::one()), Ordering::Less, policy, "ratio <= 2");
        checks.push(if lo.status == Status::Fail { lo } else { hi });
    }

    let alpha_denominator_log2 = LogExpr::new()
        .int_pow(cert.q.clone(), BigRational::one())
        .int_pow(cert.a.clone(), BigRational::one())
        .log2_estimate();
    Ok(VerifyReport {
        mode: cert.mode,
        checks,
        error,
        alpha_denominator_log2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(d: i64) -> FieldDesc {
        FieldDesc::new(d).unwrap()
    }

    fn e(d: i64, s: &str) -> QuadElem {
        QuadElem::parse(&k(d), s).unwrap()
    }

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn choose_n_examples() {
        let z = e(2, "3+2*sqrt(2)");
        let p = Precision::default();
        let (l, lp) = (BigUint::from(3u32), BigUint::from(35u32));
        let c = choose_n(&e(2, "sqrt(2)"), &z, &l, &lp, &r(1, 4), false, &p).unwrap();
        assert_eq!(c.n, 1);
        assert!((c.margins_log2[2] - (66.7 - 34.1)).abs() < 1.0, "{:?}", c.margins_log2);
        assert_eq!(choose_n(&e(2, "2+sqrt(2)"), &z, &l, &lp, &r(1, 4), false, &p).unwrap().n, 1);
    }

    #[test]
    fn symmetric_sqrt2() {
        let alpha = e(2, "sqrt(2)");
        let c = symmetric_construct(&alpha, &r(1, 4), &ConstructOptions::default()).unwrap();
        assert!(c.report.passed(), "{:?}", c.report);
        let cert = &c.certificate;
        assert_eq!(cert.params.l, Some(BigUint::from(3u32)));
        assert_eq!(cert.params.lp, Some(BigUint::from(35u32)));
        assert_eq!(cert.params.m, BigUint::from(35u32));
        assert_eq!(cert.params.n, 1);
        // alpha^36 = 2^18 and alpha^35 = 2^17 sqrt(2)
        let z = e(2, "3+2*sqrt(2)");
        let z105 = z.pow_int(105u32);
        assert_eq!(cert.p, z105.trace_int().unwrap() << 18u32);
        assert_eq!(cert.q, z105.twisted_trace_int().unwrap() << 17u32);
    }

    #[test]
    fn rejects_bad_input() {
        let o = ConstructOptions::default();
        assert!(matches!(symmetric_construct(&e(2, "3"), &r(1, 4), &o), Err(Error::Precondition(_))));
        assert!(symmetric_construct(&e(2, "sqrt(2)"), &r(1, 2), &o).is_err());
        assert!(matches!(
            twisted_construct(&e(2, "sqrt(2)"), &r(1, 4), TwoSide::Both, &o),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn twisted_sides() {
        let o = ConstructOptions::default();
        let c = twisted_construct(&e(2, "sqrt(2)"), &r(1, 4), TwoSide::P, &o).unwrap();
        assert!(c.report.passed(), "{:?}", c.report);
        assert_eq!(c.certificate.params.l_primes, vec![2]);
        assert_eq!(c.certificate.params.lp_primes, vec![3]);
        let c = twisted_construct(&e(5, "(1+sqrt(5))/2"), &r(1, 4), TwoSide::Q, &o).unwrap();
        assert!(c.report.passed(), "{:?}", c.report);
        assert_eq!(c.certificate.params.lp_primes, vec![2]);
    }

    #[test]
    fn square_class_examples() {
        assert!(square_class_test(&e(2, "3+2*sqrt(2)")));
        assert!(!square_class_test(&e(2, "sqrt(2)")));
        assert!(!square_class_test(&e(2, "-3-2*sqrt(2)")));
        let (a, b) = square_decompose(&e(2, "3+2*sqrt(2)")).unwrap();
        assert_eq!((a, b), (BigInt::one(), e(2, "1+sqrt(2)")));
        let (a, b) = square_decompose(&e(3, "9")).unwrap();
        assert_eq!((a, b), (BigInt::one(), e(3, "3")));
        let alpha = e(5, "(7+3*sqrt(5))/2");
        let (a, b) = square_decompose(&alpha).unwrap();
        assert_eq!(b.try_mul(&b).unwrap(), alpha.scale_int(&a));
        assert!(square_decompose(&e(2, "sqrt(2)")).is_err());
    }

    #[test]
    fn strong_worked_values() {
        let o = ConstructOptions::default();
        let c = strong_certificate(&e(2, "3+2*sqrt(2)"), 1, &o).unwrap();
        let cert = &c.certificate;
        assert_eq!(cert.p, BigInt::from(280));
        assert_eq!(cert.p_split, (BigInt::from(20), BigInt::from(14)));
        assert_eq!(cert.q, BigInt::from(48));
        assert_eq!(cert.q_split, (BigInt::from(8), BigInt::from(6)));
        assert!(c.report.passed(), "{:?}", c.report);
        let c2 = strong_certificate(&e(2, "3+2*sqrt(2)"), 2, &o).unwrap();
        assert_eq!(c2.certificate.q, BigInt::from(1632));
        assert!(strong_certificate(&e(2, "sqrt(2)"), 1, &o).is_err());
    }

    #[test]
    fn tampered_certificate_fails() {
        let o = ConstructOptions::default();
        let mut cert = strong_certificate(&e(2, "3+2*sqrt(2)"), 1, &o).unwrap().certificate;
        cert.p += 1;
        let rep = verify_certificate(&cert, &o.precision).unwrap();
        assert!(!rep.passed());
        assert!(!rep.summary().split_p);
    }

    #[test]
    fn certificate_json_round_trip() {
        let o = ConstructOptions::default();
        let cert = symmetric_construct(&e(5, "(1+sqrt(5))/2"), &r(1, 4), &o).unwrap().certificate;
        let s = serde_json::to_string(&cert).unwrap();
        let back: Certificate = serde_json::from_str(&s).unwrap();
        assert_eq!(back, cert);
        assert!(verify_certificate(&back, &o.precision).unwrap().passed());
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert!(v["P"].is_string() && v["params"]["M"].is_string() && v["D"] == "5");
    }
}
