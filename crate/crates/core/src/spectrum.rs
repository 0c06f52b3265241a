//! The spectrum `{alpha m^2 + n^2 : m, n >= 1}` in increasing order, its
//! minimal consecutive gaps and the Weyl growth check.
//!
//! Levels are fixed-point enclosures `[lo, hi] * 2^-p` built from an
//! enclosure of `alpha`. The sequential path is a k-way merge over the rows
//! `(alpha m^2 + n^2)_n` keyed by `(lo, m)`; the parallel path generates
//! windows of `lo` values by row chunks and sorts each window by the same
//! key, so both orders coincide. Every emitted level must lie strictly above
//! the previous one; an overlap restarts the run at doubled precision.

use std::cmp::{Ordering, Reverse};
use std::collections::{BinaryHeap, VecDeque};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::interval::{ceil_shr, floor_shr, Interval};
use crate::json::RealJson;
use crate::par::{self, Execution};
use crate::qfield::{eval_interval, QuadElem};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpectrumConfig {
    /// Fractional bits of the fixed-point enclosures; raised automatically
    /// to `2 log2(lambda_max) + 64` when lower.
    pub precision_bits: u64,
    pub max_precision_bits: u64,
    pub execution: Execution,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            precision_bits: 192,
            max_precision_bits: 1 << 14,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpectrumLevel {
    pub value: Interval,
    pub m: u64,
    pub n: u64,
}

/// `lambda_{i+1} - lambda_i`, with the exact form `dm2 * alpha + dn2`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GapRecord {
    /// 1-based index of the lower level.
    pub i: u64,
    pub lower: (u64, u64),
    pub upper: (u64, u64),
    pub lambda_i: Interval,
    pub lambda_next: Interval,
    pub gap: Interval,
    pub dm2: i128,
    pub dn2: i128,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProfileEntry {
    pub n: u64,
    pub delta_min: GapRecord,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Profile {
    pub entries: Vec<ProfileEntry>,
    pub precision_bits: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct WeylReport {
    #[serde(rename = "N")]
    pub n: u64,
    pub lambda_n: f64,
    pub ratio: f64,
    pub precision_bits: u64,
}

/// Enclosure of `alpha` as `[a_lo, a_hi] * 2^-p`.
struct Fixed {
    p: u64,
    a_lo: BigInt,
    a_hi: BigInt,
    one: BigInt,
}

impl Fixed {
    fn new(alpha: &QuadElem, p: u64) -> Self {
        let top = eval_interval(alpha, 64).mid_log2().max(0.0) as u64;
        let iv = eval_interval(alpha, p + top + 8);
        let shift = iv.exponent() + p as i64;
        let conv = |x: &BigInt, up: bool| {
            if shift >= 0 {
                x << shift as u64
            } else if up {
                ceil_shr(x, (-shift) as u64)
            } else {
                floor_shr(x, (-shift) as u64)
            }
        };
        Fixed {
            p,
            a_lo: conv(iv.lo_mantissa(), false),
            a_hi: conv(iv.hi_mantissa(), true),
            one: BigInt::one() << p,
        }
    }

    fn lo(&self, m: u64, n: u64) -> BigInt {
        let m2 = BigInt::from(m as u128 * m as u128);
        &self.a_lo * m2 + (BigInt::from(n as u128 * n as u128) << self.p)
    }

    fn hi(&self, m: u64, n: u64) -> BigInt {
        let m2 = BigInt::from(m as u128 * m as u128);
        &self.a_hi * m2 + (BigInt::from(n as u128 * n as u128) << self.p)
    }
}

type Key = (BigInt, u64, u64);

/// Sequential k-way merge over the rows.
struct HeapStream<'a> {
    fx: &'a Fixed,
    heap: BinaryHeap<Reverse<Key>>,
}

impl<'a> HeapStream<'a> {
    fn new(fx: &'a Fixed) -> Self {
        let mut heap = BinaryHeap::new();
        heap.push(Reverse((fx.lo(1, 1), 1, 1)));
        HeapStream { fx, heap }
    }
}

impl Iterator for HeapStream<'_> {
    type Item = Key;

    fn next(&mut self) -> Option<Key> {
        let Reverse((lo, m, n)) = self.heap.pop()?;
        self.heap.push(Reverse((self.fx.lo(m, n + 1), m, n + 1)));
        if n == 1 {
            self.heap.push(Reverse((self.fx.lo(m + 1, 1), m + 1, 1)));
        }
        Some((lo, m, n))
    }
}

/// Windowed generation: all levels with `lo` in `[start, start + width)`,
/// rows split across workers, each window sorted by `(lo, m)`.
struct WindowStream<'a> {
    fx: &'a Fixed,
    exec: Execution,
    width: BigInt,
    start: BigInt,
    buf: VecDeque<Key>,
}

const ROWS_PER_TASK: u64 = 32;

impl<'a> WindowStream<'a> {
    fn new(fx: &'a Fixed, exec: Execution, levels_per_window: f64, density: f64) -> Self {
        let w = (levels_per_window / density).max(4.0).ceil() as u64;
        WindowStream {
            fx,
            exec,
            width: BigInt::from(w) << fx.p,
            start: BigInt::zero(),
            buf: VecDeque::new(),
        }
    }

    /// Smallest `n >= 1` with `lo(m, n) >= bound`.
    fn first_n(&self, m: u64, bound: &BigInt) -> u64 {
        let t = bound - &self.fx.a_lo * BigInt::from(m as u128 * m as u128);
        if t <= self.fx.one {
            return 1;
        }
        let q = ceil_shr(&t, self.fx.p);
        let mut n = q.sqrt().to_u64().expect("row index fits u64").max(1);
        while self.fx.lo(m, n) < *bound {
            n += 1;
        }
        while n > 1 && self.fx.lo(m, n - 1) >= *bound {
            n -= 1;
        }
        n
    }

    fn fill(&mut self) {
        while self.buf.is_empty() {
            let x0 = self.start.clone();
            let x1 = &x0 + &self.width;
            let mut rows = 0u64;
            while self.fx.lo(rows + 1, 1) < x1 {
                rows += 1;
            }
            let chunks: Vec<(u64, u64)> = (0..rows.div_ceil(ROWS_PER_TASK))
                .map(|c| (c * ROWS_PER_TASK + 1, ((c + 1) * ROWS_PER_TASK).min(rows)))
                .collect();
            let parts = par::map(self.exec, &chunks, |&(m_from, m_to)| {
                let mut out = Vec::new();
                for m in m_from..=m_to {
                    let mut n = self.first_n(m, &x0);
                    loop {
                        let lo = self.fx.lo(m, n);
                        if lo >= x1 {
                            break;
                        }
                        out.push((lo, m, n));
                        n += 1;
                    }
                }
                out
            });
            let mut all: Vec<Key> = parts.into_iter().flatten().collect();
            all.sort_unstable_by(|a, b| (&a.0, a.1).cmp(&(&b.0, b.1)));
            self.buf.extend(all);
            self.start = x1;
        }
    }
}

impl Iterator for WindowStream<'_> {
    type Item = Key;

    fn next(&mut self) -> Option<Key> {
        self.fill();
        self.buf.pop_front()
    }
}

trait Sink {
    fn reset(&mut self);
    fn push(&mut self, index: u64, level: SpectrumLevel);
}

fn alpha_f64(alpha: &QuadElem) -> f64 {
    eval_interval(alpha, 64).mid_f64()
}

fn check_alpha(alpha: &QuadElem) -> Result<()> {
    if alpha.is_rational() {
        return Err(Error::Precondition(format!("alpha = {alpha} must be irrational")));
    }
    if !alpha.is_positive() {
        return Err(Error::Precondition(format!("alpha = {alpha} must be positive")));
    }
    Ok(())
}

/// Generous upper estimate of `lambda_count`.
fn lambda_estimate(a: f64, count: u64) -> f64 {
    let c = count as f64;
    4.0 * a.sqrt() / std::f64::consts::PI * c * 1.25 + 4.0 * (c * a.sqrt()).sqrt() + a + 2.0
}

/// Fractional bits actually used for `count` levels.
pub fn effective_precision(alpha: &QuadElem, count: u64, requested: u64) -> u64 {
    let lam = lambda_estimate(alpha_f64(alpha), count);
    requested.max(2 * lam.log2().ceil() as u64 + 64)
}

fn run(alpha: &QuadElem, count: u64, cfg: &SpectrumConfig, sink: &mut dyn Sink) -> Result<u64> {
    check_alpha(alpha)?;
    if count == 0 {
        return Err(Error::Precondition("need at least one level".into()));
    }
    let mut p = effective_precision(alpha, count, cfg.precision_bits);
    let a = alpha_f64(alpha);
    let density = std::f64::consts::PI / (4.0 * a.sqrt());
    loop {
        if p > cfg.max_precision_bits {
            return Err(Error::PrecisionExhausted { bits: p });
        }
        sink.reset();
        let fx = Fixed::new(alpha, p);
        let stream: Box<dyn Iterator<Item = Key>> = if cfg.execution.is_parallel() {
            let per_window = (count as f64 / 8.0).clamp(1024.0, (1u64 << 18) as f64);
            Box::new(WindowStream::new(&fx, cfg.execution, per_window, density))
        } else {
            Box::new(HeapStream::new(&fx))
        };
        let mut prev_hi: Option<BigInt> = None;
        let mut separated = true;
        for (i, (lo, m, n)) in stream.take(count as usize).enumerate() {
            let hi = fx.hi(m, n);
            if let Some(ph) = &prev_hi {
                if *ph >= lo {
                    separated = false;
                    break;
                }
            }
            prev_hi = Some(hi.clone());
            sink.push(
                i as u64 + 1,
                SpectrumLevel {
                    value: Interval::from_parts(lo, hi, -(p as i64)),
                    m,
                    n,
                },
            );
        }
        if separated {
            return Ok(p);
        }
        log::debug!("overlapping enclosures at {p} bits; retrying");
        p *= 2;
    }
}

struct Collect(Vec<SpectrumLevel>);

impl Sink for Collect {
    fn reset(&mut self) {
        self.0.clear();
    }

    fn push(&mut self, _: u64, level: SpectrumLevel) {
        self.0.push(level);
    }
}

/// The first `count` levels in strictly increasing order.
pub fn enumerate_levels(alpha: &QuadElem, count: u64, cfg: &SpectrumConfig) -> Result<Vec<SpectrumLevel>> {
    let mut sink = Collect(Vec::new());
    run(alpha, count, cfg, &mut sink)?;
    Ok(sink.0)
}

fn gap_record(i: u64, a: &SpectrumLevel, b: &SpectrumLevel) -> GapRecord {
    let exp = a.value.exponent();
    let gap = Interval::from_parts(
        b.value.lo_mantissa() - a.value.hi_mantissa(),
        b.value.hi_mantissa() - a.value.lo_mantissa(),
        exp,
    );
    let sq = |x: u64| (x as i128) * (x as i128);
    GapRecord {
        i,
        lower: (a.m, a.n),
        upper: (b.m, b.n),
        lambda_i: a.value.clone(),
        lambda_next: b.value.clone(),
        gap,
        dm2: sq(b.m) - sq(a.m),
        dn2: sq(b.n) - sq(a.n),
    }
}

/// Exact `a.gap < b.gap`, using the enclosures when they already decide it.
fn gap_less(alpha: &QuadElem, a: &GapRecord, b: &GapRecord) -> bool {
    match a.gap.certain_cmp(&b.gap) {
        Some(Ordering::Less) => true,
        Some(Ordering::Greater) => false,
        _ => {
            let k = BigInt::from(a.dm2 - b.dm2);
            let j = BigInt::from(a.dn2 - b.dn2);
            let diff = alpha
                .scale_int(&k)
                .try_add(&QuadElem::from_int(alpha.field(), j))
                .expect("same field");
            diff.signum() == Ordering::Less
        }
    }
}

struct GapSink<'a> {
    alpha: &'a QuadElem,
    checkpoints: &'a [u64],
    next_cp: usize,
    prev: Option<SpectrumLevel>,
    best: Option<GapRecord>,
    out: Vec<ProfileEntry>,
}

impl Sink for GapSink<'_> {
    fn reset(&mut self) {
        self.next_cp = 0;
        self.prev = None;
        self.best = None;
        self.out.clear();
    }

    fn push(&mut self, index: u64, level: SpectrumLevel) {
        if let Some(prev) = &self.prev {
            let rec = gap_record(index - 1, prev, &level);
            let better = match &self.best {
                None => true,
                Some(b) => gap_less(self.alpha, &rec, b),
            };
            if better {
                self.best = Some(rec);
            }
        }
        while self.next_cp < self.checkpoints.len() && self.checkpoints[self.next_cp] == index {
            self.out.push(ProfileEntry {
                n: index,
                delta_min: self.best.clone().expect("checkpoints start at 2"),
            });
            self.next_cp += 1;
        }
        self.prev = Some(level);
    }
}

/// `delta_min(N)` at each checkpoint `N`, from one pass over the merged
/// levels. Ties go to the smaller index.
pub fn min_gap_profile(alpha: &QuadElem, checkpoints: &[u64], cfg: &SpectrumConfig) -> Result<Profile> {
    if checkpoints.is_empty() {
        return Err(Error::Precondition("no checkpoints".into()));
    }
    if checkpoints[0] < 2 || checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Precondition(
            "checkpoints must be strictly increasing and at least 2".into(),
        ));
    }
    let mut sink = GapSink {
        alpha,
        checkpoints,
        next_cp: 0,
        prev: None,
        best: None,
        out: Vec::new(),
    };
    let bits = run(alpha, *checkpoints.last().unwrap(), cfg, &mut sink)?;
    Ok(Profile {
        entries: sink.out,
        precision_bits: bits,
    })
}

struct Last(Option<SpectrumLevel>);

impl Sink for Last {
    fn reset(&mut self) {
        self.0 = None;
    }

    fn push(&mut self, _: u64, level: SpectrumLevel) {
        self.0 = Some(level);
    }
}

/// `lambda_N * pi / (4 sqrt(alpha) N)`, which tends to 1.
pub fn weyl_check(alpha: &QuadElem, n: u64, cfg: &SpectrumConfig) -> Result<WeylReport> {
    if n < 10_000 {
        return Err(Error::Precondition(format!("weyl_check needs N >= 10^4, got {n}")));
    }
    let mut sink = Last(None);
    let bits = run(alpha, n, cfg, &mut sink)?;
    let lambda_n = sink.0.expect("n >= 1").value.mid_f64();
    let ratio = lambda_n * std::f64::consts::PI / (4.0 * alpha_f64(alpha).sqrt() * n as f64);
    Ok(WeylReport {
        n,
        lambda_n,
        ratio,
        precision_bits: bits,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct GapJson {
    #[serde(rename = "N")]
    pub n: u64,
    pub delta_min: RealJson,
    /// Exact gap as `dm2 * alpha + dn2`.
    pub dm2: String,
    pub dn2: String,
    pub i: u64,
    pub m1: u64,
    pub n1: u64,
    pub m2: u64,
    pub n2: u64,
    pub lambda_i: RealJson,
    pub lambda_next: RealJson,
}

impl ProfileEntry {
    pub fn to_json(&self, precision_bits: u64) -> GapJson {
        let g = &self.delta_min;
        GapJson {
            n: self.n,
            delta_min: RealJson::from_interval(&g.gap, precision_bits),
            dm2: g.dm2.to_string(),
            dn2: g.dn2.to_string(),
            i: g.i,
            m1: g.lower.0,
            n1: g.lower.1,
            m2: g.upper.0,
            n2: g.upper.1,
            lambda_i: RealJson::from_interval(&g.lambda_i, precision_bits),
            lambda_next: RealJson::from_interval(&g.lambda_next, precision_bits),
        }
    }
}

pub const CSV_HEADER: &str = "N,delta_min,i,m1,n1,m2,n2,lambda_i,lambda_next";

impl ProfileEntry {
    pub fn csv_row(&self) -> String {
        let g = &self.delta_min;
        format!(
            "{},{:.17e},{},{},{},{},{},{:.17e},{:.17e}",
            self.n,
            g.gap.mid_f64(),
            g.i,
            g.lower.0,
            g.lower.1,
            g.upper.0,
            g.upper.1,
            g.lambda_i.mid_f64(),
            g.lambda_next.mid_f64()
        )
    }
}

impl GapRecord {
    /// True if the gap enclosure is positive, as simplicity requires.
    pub fn is_positive(&self) -> bool {
        self.gap.lo_mantissa().is_positive()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfield::FieldDesc;

    fn e(d: i64, s: &str) -> QuadElem {
        QuadElem::parse(&FieldDesc::new(d).unwrap(), s).unwrap()
    }

    fn seq() -> SpectrumConfig {
        SpectrumConfig {
            execution: Execution::Sequential,
            ..SpectrumConfig::default()
        }
    }

    #[test]
    fn first_levels_sqrt2() {
        let lv = enumerate_levels(&e(2, "sqrt(2)"), 3, &seq()).unwrap();
        let idx: Vec<_> = lv.iter().map(|l| (l.m, l.n)).collect();
        assert_eq!(idx, vec![(1, 1), (1, 2), (2, 1)]);
        assert!((lv[2].value.mid_f64() - (4.0 * 2f64.sqrt() + 1.0)).abs() < 1e-12);
        let lv = enumerate_levels(&e(2, "3+2*sqrt(2)"), 1, &seq()).unwrap();
        assert_eq!((lv[0].m, lv[0].n), (1, 1));
    }

    #[test]
    fn parallel_matches_sequential() {
        let alpha = e(5, "(1+sqrt(5))/2");
        let a = enumerate_levels(&alpha, 5000, &seq()).unwrap();
        let cfg = SpectrumConfig {
            execution: Execution::Parallel,
            ..SpectrumConfig::default()
        };
        let b = enumerate_levels(&alpha, 5000, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn profile_is_non_increasing() {
        let p = min_gap_profile(&e(2, "sqrt(2)"), &[10, 100, 1000], &seq()).unwrap();
        assert_eq!(p.entries.len(), 3);
        for w in p.entries.windows(2) {
            assert!(!gap_less(&e(2, "sqrt(2)"), &w[0].delta_min, &w[1].delta_min));
        }
        assert!(p.entries.iter().all(|x| x.delta_min.is_positive()));
        assert!(min_gap_profile(&e(2, "sqrt(2)"), &[10, 10], &seq()).is_err());
    }

    #[test]
    fn low_precision_escalates() {
        let cfg = SpectrumConfig {
            precision_bits: 8,
            ..seq()
        };
        assert!(effective_precision(&e(2, "sqrt(2)"), 100, 8) >= 64);
        assert!(enumerate_levels(&e(2, "sqrt(2)"), 100, &cfg).is_ok());
        let capped = SpectrumConfig {
            max_precision_bits: 32,
            ..cfg
        };
        assert!(matches!(
            enumerate_levels(&e(2, "sqrt(2)"), 100, &capped),
            Err(Error::PrecisionExhausted { .. })
        ));
    }
}
