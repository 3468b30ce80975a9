use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::cf::{cf_expand_surd, convergents, golden_cf, ContinuedFraction, Convergent};
use super::construct::{construct_jarnik_prefix, DEFAULT_BIT_BUDGET};
use super::theta::ThetaSpec;
use crate::error::{Error, Result};
use crate::realfield::{log2_biguint, BigReal, PsiFunction};

/// Working precision is never raised beyond this many bits.
pub const MAX_PRECISION: u32 = 1 << 22;

const LN2: f64 = std::f64::consts::LN_2;

/// Caches θ at increasing precisions.
struct ThetaBalls<'a> {
    theta: &'a ThetaSpec,
    cache: BTreeMap<u32, BigReal>,
}

impl<'a> ThetaBalls<'a> {
    fn new(theta: &'a ThetaSpec) -> Self {
        ThetaBalls {
            theta,
            cache: BTreeMap::new(),
        }
    }

    fn at(&mut self, prec: u32) -> Result<&BigReal> {
        if !self.cache.contains_key(&prec) {
            let b = self.theta.ball(prec)?;
            self.cache.insert(prec, b);
        }
        Ok(&self.cache[&prec])
    }
}

fn start_precision(m: &BigInt) -> u32 {
    128 + 2 * m.bits() as u32
}

/// ‖mθ‖ as a ball whose radius is at most 2^{-20} of its value, raising the
/// precision as needed.
pub fn nearest_distance(theta: &ThetaSpec, m: &BigInt) -> Result<BigReal> {
    theta.require_irrational()?;
    if !m.is_positive() {
        return Err(Error::domain("nearest_distance needs m ≥ 1"));
    }
    let mut balls = ThetaBalls::new(theta);
    distance_to(&mut balls, m, |d| {
        d.is_exact() || d.log2_radius() < d.log2_abs() - 20.0
    })
}

/// Raises precision until `done(‖mθ‖)` holds.
fn distance_to(
    balls: &mut ThetaBalls<'_>,
    m: &BigInt,
    mut done: impl FnMut(&BigReal) -> bool,
) -> Result<BigReal> {
    let mut prec = start_precision(m);
    let mut last_radius = f64::INFINITY;
    loop {
        let x = balls.at(prec)?;
        let d = x.mul_int(m).nearest_int_distance();
        if done(&d) {
            return Ok(d);
        }
        let r = x.log2_radius();
        // A ball that stops shrinking (a Jarník number at its materialized
        // depth) cannot be refined by more bits.
        if prec >= MAX_PRECISION || r > last_radius - (prec as f64) / 4.0 {
            return Err(Error::exhausted(
                format!("certifying ‖{m}·θ‖ for θ = {}", balls.theta),
                None,
            ));
        }
        last_radius = r;
        prec = prec.saturating_mul(2).min(MAX_PRECISION);
    }
}

/// Whether |n − mθ| < 1/(2m) after reducing n/m; by Legendre's criterion a
/// true answer means n/m is a convergent of θ.
pub fn legendre_is_convergent(theta: &ThetaSpec, n: &BigInt, m: &BigInt) -> Result<bool> {
    theta.require_irrational()?;
    if m.is_zero() {
        return Err(Error::domain("legendre_is_convergent needs m ≠ 0"));
    }
    let g = n.gcd(m);
    let (mut n, mut m) = (n / &g, m / &g);
    if m.is_negative() {
        n = -n;
        m = -m;
    }
    let bound = BigRational::new(BigInt::one(), BigInt::from(2) * &m);
    let mut balls = ThetaBalls::new(theta);
    let mut prec = start_precision(&m);
    loop {
        let x = balls.at(prec)?;
        let gap = x.mul_int(&m).sub(&BigReal::from_int(n.clone(), prec)).abs();
        if gap.upper_rational() < bound {
            return Ok(true);
        }
        if gap.lower_rational() >= bound {
            return Ok(false);
        }
        if prec >= MAX_PRECISION {
            return Err(Error::exhausted(format!("Legendre test of {n}/{m}"), None));
        }
        prec = prec.saturating_mul(2).min(MAX_PRECISION);
    }
}

#[derive(Debug, Clone)]
pub struct ApproximationEvent {
    pub m: BigInt,
    /// ‖mθ‖.
    pub dist: BigReal,
    /// log2 of the threshold 1/ψ(m).
    pub log2_threshold: f64,
    pub hit: bool,
    /// Whether m is a convergent denominator.
    pub convergent: bool,
}

impl ApproximationEvent {
    pub fn threshold(&self) -> f64 {
        self.log2_threshold.exp2()
    }

    /// log2(‖mθ‖·ψ(m)); negative exactly for hits.
    pub fn log2_product(&self) -> f64 {
        self.dist.log2_abs() - self.log2_threshold
    }
}

#[derive(Debug, Clone)]
pub struct ScanReport {
    /// Hits in increasing m, plus every convergent denominator ≤ M.
    pub events: Vec<ApproximationEvent>,
    /// Every m up to here was decided.
    pub certified_through: BigInt,
    pub complete: bool,
    /// Only convergent denominators and their multiples were examined.
    pub fast_path: bool,
    /// Reason the scan stopped early.
    pub stopped: Option<Error>,
}

impl ScanReport {
    pub fn hits(&self) -> impl Iterator<Item = &ApproximationEvent> {
        self.events.iter().filter(|e| e.hit)
    }

    /// The least observed ‖mθ‖·ψ(m) over convergent denominators, as log2.
    pub fn log2_inf_product(&self) -> Option<f64> {
        self.events
            .iter()
            .filter(|e| e.convergent)
            .map(|e| e.log2_product())
            .reduce(f64::min)
    }
}

/// log2(1/ψ(m)).
fn log2_threshold(psi: &PsiFunction, m: &BigInt) -> f64 {
    let x = m.to_f64().unwrap_or(f64::INFINITY);
    -psi.ln_eval(x) / LN2
}

/// Decides ‖mθ‖ < 1/ψ(m), refining θ or evaluating ψ(m) exactly when the
/// double-precision comparison is too close to call.
fn decide(
    balls: &mut ThetaBalls<'_>,
    psi: &PsiFunction,
    m: &BigInt,
    convergent: bool,
) -> Result<ApproximationEvent> {
    let thr = log2_threshold(psi, m);
    let margin = 1e-9 * thr.abs().max(1.0);
    let dist = distance_to(balls, m, |d| {
        let hi = d.abs_upper().log2_abs();
        let lo = d.lower();
        let lo = if lo.sign() == Some(std::cmp::Ordering::Greater) {
            lo.log2_abs()
        } else {
            f64::NEG_INFINITY
        };
        hi < thr - margin || lo > thr + margin || d.log2_radius() < d.log2_abs() - 40.0
    })?;
    let log2_d = dist.log2_abs();
    let hit = if (log2_d - thr).abs() > margin + 1e-6 {
        log2_d < thr
    } else {
        exact_compare(&dist, psi, m)?
    };
    Ok(ApproximationEvent {
        m: m.clone(),
        dist,
        log2_threshold: thr,
        hit,
        convergent,
    })
}

/// dist·ψ(m) < 1, certified.
fn exact_compare(dist: &BigReal, psi: &PsiFunction, m: &BigInt) -> Result<bool> {
    decide_hit(dist, psi, m)?
        .ok_or_else(|| Error::exhausted(format!("comparing ‖{m}θ‖ with 1/ψ({m})"), None))
}

/// Whether every point of the ball `dist` lies below 1/ψ(m) (`Some(true)`),
/// none does (`Some(false)`), or the ball straddles it (`None`).
pub fn decide_hit(dist: &BigReal, psi: &PsiFunction, m: &BigInt) -> Result<Option<bool>> {
    let one = BigReal::from_int(1, dist.prec());
    let product = match psi.exact_at_int(m, 1 << 20) {
        Some(v) => {
            let scale = BigReal::from_rational(&v, dist.prec())?;
            dist.mul(&scale)
        }
        None => dist.mul(&psi.eval_ball(&BigReal::from_int(m.clone(), dist.prec()))?),
    };
    Ok(product
        .cmp_certified(&one)
        .map(|o| o == std::cmp::Ordering::Less))
}

/// Convergents of θ with denominator ≤ `bound`, plus the next one when it is
/// known. Returns whether the list provably contains every convergent
/// denominator ≤ `bound`.
fn convergents_upto(theta: &ThetaSpec, bound: &BigInt) -> Result<(Vec<Convergent>, bool)> {
    let exact_cf = matches!(
        theta,
        ThetaSpec::Surd(_) | ThetaSpec::Golden | ThetaSpec::CfLiteral(_) | ThetaSpec::Jarnik { .. }
    );
    if exact_cf {
        let mut k = 8;
        loop {
            let cf = available_prefix(theta, k)?;
            let c = convergents(&cf);
            if c.last().is_some_and(|c| &c.m > bound) {
                return Ok((c, true));
            }
            if cf.depth() < k {
                let last_m = c.last().map(|c| c.m.clone()).unwrap_or_default();
                let prev_m = if c.len() >= 2 {
                    c[c.len() - 2].m.clone()
                } else {
                    BigInt::zero()
                };
                // A literal has no further convergents; otherwise the next
                // denominator is at least m_K + m_{K−1}.
                let complete =
                    matches!(theta, ThetaSpec::CfLiteral(_)) || &last_m + &prev_m > *bound;
                return Ok((c, complete));
            }
            k *= 2;
        }
    }
    expand_until(theta, bound)
}

fn available_prefix(theta: &ThetaSpec, k: usize) -> Result<ContinuedFraction> {
    match theta {
        ThetaSpec::Surd(d) => cf_expand_surd(*d, k),
        ThetaSpec::Golden => Ok(golden_cf(k)),
        ThetaSpec::CfLiteral(cf) => Ok(cf.truncate(k)),
        ThetaSpec::Jarnik { psi, .. } => Ok(construct_jarnik_prefix(psi, k, DEFAULT_BIT_BUDGET)?.0),
        _ => unreachable!("only variants with exact continued fractions"),
    }
}

/// Lockstep Euclid on the ball endpoints until a denominator exceeds
/// `bound`; a quotient that is not yet certified still bounds the next
/// denominator from below.
fn expand_until(theta: &ThetaSpec, bound: &BigInt) -> Result<(Vec<Convergent>, bool)> {
    let mut prec = 2 * bound.bits() as u32 + 128;
    loop {
        let ball = theta.ball(prec)?;
        let mut lo = ball.lower_rational();
        let mut hi = ball.upper_rational();
        let mut out: Vec<Convergent> = Vec::new();
        let (mut n1, mut n2) = (BigInt::one(), BigInt::zero());
        let (mut m1, mut m2) = (BigInt::zero(), BigInt::one());
        let mut k = 0;
        loop {
            let f_lo = lo.floor();
            let f_hi = hi.floor();
            if f_lo != f_hi {
                let a_min = f_lo.min(f_hi).to_integer().max(BigInt::one());
                if &a_min * &m1 + &m2 > *bound {
                    return Ok((out, true));
                }
                break;
            }
            let a = f_lo.to_integer();
            let n = &a * &n1 + &n2;
            let m = &a * &m1 + &m2;
            n2 = std::mem::replace(&mut n1, n.clone());
            m2 = std::mem::replace(&mut m1, m.clone());
            let past = &m > bound;
            out.push(Convergent { k, n, m });
            if past {
                return Ok((out, true));
            }
            k += 1;
            let r_lo = &lo - &f_lo;
            let r_hi = &hi - &f_hi;
            if r_lo.is_zero() || r_hi.is_zero() {
                break;
            }
            let next_lo = r_hi.recip();
            hi = r_lo.recip();
            lo = next_lo;
        }
        if prec >= MAX_PRECISION {
            return Ok((out, false));
        }
        prec = prec.saturating_mul(2).min(MAX_PRECISION);
    }
}

/// Whether ψ(m) ≥ 2m on 1 ≤ m ≤ M, so that every hit satisfies Legendre's
/// criterion.
fn legendre_fast_path(psi: &PsiFunction, bound: u64) -> bool {
    let ok = |m: f64| psi.ln_eval(m) >= (2.0 * m).ln();
    let dense = bound.min(10_000_000);
    if !(1..=dense).all(|m| ok(m as f64)) {
        return false;
    }
    // Beyond the dense range check a geometric sample.
    let mut m = dense as f64;
    while m < bound as f64 {
        m = (m * 1.01).min(bound as f64);
        if !ok(m) {
            return false;
        }
    }
    true
}

/// All m ≤ M with ‖mθ‖ < 1/ψ(m), together with the convergent denominators
/// ≤ M as near-misses.
///
/// When ψ(m) ≥ 2m throughout, hits are confined to multiples d·m_k of
/// convergent denominators, and for each k the hits form an initial run of d.
pub fn approximability_scan(
    theta: &ThetaSpec,
    psi: &PsiFunction,
    bound: u64,
) -> Result<ScanReport> {
    theta.require_irrational()?;
    if bound == 0 {
        return Err(Error::domain("approximability_scan needs M ≥ 1"));
    }
    let big_bound = BigInt::from(bound);
    let fast = legendre_fast_path(psi, bound);
    let (convs, conv_complete) = convergents_upto(theta, &big_bound)?;
    let conv_ms: Vec<BigInt> = convs
        .iter()
        .map(|c| c.m.clone())
        .filter(|m| m <= &big_bound)
        .collect();
    let mut balls = ThetaBalls::new(theta);
    let mut events: BTreeMap<BigInt, ApproximationEvent> = BTreeMap::new();
    let mut stopped = None;
    let mut certified = BigInt::zero();

    if fast {
        for mk in &conv_ms {
            let mut d = BigInt::one();
            loop {
                let m = &d * mk;
                if m > big_bound {
                    break;
                }
                let ev = match decide(&mut balls, psi, &m, d.is_one()) {
                    Ok(ev) => ev,
                    Err(e) => {
                        stopped = Some(e);
                        break;
                    }
                };
                let hit = ev.hit;
                if hit || d.is_one() {
                    events.insert(m.clone(), ev);
                }
                if !hit {
                    break;
                }
                d += 1;
            }
            if stopped.is_some() {
                break;
            }
        }
        if stopped.is_none() {
            certified = if conv_complete {
                big_bound.clone()
            } else {
                conv_ms.last().cloned().unwrap_or_default()
            };
        }
    } else {
        let is_conv = |m: &BigInt| conv_ms.binary_search(m).is_ok();
        for m in 1..=bound {
            let m = BigInt::from(m);
            match decide(&mut balls, psi, &m, is_conv(&m)) {
                Ok(ev) => {
                    if ev.hit || ev.convergent {
                        events.insert(m.clone(), ev);
                    }
                    certified = m;
                }
                Err(e) => {
                    stopped = Some(e);
                    break;
                }
            }
        }
    }
    let complete = stopped.is_none() && certified == big_bound;
    if stopped.is_none() && !complete {
        stopped = Some(Error::exhausted(
            format!("listing convergent denominators of {theta} up to {bound}"),
            None,
        ));
    }
    Ok(ScanReport {
        events: events.into_values().collect(),
        certified_through: certified,
        complete,
        fast_path: fast,
        stopped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaseEstimate {
    pub estimate: f64,
    /// Interval induced by 1/(m_{k+1} + m_k) < ‖m_kθ‖ < 1/m_{k+1}.
    pub lower: f64,
    pub upper: f64,
    /// Index k attaining the maximum.
    pub index: usize,
}

/// Smallest m_k that enters the estimator; below it the m_k-th roots are
/// dominated by the first few convergents of any θ.
pub const BASE_BURN_IN: u64 = 16;

/// max_k (1/‖m_kθ‖)^{1/m_k}, using m_{k+1} in place of 1/‖m_kθ‖.
pub fn irrationality_base_estimate(cf: &ContinuedFraction) -> Result<BaseEstimate> {
    let c = convergents(cf);
    if c.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: c.len(),
        });
    }
    let root = |x: &BigInt, m: &BigInt| -> f64 {
        let lg = log2_biguint(x.magnitude());
        let mf = m.to_f64().unwrap_or(f64::INFINITY);
        (lg / mf).exp2()
    };
    let burn = BigInt::from(BASE_BURN_IN);
    let mut candidates: Vec<usize> = (1..c.len() - 1).filter(|&k| c[k].m >= burn).collect();
    if candidates.is_empty() {
        candidates.push(c.len() - 2);
    }
    let mut best: Option<BaseEstimate> = None;
    for k in candidates {
        let (mk, mk1) = (&c[k].m, &c[k + 1].m);
        let est = BaseEstimate {
            estimate: root(mk1, mk).max(1.0),
            lower: root(mk1, mk).max(1.0),
            upper: root(&(mk1 + mk), mk).max(1.0),
            index: k,
        };
        if best.as_ref().is_none_or(|b| est.estimate > b.estimate) {
            best = Some(est);
        }
    }
    Ok(best.expect("at least one candidate"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::realfield::psi_parse;

    fn theta(s: &str) -> ThetaSpec {
        ThetaSpec::parse(s).unwrap()
    }

    #[test]
    fn distances() {
        let d = nearest_distance(&theta("surd:2"), &BigInt::from(5))
            .unwrap()
            .to_f64();
        assert!((d - 0.0710678118654752).abs() < 1e-15);
        let g = nearest_distance(&theta("golden"), &BigInt::from(1))
            .unwrap()
            .to_f64();
        assert!((g - 0.3819660112501051).abs() < 1e-15);
        assert!(nearest_distance(&theta("rat:1/2"), &BigInt::from(1)).is_err());
    }

    #[test]
    fn tau_two_residual_at_two_to_sixteen() {
        let d = nearest_distance(&theta("taubeta:2/1:4"), &BigInt::from(65536)).unwrap();
        assert!((d.log2_abs() + 65520.0).abs() < 1e-6);
    }

    #[test]
    fn legendre() {
        let s2 = theta("surd:2");
        let b = |x: i64| BigInt::from(x);
        assert!(legendre_is_convergent(&s2, &b(7), &b(5)).unwrap());
        assert!(legendre_is_convergent(&s2, &b(6), &b(4)).unwrap());
        assert!(!legendre_is_convergent(&s2, &b(4), &b(3)).unwrap());
        assert!(legendre_is_convergent(&s2, &b(1), &b(0)).is_err());
    }

    #[test]
    fn scans() {
        let s2 = theta("surd:2");
        let r = approximability_scan(&s2, &psi_parse("pow:3").unwrap(), 10_000).unwrap();
        assert!(r.complete && !r.fast_path);
        let hits: Vec<BigInt> = r.hits().map(|e| e.m.clone()).collect();
        assert_eq!(hits, [BigInt::from(1)]);
        let g = approximability_scan(
            &theta("golden"),
            &psi_parse("scale:2.1:pow:1").unwrap(),
            1000,
        )
        .unwrap();
        let hits: Vec<u64> = g.hits().map(|e| e.m.to_u64().unwrap()).collect();
        assert_eq!(
            hits,
            [1, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144, 233, 377, 610, 987]
        );
    }

    #[test]
    fn base_estimates() {
        let s2 = theta("surd:2").continued_fraction(30, 0).unwrap();
        let e = irrationality_base_estimate(&s2).unwrap();
        assert!((e.estimate - 70f64.powf(1.0 / 29.0)).abs() < 1e-12);
        assert!(e.lower <= e.estimate && e.estimate <= e.upper);
        let j = theta("jarnik:exp:3:3").continued_fraction(3, 0).unwrap();
        let e = irrationality_base_estimate(&j).unwrap();
        assert!((e.estimate - 3.0).abs() < 0.1);
    }
}
