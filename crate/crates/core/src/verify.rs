//! Self-check suites run by `divcorr verify`. Each compares a library routine
//! against an independent computation and reports measured vs. threshold.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_traits::One;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diophantine::{
    cf_expand, cf_expand_surd, convergents, fibonacci, golden_cf, legendre_is_convergent,
    nearest_distance, ContinuedFraction, ThetaSpec,
};
use crate::divisor::{mean_square, sieve_tau};
use crate::error::{Error, Result};
use crate::quadrature::adaptive_gauss_kronrod;
use crate::realfield::BigReal;
use crate::summation::CompensatedSum;
use crate::voronoi::{lambda, osc_integral, spectral_j, SpectralParams, Trig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Cf,
    Legendre,
    Lambda,
    Spectral,
    Tong,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Cf,
        Suite::Legendre,
        Suite::Lambda,
        Suite::Spectral,
        Suite::Tong,
    ];
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Cf => "cf",
            Suite::Legendre => "legendre",
            Suite::Lambda => "lambda",
            Suite::Spectral => "spectral",
            Suite::Tong => "tong",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.to_string() == s)
            .ok_or_else(|| {
                Error::Validation(format!(
                    "unknown suite {s:?}; expected cf, legendre, lambda, spectral or tong"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: String,
    pub threshold: String,
    pub pass: bool,
}

impl Check {
    fn new(
        name: impl Into<String>,
        measured: impl Into<String>,
        threshold: impl Into<String>,
        pass: bool,
    ) -> Self {
        Check {
            name: name.into(),
            measured: measured.into(),
            threshold: threshold.into(),
            pass,
        }
    }

    fn within(name: impl Into<String>, err: f64, tol: f64) -> Self {
        Check::new(name, format!("{err:.3e}"), format!("≤ {tol:e}"), err <= tol)
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: measured {} threshold {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.threshold
        )
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<Check>> {
    match suite {
        Suite::Cf => cf_suite(),
        Suite::Legendre => legendre_suite(100_000),
        Suite::Lambda => lambda_suite(seed, 100),
        Suite::Spectral => spectral_suite(),
        Suite::Tong => tong_suite(1e6),
    }
}

// ---- continued fractions -------------------------------------------------

/// Determinant, alternation and sandwich checks on the convergents of the
/// number enclosed by `ball`. With `prefix_only` the ball is known only to lie
/// between n_K/m_K and the mediant, which leaves k = K − 1 on the boundary, so
/// alternation and sandwich stop at k = K − 2.
pub fn convergent_checks(
    label: &str,
    cf: &ContinuedFraction,
    ball: &BigReal,
    prefix_only: bool,
) -> Vec<Check> {
    let c = convergents(cf);
    let mut det_bad = 0usize;
    for k in 1..c.len() {
        let d = &c[k].n * &c[k - 1].m - &c[k - 1].n * &c[k].m;
        let want = if k % 2 == 1 {
            BigInt::one()
        } else {
            -BigInt::one()
        };
        det_bad += (d != want) as usize;
    }
    let mut alt_bad = 0usize;
    let mut sandwich_bad = 0usize;
    let checked = c.len().saturating_sub(if prefix_only { 2 } else { 1 });
    for k in 0..checked {
        // m_k θ − n_k has sign (−1)^k and modulus in (1/(m_k + m_{k+1}), 1/m_{k+1}).
        let e = ball
            .mul_int(&c[k].m)
            .sub(&BigReal::from_int(c[k].n.clone(), ball.prec()));
        let want = if k % 2 == 0 {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Less
        };
        alt_bad += (e.sign() != Some(want)) as usize;
        let abs = e.abs();
        let one = BigReal::from_int(1, ball.prec());
        let upper = one.div(&BigReal::from_int(c[k + 1].m.clone(), ball.prec()));
        let lower = one.div(&BigReal::from_int(&c[k].m + &c[k + 1].m, ball.prec()));
        let ok = match (lower, upper) {
            (Ok(lo), Ok(up)) => lo.certainly_lt(&abs) && abs.certainly_lt(&up),
            _ => false,
        };
        sandwich_bad += (!ok) as usize;
    }
    let mut fib_bad = 0usize;
    for cv in &c {
        fib_bad += (cv.m < fibonacci(cv.k as u64 + 1)) as usize;
    }
    vec![
        Check::new(
            format!("{label} determinant k≤{}", c.len() - 1),
            format!("{det_bad} violations"),
            "0",
            det_bad == 0,
        ),
        Check::new(
            format!("{label} alternation k<{checked}"),
            format!("{alt_bad} violations"),
            "0",
            alt_bad == 0,
        ),
        Check::new(
            format!("{label} sandwich k<{checked}"),
            format!("{sandwich_bad} violations"),
            "0",
            sandwich_bad == 0,
        ),
        Check::new(
            format!("{label} m_k ≥ F_(k+1)"),
            format!("{fib_bad} violations"),
            "0",
            fib_bad == 0,
        ),
    ]
}

fn cf_suite() -> Result<Vec<Check>> {
    const K: usize = 50;
    const PREC: u32 = 512;
    let mut out = Vec::new();
    let cases: [(&str, ContinuedFraction); 3] = [
        ("surd:2", cf_expand_surd(2, K)?),
        ("surd:3", cf_expand_surd(3, K)?),
        ("golden", golden_cf(K)),
    ];
    for (label, exact) in &cases {
        let theta = ThetaSpec::parse(label)?;
        let ball = theta.ball(PREC)?;
        let from_ball = cf_expand(&ball, K)?;
        out.push(Check::new(
            format!("{label} ball expansion equals recurrence"),
            if from_ball.terms().eq(exact.terms()) {
                "equal"
            } else {
                "differs"
            },
            "equal",
            from_ball.terms().eq(exact.terms()),
        ));
        out.extend(convergent_checks(label, exact, &ball, false));
    }
    let fib_equal = convergents(&golden_cf(K))
        .iter()
        .all(|c| c.m == fibonacci(c.k as u64 + 1));
    out.push(Check::new(
        "golden m_k = F_(k+1)",
        if fib_equal { "equal" } else { "differs" },
        "equal",
        fib_equal,
    ));
    let sqrt2_strict = convergents(&cases[0].1)
        .iter()
        .skip(2)
        .all(|c| c.m > fibonacci(c.k as u64 + 1));
    out.push(Check::new(
        "surd:2 m_k > F_(k+1) for k ≥ 2",
        if sqrt2_strict {
            "strict"
        } else {
            "equality found"
        },
        "strict",
        sqrt2_strict,
    ));
    for (label, depth) in [("jarnik:exp:3:3", 3), ("jarnik:expexp:1", 1)] {
        let theta = ThetaSpec::parse(label)?;
        let cf = theta.continued_fraction(depth, PREC)?;
        out.extend(convergent_checks(label, &cf, &theta.ball(PREC)?, true));
    }
    Ok(out)
}

// ---- Legendre completeness ----------------------------------------------

/// Every m ≤ `bound` with ‖mθ‖ < 1/(2m), found by direct search. Doubles
/// decide all but the near-ties, which are settled with a certified ball.
pub fn legendre_set(theta: &ThetaSpec, bound: u64) -> Result<Vec<u64>> {
    let t = theta.to_f64()?;
    let mut hits = Vec::new();
    for m in 1..=bound {
        let y = m as f64 * t;
        let dist = (y - y.round()).abs();
        let thr = 0.5 / m as f64;
        if (dist - thr).abs() > 1e-9 * thr.max(1e-6) {
            if dist < thr {
                hits.push(m);
            }
            continue;
        }
        let d = nearest_distance(theta, &BigInt::from(m))?;
        let thr_ball =
            BigReal::from_ratio(&BigInt::one(), &BigInt::from(2 * m), d.prec().max(128))?;
        match d.cmp_certified(&thr_ball) {
            Some(std::cmp::Ordering::Less) => hits.push(m),
            Some(_) => {}
            None => {
                return Err(Error::exhausted(
                    format!("comparing ‖{m}θ‖ with 1/(2m)"),
                    None,
                ))
            }
        }
    }
    Ok(hits)
}

fn legendre_suite(bound: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for label in ["surd:2", "surd:3", "golden"] {
        let theta = ThetaSpec::parse(label)?;
        let found = legendre_set(&theta, bound)?;
        let cf = theta.continued_fraction(60, 512)?;
        let mut dens: Vec<BigInt> = convergents(&cf)
            .into_iter()
            .map(|c| c.m)
            .filter(|m| m <= &BigInt::from(bound))
            .collect();
        dens.dedup();
        let outside = found
            .iter()
            .filter(|&&m| !dens.contains(&BigInt::from(m)))
            .count();
        out.push(Check::new(
            format!("{label} hits ≤ {bound} are convergent denominators"),
            format!("{} hits, {outside} outside", found.len()),
            "0 outside",
            outside == 0,
        ));
        // Each denominator is a hit exactly when its certified distance says so.
        let mut disagree = 0usize;
        for m in &dens {
            let d = nearest_distance(&theta, m)?;
            let thr = BigReal::from_ratio(&BigInt::one(), &(m * 2), d.prec().max(128))?;
            let below = d.cmp_certified(&thr) == Some(std::cmp::Ordering::Less);
            let hit = found.iter().any(|&h| BigInt::from(h) == *m);
            disagree += (below != hit) as usize;
        }
        out.push(Check::new(
            format!(
                "{label} search agrees with certified ‖m_k θ‖ on {} denominators",
                dens.len()
            ),
            format!("{disagree} disagreements"),
            "0",
            disagree == 0,
        ));
        let mut confirmed = 0usize;
        for &m in &found {
            let n = (m as f64 * theta.to_f64()?).round() as i64;
            if legendre_is_convergent(&theta, &BigInt::from(n), &BigInt::from(m))? {
                confirmed += 1;
            }
        }
        out.push(Check::new(
            format!("{label} legendre_is_convergent on hits"),
            format!("{confirmed}/{}", found.len()),
            "all",
            confirmed == found.len(),
        ));
        if label != "surd:3" {
            let equal = found
                .iter()
                .map(|&m| BigInt::from(m))
                .eq(dens.iter().cloned());
            out.push(Check::new(
                format!("{label} hits = every convergent denominator"),
                format!("{} hits, {} denominators", found.len(), dens.len()),
                "identical sets",
                equal,
            ));
        }
    }
    Ok(out)
}

// ---- Λ kernel -----------------------------------------------------------

/// ∫_1^b u²·trig(au) du by adaptive quadrature over half-periods.
fn oscillatory_quadrature(a: f64, b: f64, kind: Trig) -> f64 {
    let pieces = ((a * (b - 1.0) / PI).ceil() as usize).max(1);
    let h = (b - 1.0) / pieces as f64;
    let mut sum = CompensatedSum::new();
    for i in 0..pieces {
        let lo = 1.0 + i as f64 * h;
        let hi = if i + 1 == pieces { b } else { lo + h };
        let (v, _) = adaptive_gauss_kronrod(
            |u| {
                // a·u to double-double, then sin/cos of the corrected angle.
                let p = a * u;
                let e = a.mul_add(u, -p);
                let (s, c) = p.sin_cos();
                u * u
                    * match kind {
                        Trig::Cos => c - e * s,
                        Trig::Sin => s + e * c,
                    }
            },
            lo,
            hi,
            0.0,
            1e-15,
        );
        sum.add(v);
    }
    sum.value()
}

fn lambda_suite(seed: u64, samples: usize) -> Result<Vec<Check>> {
    const TOL: f64 = 1e-10;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut worst_osc, mut worst_id) = (0f64, 0f64);
    for _ in 0..samples {
        let a = 10f64.powf(rng.gen_range(-2.0..1.5));
        let x = 10f64.powf(rng.gen_range(0.1..4.0));
        for kind in [Trig::Cos, Trig::Sin] {
            let closed = osc_integral(a, x, kind)?;
            let quad = oscillatory_quadrature(a, x.sqrt(), kind);
            worst_osc = worst_osc.max((closed - quad).abs() / quad.abs());
        }
        let lhs = lambda(a * x.sqrt());
        let tail = osc_integral(a, x, Trig::Cos)? / x.powf(1.5);
        let head = lambda(a) / x.powf(1.5);
        let scale = lhs.abs().max(tail.abs()).max(head.abs());
        worst_id = worst_id.max((lhs - tail - head).abs() / scale);
    }
    let mut out = vec![
        Check::within(
            format!("osc_integral vs adaptive quadrature, {samples} samples"),
            worst_osc,
            TOL,
        ),
        Check::within(
            format!("Λ(a√X) = X^(-3/2)(∫_1^√X u²cos(au)du + Λ(a)), {samples} samples"),
            worst_id,
            TOL,
        ),
    ];
    out.push(Check::new(
        "Λ(0)",
        format!("{:?}", lambda(0.0)),
        "1/3 exactly",
        lambda(0.0) == 1.0 / 3.0,
    ));
    Ok(out)
}

// ---- spectral sum -------------------------------------------------------

fn tau_trial(n: u64) -> u64 {
    (1..=n).filter(|d| n.is_multiple_of(*d)).count() as u64
}

/// J_θ(X) by a plain double loop, with Λ from quadrature.
pub fn spectral_oracle(theta: f64, x: f64, n_max: u64) -> f64 {
    let mut sum = 0.0;
    for m in 1..=n_max {
        for n in 1..=n_max {
            let arg = 4.0 * PI * ((m as f64 * theta).sqrt() - (n as f64).sqrt()) * x.sqrt();
            let (lam, _) =
                adaptive_gauss_kronrod(|u| u * u * (arg * u).cos(), 0.0, 1.0, 0.0, 1e-15);
            sum += (tau_trial(m) * tau_trial(n)) as f64 * ((m * n) as f64).powf(-0.75) * lam;
        }
    }
    x.powf(1.5) / (2.0 * PI * PI) * sum
}

fn spectral_suite() -> Result<Vec<Check>> {
    const X: f64 = 16.0;
    let table = sieve_tau(8)?;
    let mut out = Vec::new();
    for label in ["surd:2", "golden", "rat:2/1", "rat:3/2"] {
        let theta = ThetaSpec::parse(label)?;
        let params = SpectralParams::standard(&theta, X, None)?;
        let r = spectral_j(&theta, &params, &table)?;
        let oracle = spectral_oracle(theta.to_f64()?, X, params.n.floor() as u64);
        out.push(Check::within(
            format!("{label} J(16) vs double loop"),
            (r.j_total - oracle).abs() / oracle.abs(),
            1e-9,
        ));
        let split = SpectralParams::new(X, params.n, 20.0)?;
        let s = spectral_j(&theta, &split, &table)?;
        let parts_ok = s.count_lower + s.count_upper == 64
            && ((s.d_lower + s.d_upper) - r.j_total).abs() <= 1e-12 * r.j_total.abs();
        out.push(Check::new(
            format!("{label} split at T=20 partitions J(16)"),
            format!("{} + {} pairs", s.count_lower, s.count_upper),
            "64 pairs, same total",
            parts_ok,
        ));
    }
    Ok(out)
}

// ---- Tong mean square ---------------------------------------------------

/// ζ(s) for real s > 1 by Euler–Maclaurin with ten explicit terms.
pub fn zeta_real(s: f64) -> f64 {
    const B: [f64; 6] = [
        1.0 / 6.0,
        -1.0 / 30.0,
        1.0 / 42.0,
        -1.0 / 30.0,
        5.0 / 66.0,
        -691.0 / 2730.0,
    ];
    let n = 10.0f64;
    let mut sum: f64 = (1..10).map(|k| (k as f64).powf(-s)).sum();
    sum += n.powf(1.0 - s) / (s - 1.0) + 0.5 * n.powf(-s);
    let mut rising = s; // s(s+1)…(s+2k−2)
    let mut fact = 2.0; // (2k)!
    for (k, b) in B.iter().enumerate() {
        let k = k + 1;
        sum += b / fact * rising * n.powf(-s - (2 * k) as f64 + 1.0);
        rising *= (s + (2 * k - 1) as f64) * (s + (2 * k) as f64);
        fact *= ((2 * k + 1) * (2 * k + 2)) as f64;
    }
    sum
}

/// (1/(6π²))Σ τ(n)² n^{−3/2} = ζ(3/2)⁴/(6π²ζ(3)).
pub fn tong_constant() -> f64 {
    zeta_real(1.5).powi(4) / (6.0 * PI * PI * zeta_real(3.0))
}

/// Bracket for (1/(6π²))Σ τ(n)² n^{−3/2}: the partial sum to `n`, and that
/// plus a tail bound from Σ_{k≤t} τ(k)² ≤ t(1 + ln t)³.
pub fn tong_series_bracket(n: usize) -> Result<(f64, f64)> {
    let table = sieve_tau(n)?;
    let mut partial = 0.0;
    let mut s_n = 0.0;
    for k in 1..=n {
        let t = table.tau(k) as f64;
        partial += t * t * (k as f64).powf(-1.5);
        s_n += t * t;
    }
    // ∫_N^∞ t^{−3/2}(1 + ln t)^j dt = 2N^{−1/2}L^j + 2j·(same with j−1).
    let nf = n as f64;
    let l = 1.0 + nf.ln();
    let mut i = 2.0 / nf.sqrt();
    for j in 1..=3 {
        i = 2.0 / nf.sqrt() * l.powi(j) + 2.0 * j as f64 * i;
    }
    let tail = 1.5 * i - s_n * nf.powf(-1.5);
    let norm = 6.0 * PI * PI;
    Ok((partial / norm, (partial + tail.max(0.0)) / norm))
}

fn tong_suite(x: f64) -> Result<Vec<Check>> {
    let ratio = mean_square(x)? / x.powf(1.5);
    let c = tong_constant();
    let (lo, hi) = tong_series_bracket(1_000_000)?;
    Ok(vec![
        Check::new(
            "series bracket contains ζ(3/2)⁴/(6π²ζ(3))",
            format!("{lo:.6} ≤ {c:.6} ≤ {hi:.6}"),
            "contained",
            lo <= c && c <= hi,
        ),
        Check::within(
            format!("mean_square({x:e})/X^(3/2) = {ratio:.6} vs {c:.6}"),
            (ratio / c - 1.0).abs(),
            0.1,
        ),
    ])
}
