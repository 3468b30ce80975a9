//! Truncated Voronoï series, the Λ kernel and the spectral sum J_θ(X).

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::diophantine::ThetaSpec;
use crate::divisor::DivisorTable;
use crate::error::{Error, Result};
use crate::realfield::PsiFunction;
use crate::summation::CompensatedSum;

/// Below this |x| Λ is summed from its Maclaurin series.
pub const LAMBDA_SERIES_SWITCH: f64 = 1.0;

/// Λ(x) = ∫_0^1 u² cos(xu) du = sin x/x + 2cos x/x² − 2sin x/x³, Λ(0) = 1/3.
pub fn lambda(x: f64) -> f64 {
    let ax = x.abs();
    if ax < LAMBDA_SERIES_SWITCH {
        // Σ_k (−1)^k x^{2k} / ((2k)!(2k+3))
        let x2 = x * x;
        let mut term = 1.0; // (−1)^k x^{2k}/(2k)!
        let mut sum = 1.0 / 3.0;
        for k in 1..=12 {
            let kk = 2 * k;
            term *= -x2 / ((kk - 1) * kk) as f64;
            sum += term / (kk + 3) as f64;
        }
        sum
    } else {
        let (s, c) = x.sin_cos();
        s / x + 2.0 * c / (x * x) - 2.0 * s / (x * x * x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trig {
    Sin,
    Cos,
}

/// ∫_1^{√X} u²·trig(au) du.
///
/// Uses the antiderivatives
/// x² sin(ax)/a + 2x cos(ax)/a² − 2 sin(ax)/a³ and
/// −x² cos(ax)/a + 2x sin(ax)/a² + 2 cos(ax)/a³,
/// switching to the termwise-integrated Maclaurin series when a√X < 1,
/// where the antiderivative cancels catastrophically.
pub fn osc_integral(a: f64, x_max: f64, kind: Trig) -> Result<f64> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::domain(format!("osc_integral needs a > 0, got {a}")));
    }
    if !(x_max >= 1.0) || !x_max.is_finite() {
        return Err(Error::domain(format!(
            "osc_integral needs X ≥ 1, got {x_max}"
        )));
    }
    let b = x_max.sqrt();
    if a * b < 1.0 {
        return Ok(osc_series(a, b, kind));
    }
    // The x²/a prefactor magnifies the rounding of a√X, so the argument is
    // carried as an unevaluated sum hi + lo.
    let b_lo = (-b).mul_add(b, x_max) / (2.0 * b);
    let (hi, lo) = two_prod(a, b);
    let f = |x: f64, x2: f64, (s, c): (f64, f64)| match kind {
        Trig::Cos => x2 * s / a + 2.0 * x * c / (a * a) - 2.0 * s / (a * a * a),
        Trig::Sin => -x2 * c / a + 2.0 * x * s / (a * a) + 2.0 * c / (a * a * a),
    };
    Ok(f(b, x_max, sin_cos_dd(hi, lo + a * b_lo)) - f(1.0, 1.0, a.sin_cos()))
}

/// a·b = p + e exactly.
#[inline]
pub(crate) fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// sin and cos of hi + lo for |lo| ≪ ulp(hi).
#[inline]
pub(crate) fn sin_cos_dd(hi: f64, lo: f64) -> (f64, f64) {
    let (s, c) = hi.sin_cos();
    (s + lo * c, c - lo * s)
}

fn osc_series(a: f64, b: f64, kind: Trig) -> f64 {
    // cos: Σ (−1)^k a^{2k} (b^{2k+3} − 1)/((2k)!(2k+3))
    // sin: Σ (−1)^k a^{2k+1} (b^{2k+4} − 1)/((2k+1)!(2k+4))
    let offset = match kind {
        Trig::Cos => 0,
        Trig::Sin => 1,
    };
    let mut sum = CompensatedSum::new();
    let mut coef = if offset == 0 { 1.0 } else { a }; // a^j / j!
    let mut j = offset;
    for _ in 0..20 {
        let p = j + 3;
        let sign = if (j / 2) % 2 == 0 { 1.0 } else { -1.0 };
        sum.add(sign * coef * (b.powi(p) - 1.0) / p as f64);
        coef *= a * a / ((j + 1) * (j + 2)) as f64;
        j += 2;
    }
    sum.value()
}

/// Q_N(x) = x^{1/4}/(√2 π) Σ_{n≤N} τ(n) n^{−3/4} cos(4π√(nx) − π/4).
pub fn q_n(x: f64, n_max: usize, table: &DivisorTable) -> Result<f64> {
    if !(x >= 1.0) || !x.is_finite() {
        return Err(Error::domain(format!("Q_N(x) needs x ≥ 1, got {x}")));
    }
    if n_max > table.limit() {
        return Err(Error::domain(format!(
            "τ table of limit {} is too small for N = {n_max}",
            table.limit()
        )));
    }
    let tau = table.counts();
    let mut sum = CompensatedSum::new();
    for (n, &t) in tau.iter().enumerate().take(n_max + 1).skip(1) {
        let nf = n as f64;
        sum.add(t as f64 * nf.powf(-0.75) * (4.0 * PI * (nf * x).sqrt() - PI / 4.0).cos());
    }
    Ok(x.powf(0.25) / (2f64.sqrt() * PI) * sum.value())
}

/// θ in the form the spectral sums use: a double, plus the exact ratio when
/// θ is rational so that a_{m,n} = 0 is detected exactly.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ThetaValue {
    pub value: f64,
    pub ratio: Option<(u64, u64)>,
}

impl ThetaValue {
    pub fn of(theta: &ThetaSpec) -> Result<Self> {
        let value = theta.to_f64()?;
        let ratio = theta.as_rational().and_then(|r| {
            use num_traits::ToPrimitive;
            Some((r.numer().to_u64()?, r.denom().to_u64()?))
        });
        Ok(ThetaValue { value, ratio })
    }

    fn sqrt_m_theta(&self, m: u64) -> f64 {
        (m as f64 * self.value).sqrt()
    }

    fn is_diagonal(&self, m: u64, n: u64) -> bool {
        match self.ratio {
            Some((a, b)) => (m as u128) * (a as u128) == (n as u128) * (b as u128),
            None => false,
        }
    }
}

/// a_{m,n} = 4π(√(mθ) − √n).
pub fn a_mn(theta: &ThetaSpec, m: u64, n: u64) -> Result<f64> {
    if m == 0 || n == 0 {
        return Err(Error::domain("a_mn needs m, n ≥ 1"));
    }
    let t = ThetaValue::of(theta)?;
    Ok(frequency(&t, m, (n as f64).sqrt(), n))
}

fn frequency(t: &ThetaValue, m: u64, sqrt_n: f64, n: u64) -> f64 {
    if t.is_diagonal(m, n) {
        0.0
    } else {
        4.0 * PI * (t.sqrt_m_theta(m) - sqrt_n)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralParams {
    pub x: f64,
    pub n: f64,
    pub t: f64,
}

impl SpectralParams {
    pub fn new(x: f64, n: f64, t: f64) -> Result<Self> {
        if !(x >= 1.0) || !(n > 0.0) || !(t > 0.0) {
            return Err(Error::domain(format!(
                "spectral parameters need X ≥ 1, N > 0, T > 0 (got {x}, {n}, {t})"
            )));
        }
        Ok(SpectralParams { x, n, t })
    }

    /// N = X^{3/4} and T = (π/√θ)·√(X/ψ⁻¹(X^{1/4})); without ψ the cutoff is
    /// disabled (T = ∞).
    pub fn standard(theta: &ThetaSpec, x: f64, psi: Option<&PsiFunction>) -> Result<Self> {
        let th = theta.to_f64()?;
        let n = x.powf(0.75);
        let t = match psi {
            Some(p) => PI / th.sqrt() * (x / p.inverse(x.powf(0.25))?).sqrt(),
            None => f64::INFINITY,
        };
        Self::new(x, n, t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralReport {
    pub j_total: f64,
    /// Terms with |a_{m,n}√X| ≤ T.
    pub d_lower: f64,
    pub d_upper: f64,
    pub count_lower: u64,
    pub count_upper: u64,
}

/// Largest number of (m, n) pairs spectral_j will enumerate.
pub const SPECTRAL_PAIR_BUDGET: f64 = 4.0e9;

/// J_θ(X) = X^{3/2}/(2π²) Σ_{m,n≤N} τ(m)τ(n)(mn)^{−3/4} Λ(a_{m,n}√X), split
/// at |a_{m,n}√X| = T.
pub fn spectral_j(
    theta: &ThetaSpec,
    params: &SpectralParams,
    table: &DivisorTable,
) -> Result<SpectralReport> {
    let n_max = params.n.floor() as usize;
    if (n_max as f64).powi(2) > SPECTRAL_PAIR_BUDGET {
        let cap_n = SPECTRAL_PAIR_BUDGET.sqrt();
        return Err(Error::Resource {
            message: format!(
                "{n_max}² spectral pairs exceed the budget of {SPECTRAL_PAIR_BUDGET:e}"
            ),
            suggested_cap: Some(cap_n.powf(4.0 / 3.0)),
        });
    }
    if n_max > table.limit() {
        return Err(Error::domain(format!(
            "τ table of limit {} is too small for N = {n_max}",
            table.limit()
        )));
    }
    let t = ThetaValue::of(theta)?;
    let tau = table.counts();
    let sqrt_x = params.x.sqrt();
    let weight: Vec<f64> = (0..=n_max)
        .map(|n| {
            if n == 0 {
                0.0
            } else {
                tau[n] as f64 * (n as f64).powf(-0.75)
            }
        })
        .collect();
    let sqrt_n: Vec<f64> = (0..=n_max).map(|n| (n as f64).sqrt()).collect();

    let rows: Vec<(CompensatedSum, CompensatedSum, u64, u64)> = (1..=n_max)
        .into_par_iter()
        .map(|m| {
            let (mut lo, mut up) = (CompensatedSum::new(), CompensatedSum::new());
            let (mut cl, mut cu) = (0u64, 0u64);
            for n in 1..=n_max {
                let arg = frequency(&t, m as u64, sqrt_n[n], n as u64) * sqrt_x;
                let v = weight[m] * weight[n] * lambda(arg);
                if arg.abs() <= params.t {
                    lo.add(v);
                    cl += 1;
                } else {
                    up.add(v);
                    cu += 1;
                }
            }
            (lo, up, cl, cu)
        })
        .collect();

    let (mut lo, mut up) = (CompensatedSum::new(), CompensatedSum::new());
    let (mut cl, mut cu) = (0, 0);
    for (l, u, a, b) in &rows {
        lo.merge(l);
        up.merge(u);
        cl += a;
        cu += b;
    }
    let scale = params.x.powf(1.5) / (2.0 * PI * PI);
    let d_lower = scale * lo.value();
    let d_upper = scale * up.value();
    Ok(SpectralReport {
        j_total: d_lower + d_upper,
        d_lower,
        d_upper,
        count_lower: cl,
        count_upper: cu,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::divisor::sieve_tau;

    #[test]
    fn lambda_values() {
        assert_eq!(lambda(0.0), 1.0 / 3.0);
        assert!((lambda(PI) + 2.0 / (PI * PI)).abs() < 1e-15);
        assert!((lambda(2.0 * PI) - 1.0 / (2.0 * PI * PI)).abs() < 1e-15);
        assert!((lambda(-PI) - lambda(PI)).abs() < 1e-17);
    }

    #[test]
    fn lambda_branches_agree_at_switch() {
        let x = LAMBDA_SERIES_SWITCH;
        let direct = x.sin() / x + 2.0 * x.cos() / (x * x) - 2.0 * x.sin() / (x * x * x);
        assert!((lambda(x * (1.0 - 1e-15)) - direct).abs() < 1e-14);
    }

    #[test]
    fn osc_edge_cases() {
        assert_eq!(osc_integral(1.0, 1.0, Trig::Cos).unwrap(), 0.0);
        assert!(osc_integral(0.0, 4.0, Trig::Cos).is_err());
        assert!(osc_integral(-1.0, 4.0, Trig::Sin).is_err());
    }

    #[test]
    fn osc_series_matches_antiderivative_near_switch() {
        for kind in [Trig::Cos, Trig::Sin] {
            let b: f64 = 1.5;
            let a = 1.0 / b;
            let s = osc_series(a * (1.0 - 1e-9), b, kind);
            let f = osc_integral(a * (1.0 + 1e-9), b * b, kind).unwrap();
            assert!(
                (s - f).abs() < 1e-8 * f.abs().max(1.0),
                "{kind:?}: {s} vs {f}"
            );
        }
    }

    #[test]
    fn lambda_osc_identity() {
        let (a, x) = (1.0f64, 9.0f64);
        let lhs = lambda(a * x.sqrt());
        let rhs = x.powf(-1.5) * osc_integral(a, x, Trig::Cos).unwrap() + lambda(a) * x.powf(-1.5);
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn frequencies() {
        let r = ThetaSpec::parse("rat:2/1").unwrap();
        assert_eq!(a_mn(&r, 1, 2).unwrap(), 0.0);
        let s = ThetaSpec::parse("surd:2").unwrap();
        assert!((a_mn(&s, 1, 1).unwrap() - 4.0 * PI * (2f64.powf(0.25) - 1.0)).abs() < 1e-14);
        assert!(a_mn(&s, 2, 3).unwrap() < 0.0);
    }

    #[test]
    fn q_n_edges() {
        let t = sieve_tau(10).unwrap();
        assert_eq!(q_n(5.0, 0, &t).unwrap(), 0.0);
        assert!(q_n(5.0, 11, &t).is_err());
        assert!(q_n(0.5, 1, &t).is_err());
    }

    #[test]
    fn infinite_cutoff_has_no_upper_terms() {
        let s = ThetaSpec::parse("surd:2").unwrap();
        let t = sieve_tau(8).unwrap();
        let p = SpectralParams::standard(&s, 16.0, None).unwrap();
        assert_eq!(p.n, 8.0);
        let r = spectral_j(&s, &p, &t).unwrap();
        assert_eq!(r.d_upper, 0.0);
        assert_eq!(r.count_upper, 0);
        assert_eq!(r.j_total, r.d_lower);
    }
}
