//! The correlation integral I_θ(X) = ∫_1^X Δ(x)Δ(θx) dx.

mod fit;
mod sweep;

use std::fmt;

pub use fit::{fit_exponent, fit_points, ExponentFit, NEGLIGIBLE};
pub use sweep::{BREAKPOINT_BUDGET, SLIVER};

use crate::diophantine::ThetaSpec;
use crate::divisor::sieve_tau;
use crate::error::{Error, Result};
use crate::realfield::PsiFunction;
use crate::voronoi::{spectral_j, SpectralParams, SpectralReport, ThetaValue};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Exact,
    Spectral,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::Spectral => "spectral",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationResult {
    pub theta: ThetaSpec,
    pub x: f64,
    pub i: f64,
    pub method: Method,
    pub breakpoints_used: u64,
}

/// I_θ(X), integrating piecewise between the jumps of both factors.
pub fn correlate_exact(theta: &ThetaSpec, x: f64) -> Result<CorrelationResult> {
    Ok(correlate_points(theta, &[x])?.remove(0))
}

/// ∫_a^b Δ(x)Δ(θx) dx.
pub fn correlate_interval(theta: &ThetaSpec, a: f64, b: f64) -> Result<f64> {
    if !(b >= a) {
        return Err(Error::domain(format!("empty interval [{a}, {b}]")));
    }
    let t = ThetaValue::of(theta)?;
    Ok(sweep::sweep(t, a, &[b])?.integrals[0])
}

/// I_θ at each of the sorted `xs`, from a single sweep.
pub fn correlate_points(theta: &ThetaSpec, xs: &[f64]) -> Result<Vec<CorrelationResult>> {
    let t = ThetaValue::of(theta)?;
    if let Some(bad) = xs.iter().find(|x| !(**x >= 1.0)) {
        return Err(Error::domain(format!("X must be ≥ 1, got {bad}")));
    }
    let out = sweep::sweep(t, 1.0, xs)?;
    Ok(xs
        .iter()
        .zip(out.integrals.iter().zip(out.breakpoints.iter()))
        .map(|(&x, (&i, &bp))| CorrelationResult {
            theta: theta.clone(),
            x,
            i,
            method: Method::Exact,
            breakpoints_used: bp,
        })
        .collect())
}

/// `points` geometrically spaced X from `x_min` to `x_max`; the endpoints are
/// exact.
pub fn geometric_grid(x_min: f64, x_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(x_min >= 1.0) || !(x_max > x_min) || !x_max.is_finite() {
        return Err(Error::domain(format!(
            "grid needs 1 ≤ Xmin < Xmax, got [{x_min}, {x_max}]"
        )));
    }
    if points < 2 {
        return Err(Error::domain(format!(
            "grid needs at least 2 points, got {points}"
        )));
    }
    let ratio = (x_max / x_min).ln() / (points - 1) as f64;
    Ok((0..points)
        .map(|k| match k {
            0 => x_min,
            k if k == points - 1 => x_max,
            k => x_min * (ratio * k as f64).exp(),
        })
        .collect())
}

pub fn correlate_grid(
    theta: &ThetaSpec,
    x_min: f64,
    x_max: f64,
    points: usize,
) -> Result<Vec<CorrelationResult>> {
    correlate_points(theta, &geometric_grid(x_min, x_max, points)?)
}

/// I/X^{3/2}; zero at X = 1.
pub fn normalized_ratio(result: &CorrelationResult) -> f64 {
    if result.x <= 1.0 {
        0.0
    } else {
        result.i / result.x.powf(1.5)
    }
}

/// I·ψ⁻¹(X^{1/4})^{3/2}/X^{3/2}, which stays bounded when θ is not
/// ψ-approximable.
pub fn psi_normalized(result: &CorrelationResult, psi: &PsiFunction) -> Result<f64> {
    let inv = psi.inverse(result.x.powf(0.25))?;
    Ok(normalized_ratio(result) * inv.powf(1.5))
}

pub const CSV_HEADER: &str = "theta_spec,X,I,I_over_X32,method,breakpoints_used";

/// Seventeen significant digits, `.` as decimal separator.
pub fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn csv_row(result: &CorrelationResult) -> String {
    format!(
        "{},{},{},{},{},{}",
        result.theta,
        fmt_float(result.x),
        fmt_float(result.i),
        fmt_float(normalized_ratio(result)),
        result.method,
        result.breakpoints_used
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralComparison {
    pub exact: CorrelationResult,
    pub params: SpectralParams,
    pub spectral: SpectralReport,
    /// I_θ(X) − J_θ(X).
    pub discrepancy: f64,
    /// discrepancy / X^{11/8}.
    pub scaled: f64,
}

/// I_θ(X) against J_θ(X) with N = X^{3/4} and, when ψ is given,
/// T = (π/√θ)√(X/ψ⁻¹(X^{1/4})). `n_override`/`t_override` replace either.
pub fn compare_spectral(
    theta: &ThetaSpec,
    x: f64,
    psi: Option<&PsiFunction>,
    n_override: Option<f64>,
    t_override: Option<f64>,
) -> Result<SpectralComparison> {
    let mut params = SpectralParams::standard(theta, x, psi)?;
    if let Some(n) = n_override {
        params = SpectralParams::new(x, n, params.t)?;
    }
    if let Some(t) = t_override {
        params = SpectralParams::new(x, params.n, t)?;
    }
    let limit = (params.n.floor() as usize).max(1);
    let table = sieve_tau(limit)?;
    let spectral = spectral_j(theta, &params, &table)?;
    let exact = correlate_exact(theta, x)?;
    let discrepancy = exact.i - spectral.j_total;
    Ok(SpectralComparison {
        scaled: discrepancy / x.powf(11.0 / 8.0),
        exact,
        params,
        spectral,
        discrepancy,
    })
}
