use super::CorrelationResult;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub rms_residual: f64,
    pub points_used: usize,
    /// Sign flips between consecutive samples, dropped ones included.
    pub sign_changes: usize,
    /// Samples with |I| < 1e-9·X^{3/2}, left out of the fit.
    pub dropped: usize,
}

/// Samples this small relative to X^{3/2} are treated as zero.
pub const NEGLIGIBLE: f64 = 1e-9;

/// Least-squares line through (log X, log |I|).
pub fn fit_exponent(results: &[CorrelationResult]) -> Result<ExponentFit> {
    fit_points(results.iter().map(|r| (r.x, r.i)))
}

pub fn fit_points(points: impl IntoIterator<Item = (f64, f64)>) -> Result<ExponentFit> {
    let points: Vec<(f64, f64)> = points.into_iter().collect();
    let sign_changes = points
        .windows(2)
        .filter(|w| w[0].1.signum() != w[1].1.signum())
        .count();
    let usable: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, i)| *x > 0.0 && i.abs() > NEGLIGIBLE * x.powf(1.5) && i.is_finite())
        .map(|(x, i)| (x.ln(), i.abs().ln()))
        .collect();
    if usable.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: usable.len(),
        });
    }
    let n = usable.len() as f64;
    let mx = usable.iter().map(|p| p.0).sum::<f64>() / n;
    let my = usable.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = usable.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = usable.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::domain("all samples share one X"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = usable
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    Ok(ExponentFit {
        slope,
        intercept,
        rms_residual: (rss / n).sqrt(),
        points_used: usable.len(),
        sign_changes,
        dropped: points.len() - usable.len(),
    })
}
