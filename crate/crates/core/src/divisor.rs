//! The divisor function τ, its summatory function D and the error term Δ.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_8;
use crate::realfield::two_gamma_minus_one;
use crate::summation::CompensatedSum;

/// Width (in unit intervals) of the fixed chunks used by parallel sweeps.
pub(crate) const CHUNK: u64 = 1 << 15;

/// τ(n) for 1 ≤ n ≤ limit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DivisorTable {
    limit: usize,
    counts: Vec<u32>,
}

impl DivisorTable {
    pub fn limit(&self) -> usize {
        self.limit
    }

    /// τ(n). Panics outside `1..=limit`.
    pub fn tau(&self, n: usize) -> u32 {
        assert!(
            n >= 1 && n <= self.limit,
            "τ({n}) outside table of limit {}",
            self.limit
        );
        self.counts[n]
    }

    /// Slice indexed by n; entry 0 is 0.
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }
}

/// Builds a τ table by the increment sieve (every d adds one to each of its
/// multiples).
pub fn sieve_tau(limit: usize) -> Result<DivisorTable> {
    if limit == 0 {
        return Err(Error::domain("sieve_tau needs limit ≥ 1"));
    }
    let mut counts: Vec<u32> = Vec::new();
    counts
        .try_reserve_exact(limit + 1)
        .map_err(|_| Error::Resource {
            message: format!("cannot allocate a τ table of {limit} entries"),
            suggested_cap: Some((limit / 4) as f64),
        })?;
    counts.resize(limit + 1, 0);
    for d in 1..=limit {
        for m in (d..=limit).step_by(d) {
            counts[m] += 1;
        }
    }
    Ok(DivisorTable { limit, counts })
}

/// τ(n) for n in `lo..hi`, by pairing each divisor d ≤ √n with n/d.
pub fn tau_segment(lo: u64, hi: u64) -> Vec<u32> {
    let len = hi.saturating_sub(lo) as usize;
    let mut out = vec![0u32; len];
    let mut d = 1u64;
    while d * d < hi {
        let sq = d * d;
        let first = sq.max(lo.div_ceil(d) * d);
        let mut n = first;
        while n < hi {
            out[(n - lo) as usize] += if n == sq { 1 } else { 2 };
            n += d;
        }
        d += 1;
    }
    out
}

/// D(x) = Σ_{n≤x} τ(n) by the hyperbola identity 2·Σ_{k≤√x} ⌊x/k⌋ − ⌊√x⌋².
pub fn summatory_d(x: u64) -> u128 {
    let s = x.isqrt();
    let mut acc: u128 = 0;
    for k in 1..=s {
        acc += (x / k) as u128;
    }
    2 * acc - (s as u128) * (s as u128)
}

/// x log x + (2γ − 1)x, with the value 0 at x = 0.
#[inline]
pub(crate) fn main_term(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        x * x.ln() + two_gamma_minus_one() * x
    }
}

/// Δ(x) = D(⌊x⌋) − x log x − (2γ − 1)x.
pub fn delta(x: f64) -> Result<f64> {
    Ok(delta_sample(x)?.delta)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaSample {
    pub x: f64,
    pub d_value: u128,
    pub delta: f64,
}

pub fn delta_sample(x: f64) -> Result<DeltaSample> {
    if !(x >= 1.0) || !x.is_finite() {
        return Err(Error::domain(format!("Δ(x) needs finite x ≥ 1, got {x}")));
    }
    if x >= 1.8e19 {
        return Err(Error::domain(format!(
            "Δ(x) needs ⌊x⌋ to fit in 64 bits, got {x}"
        )));
    }
    let d_value = summatory_d(x.floor() as u64);
    Ok(DeltaSample {
        x,
        d_value,
        delta: d_value as f64 - main_term(x),
    })
}

/// ∫_1^X Δ(x)² dx, integrating the square piecewise between consecutive
/// integers.
pub fn mean_square(x_max: f64) -> Result<f64> {
    if !(x_max >= 1.0) || !x_max.is_finite() {
        return Err(Error::domain(format!(
            "mean_square needs finite X ≥ 1, got {x_max}"
        )));
    }
    let top = x_max.floor() as u64;
    let chunks = top.div_ceil(CHUNK);
    let parts: Vec<CompensatedSum> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = 1 + c * CHUNK;
            let hi = (lo + CHUNK).min(top + 1);
            let mut sum = CompensatedSum::new();
            let taus = tau_segment(lo, hi);
            let mut d = summatory_d(lo - 1) as f64;
            for (i, t) in taus.iter().enumerate() {
                d += *t as f64;
                let a = (lo + i as u64) as f64;
                let b = (a + 1.0).min(x_max);
                if b > a {
                    sum.add(gauss_legendre_8(a, b, |x| {
                        let v = d - main_term(x);
                        v * v
                    }));
                }
            }
            sum
        })
        .collect();
    let mut total = CompensatedSum::new();
    for p in &parts {
        total.merge(p);
    }
    Ok(total.value())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_tau(n: u64) -> u32 {
        (1..=n).filter(|d| n.is_multiple_of(*d)).count() as u32
    }

    #[test]
    fn small_tables() {
        assert_eq!(sieve_tau(1).unwrap().counts()[1..], [1]);
        assert_eq!(sieve_tau(12).unwrap().tau(12), 6);
        assert_eq!(sieve_tau(6).unwrap().tau(6), 4);
        assert!(matches!(sieve_tau(0), Err(Error::Domain(_))));
    }

    #[test]
    fn segment_matches_brute_force() {
        for (lo, hi) in [(1, 50), (37, 120), (1000, 1100), (99_990, 100_010)] {
            let seg = tau_segment(lo, hi);
            for (i, t) in seg.iter().enumerate() {
                assert_eq!(*t, brute_tau(lo + i as u64), "n = {}", lo + i as u64);
            }
        }
    }

    #[test]
    fn summatory_values() {
        assert_eq!(summatory_d(0), 0);
        assert_eq!(summatory_d(1), 1);
        assert_eq!(summatory_d(10), 27);
        assert_eq!(summatory_d(100), 482);
    }

    #[test]
    fn delta_values() {
        assert!((delta(1.0).unwrap() - 0.845569).abs() < 1e-6);
        assert!((delta(10.0).unwrap() - 2.429835772028882).abs() < 1e-12);
        assert!((delta(100.0).unwrap() - 6.039848420884269).abs() < 1e-12);
        assert!(matches!(delta(0.5), Err(Error::Domain(_))));
        assert!(matches!(delta(f64::NAN), Err(Error::Domain(_))));
    }

    #[test]
    fn mean_square_edge() {
        assert_eq!(mean_square(1.0).unwrap(), 0.0);
        assert!(mean_square(0.9).is_err());
        assert!(mean_square(2.5).unwrap() > mean_square(2.0).unwrap());
    }
}
