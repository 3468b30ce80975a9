//! One pass over [lo, X_max] that integrates Δ(x)Δ(θx) piece by piece.
//!
//! Pieces are cut at every integer (jumps of Δ(x)), at every j/θ (jumps of
//! Δ(θx)) and at every requested grid point. The range is split into chunks
//! of `CHUNK` unit intervals whose boundaries depend only on `lo`, so the
//! reduction order, and hence every output bit, is independent of the number
//! of worker threads.

use rayon::prelude::*;

use crate::divisor::{main_term, summatory_d, tau_segment, CHUNK};
use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_8;
use crate::summation::CompensatedSum;
use crate::voronoi::ThetaValue;

/// Pieces narrower than this are not integrated.
pub const SLIVER: f64 = 1e-12;

/// Upper limit on the number of breakpoints one sweep may visit.
pub const BREAKPOINT_BUDGET: f64 = 2.0e9;

/// Position of the j-th breakpoint of Δ(θx), j/θ, rounded once.
#[derive(Clone, Copy)]
struct Breaks {
    theta: f64,
    ratio: Option<(u64, u64)>,
}

impl Breaks {
    #[inline]
    fn at(&self, j: u64) -> f64 {
        match self.ratio {
            Some((a, b)) => ((j as u128 * b as u128) as f64) / a as f64,
            None => j as f64 / self.theta,
        }
    }

    /// The j with at(j) ≤ x < at(j + 1).
    fn index_of(&self, x: f64) -> u64 {
        let mut j = (x * self.theta).floor().max(0.0) as u64;
        while j > 0 && self.at(j) > x {
            j -= 1;
        }
        while self.at(j + 1) <= x {
            j += 1;
        }
        j
    }
}

#[derive(Debug, Clone)]
pub(crate) struct SweepOutput {
    /// ∫_lo^{X_i} Δ(x)Δ(θx) dx for each grid point.
    pub integrals: Vec<f64>,
    /// Breakpoints (of either factor) in (lo, X_i].
    pub breakpoints: Vec<u64>,
}

struct ChunkOutput {
    sum: CompensatedSum,
    breakpoints: u64,
    /// (grid index, integral from chunk start, breakpoints from chunk start)
    marks: Vec<(usize, CompensatedSum, u64)>,
}

pub(crate) fn sweep(theta: ThetaValue, lo: f64, grid: &[f64]) -> Result<SweepOutput> {
    if !(theta.value > 0.0) || !theta.value.is_finite() {
        return Err(Error::domain(format!(
            "θ must be positive, got {}",
            theta.value
        )));
    }
    if !(lo >= 1.0) || !lo.is_finite() {
        return Err(Error::domain(format!(
            "integration starts at x ≥ 1, got {lo}"
        )));
    }
    if grid.is_empty() {
        return Ok(SweepOutput {
            integrals: vec![],
            breakpoints: vec![],
        });
    }
    if grid.windows(2).any(|w| !(w[0] <= w[1])) || !(grid[0] >= lo) {
        return Err(Error::domain(
            "grid must be sorted and start at or after the lower limit",
        ));
    }
    let x_max = *grid.last().expect("nonempty");
    if !x_max.is_finite() {
        return Err(Error::domain("grid point is not finite"));
    }
    let estimated = (x_max - lo) * (1.0 + theta.value);
    if estimated > BREAKPOINT_BUDGET {
        return Err(Error::Resource {
            message: format!(
                "about {estimated:.3e} breakpoints exceed the budget of {BREAKPOINT_BUDGET:e}"
            ),
            suggested_cap: Some(lo + BREAKPOINT_BUDGET / (1.0 + theta.value)),
        });
    }

    let base = lo.floor() as u64;
    let top = x_max.floor() as u64;
    let chunks = ((top - base) / CHUNK + 1) as usize;
    let starts: Vec<f64> = (0..=chunks)
        .map(|c| {
            if c == 0 {
                lo
            } else {
                ((base + c as u64 * CHUNK) as f64).min(x_max)
            }
        })
        .collect();
    let breaks = Breaks {
        theta: theta.value,
        ratio: theta.ratio,
    };

    let outputs: Vec<ChunkOutput> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let (a, b) = (starts[c], starts[c + 1]);
            let first = grid.partition_point(|&g| g < a);
            let last = if c + 1 == chunks {
                grid.len()
            } else {
                grid.partition_point(|&g| g < b)
            };
            sweep_chunk(breaks, a, b, &grid[first..last], first)
        })
        .collect();

    let mut integrals = vec![0.0; grid.len()];
    let mut counts = vec![0u64; grid.len()];
    let mut acc = CompensatedSum::new();
    let mut bp = 0u64;
    for out in &outputs {
        for (i, partial, k) in &out.marks {
            let mut total = acc;
            total.merge(partial);
            integrals[*i] = total.value();
            counts[*i] = bp + k;
        }
        acc.merge(&out.sum);
        bp += out.breakpoints;
    }
    Ok(SweepOutput {
        integrals,
        breakpoints: counts,
    })
}

fn sweep_chunk(breaks: Breaks, a: f64, b: f64, grid: &[f64], grid_offset: usize) -> ChunkOutput {
    let mut sum = CompensatedSum::new();
    let mut marks = Vec::with_capacity(grid.len());
    let mut breakpoints = 0u64;

    // Δ(x) side: integers n with D(⌊x⌋).
    let n0 = a.floor() as u64;
    let n_end = b.floor() as u64 + 1;
    let tau_x = tau_segment(n0 + 1, n_end + 1);
    let mut d1 = summatory_d(n0) as f64;
    let mut next_n = n0 + 1;

    // Δ(θx) side: j/θ with D(j).
    let j0 = breaks.index_of(a);
    let j_end = breaks.index_of(b) + 1;
    let tau_t = tau_segment(j0 + 1, j_end + 1);
    let mut d2 = summatory_d(j0) as f64;
    let mut next_j = j0 + 1;

    let theta = breaks.theta;
    let mut x = a;
    let mut g = 0usize;
    let piece = |p: f64, q: f64, d1: f64, d2: f64, sum: &mut CompensatedSum| {
        if q - p > SLIVER {
            sum.add(gauss_legendre_8(p, q, |t| {
                (d1 - main_term(t)) * (d2 - main_term(theta * t))
            }));
        }
    };
    // Breakpoints in (a, b] belong to this chunk; those at a were counted
    // by the previous one and are already folded into d1, d2.
    loop {
        let bn = next_n as f64;
        let bj = breaks.at(next_j);
        if bn <= x {
            d1 += tau_x[(next_n - n0 - 1) as usize] as f64;
            next_n += 1;
            breakpoints += 1;
            continue;
        }
        if bj <= x {
            d2 += tau_t[(next_j - j0 - 1) as usize] as f64;
            next_j += 1;
            if bj != (next_n - 1) as f64 {
                breakpoints += 1;
            }
            continue;
        }
        let gx = grid.get(g).copied().unwrap_or(f64::INFINITY);
        if gx <= x {
            marks.push((grid_offset + g, sum, breakpoints));
            g += 1;
            continue;
        }
        if x >= b {
            break;
        }
        let next = bn.min(bj).min(gx).min(b);
        piece(x, next, d1, d2, &mut sum);
        x = next;
    }
    ChunkOutput {
        sum,
        breakpoints,
        marks,
    }
}
