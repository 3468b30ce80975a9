//! Fixed-order Gauss–Legendre rule and an adaptive Gauss–Kronrod integrator.

use crate::summation::CompensatedSum;

/// Positive nodes of the 8-point Gauss–Legendre rule on [-1, 1].
const GL8_NODES: [f64; 4] = [
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL8_WEIGHTS: [f64; 4] = [
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

/// 8-point Gauss–Legendre approximation of ∫ₐᵇ f. Exact for polynomials of
/// degree ≤ 15.
#[inline]
pub fn gauss_legendre_8<F: FnMut(f64) -> f64>(a: f64, b: f64, mut f: F) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for (x, w) in GL8_NODES.iter().zip(GL8_WEIGHTS.iter()) {
        let dx = half * x;
        acc += w * (f(mid - dx) + f(mid + dx));
    }
    acc * half
}

// Gauss–Kronrod 7/15 abscissae and weights (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.000_000_000_000_000_0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Kronrod estimate and its error estimate on [a, b], scaled as in QUADPACK
/// so that smooth pieces report errors near roundoff rather than the raw
/// Gauss–Kronrod difference.
fn kronrod15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64, bool) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let h = half.abs();
    let mut fv = [0.0f64; 15];
    fv[7] = f(center);
    for j in 0..7 {
        let dx = half * XGK[j];
        fv[j] = f(center - dx);
        fv[14 - j] = f(center + dx);
    }
    let w = |j: usize| WGK[if j <= 7 { j } else { 14 - j }];
    let mut resk = 0.0;
    let mut resabs = 0.0;
    for (j, v) in fv.iter().enumerate() {
        resk += w(j) * v;
        resabs += w(j) * v.abs();
    }
    let mut resg = WG[3] * fv[7];
    for j in (1..7).step_by(2) {
        resg += WG[j / 2] * (fv[j] + fv[14 - j]);
    }
    let mean = 0.5 * resk;
    let resasc: f64 = fv
        .iter()
        .enumerate()
        .map(|(j, v)| w(j) * (v - mean).abs())
        .sum::<f64>()
        * h;
    let resabs = resabs * h;
    let mut err = ((resk - resg) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    let floor = 50.0 * f64::EPSILON * resabs;
    let at_floor = err <= floor;
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(floor);
    }
    (resk * half, err, at_floor)
}

/// Subintervals kept before refinement stops regardless of error.
const MAX_INTERVALS: usize = 1 << 16;

#[derive(PartialEq)]
struct Piece {
    err: f64,
    /// The error estimate is at roundoff level; bisecting cannot reduce it.
    at_floor: bool,
    lo: f64,
    hi: f64,
    val: f64,
}

impl Eq for Piece {}

impl PartialOrd for Piece {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Piece {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive Gauss–Kronrod (7/15) quadrature: the piece with the
/// largest error estimate is bisected until the total estimate meets
/// max(abs_tol, rel_tol·|I|) or the worst piece is at roundoff level.
/// Returns the integral and the error estimate.
///
/// A single 15-point rule cannot see oscillations much faster than the
/// interval length, nor a jump lying outside its outermost nodes; split such
/// integrands at their periods and discontinuities first.
pub fn adaptive_gauss_kronrod<F: FnMut(f64) -> f64>(
    mut f: F,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> (f64, f64) {
    if a == b {
        return (0.0, 0.0);
    }
    let (val, err, at_floor) = kronrod15(&mut f, a, b);
    let mut heap = std::collections::BinaryHeap::new();
    heap.push(Piece {
        err,
        at_floor,
        lo: a,
        hi: b,
        val,
    });
    let (mut total, mut err_total) = (val, err);
    while err_total > abs_tol.max(rel_tol * total.abs()) && heap.len() < MAX_INTERVALS {
        let worst = heap.pop().expect("nonempty");
        let mid = 0.5 * (worst.lo + worst.hi);
        if worst.at_floor || mid <= worst.lo.min(worst.hi) || mid >= worst.lo.max(worst.hi) {
            heap.push(worst);
            break;
        }
        let (v1, e1, f1) = kronrod15(&mut f, worst.lo, mid);
        let (v2, e2, f2) = kronrod15(&mut f, mid, worst.hi);
        total += v1 + v2 - worst.val;
        err_total += e1 + e2 - worst.err;
        heap.push(Piece {
            err: e1,
            at_floor: f1,
            lo: worst.lo,
            hi: mid,
            val: v1,
        });
        heap.push(Piece {
            err: e2,
            at_floor: f2,
            lo: mid,
            hi: worst.hi,
            val: v2,
        });
    }
    let mut pieces = heap.into_vec();
    pieces.sort_by(|p, q| p.lo.total_cmp(&q.lo));
    let total: CompensatedSum = pieces.iter().map(|p| p.val).collect();
    let err: f64 = pieces.iter().map(|p| p.err).sum();
    (total.value(), err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gl8_is_exact_through_degree_15() {
        let weights_total = gauss_legendre_8(-1.0, 1.0, |_| 1.0);
        assert!((weights_total - 2.0).abs() < 1e-15);
        let got = gauss_legendre_8(0.0, 2.0, |x| x.powi(15));
        let want = 2f64.powi(16) / 16.0;
        assert!((got - want).abs() / want < 1e-14);
    }

    #[test]
    fn kronrod_handles_oscillation() {
        let (v, _) = adaptive_gauss_kronrod(|x| (50.0 * x).cos(), 0.0, 3.0, 1e-14, 1e-13);
        let want = (150f64).sin() / 50.0;
        assert!((v - want).abs() < 1e-12);
    }
}
