//! Ball arithmetic, constants and the ψ expression language.

mod bigreal;
pub mod psi;

use std::sync::OnceLock;

pub(crate) use bigreal::log2_biguint;
pub use bigreal::{gamma_const, parse_decimal_rational, pi_const, BigReal};
pub use psi::{inverse_by_bisection, psi_parse, PsiFunction};

/// Euler's constant rounded to the nearest double, derived once from a
/// 256-bit ball.
pub fn euler_gamma() -> f64 {
    static G: OnceLock<f64> = OnceLock::new();
    *G.get_or_init(|| gamma_const(256).to_f64())
}

/// 2γ − 1, the linear coefficient in the main term of D(x).
pub fn two_gamma_minus_one() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| {
        let g = gamma_const(256);
        g.add(&g).sub(&BigReal::from_int(1, 256)).to_f64()
    })
}
