//! Continued fractions, rational approximation and Liouville constructions.

mod approx;
mod cf;
mod construct;
mod theta;

pub use approx::{
    approximability_scan, decide_hit, irrationality_base_estimate, legendre_is_convergent,
    nearest_distance, ApproximationEvent, BaseEstimate, ScanReport, BASE_BURN_IN, MAX_PRECISION,
};
pub use cf::{
    binet, cf_expand, cf_expand_prefix, cf_expand_surd, convergents, fibonacci, golden_cf,
    ContinuedFraction, Convergent,
};
pub use construct::{
    construct_jarnik, construct_jarnik_prefix, construct_tau_beta, tau_beta_ball,
    tau_beta_exponents, TauBetaConstruction, DEFAULT_BIT_BUDGET,
};
pub use theta::ThetaSpec;
