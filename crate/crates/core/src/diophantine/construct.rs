use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use super::cf::ContinuedFraction;
use crate::error::{Error, Result};
use crate::realfield::{log2_biguint, BigReal, PsiFunction};

/// Default cap on the size of a single constructed partial quotient.
pub const DEFAULT_BIT_BUDGET: u64 = 1 << 20;

fn validate_beta(a: u64, b: u64) -> Result<()> {
    if b == 0 || a <= b {
        return Err(Error::Validation(format!(
            "τ_β needs a > b ≥ 1, got a = {a}, b = {b}"
        )));
    }
    if a.gcd(&b) != 1 {
        return Err(Error::Validation(format!(
            "τ_β needs gcd(a, b) = 1, got {a}/{b}"
        )));
    }
    Ok(())
}

/// Tower exponents e_0 = 1, e_{j+1} = a^{e_j}, as long as e_j fits in
/// `max_bits` bits.
fn tower(a: u64, count: usize, max_bits: u64) -> (Vec<BigInt>, bool) {
    let mut out = vec![BigInt::one()];
    while out.len() < count {
        let prev = out.last().expect("nonempty");
        // bits(a^e) ≈ e·log2(a)
        let bits = prev.to_f64().unwrap_or(f64::INFINITY) * (a as f64).log2();
        if bits > max_bits as f64 {
            return (out, false);
        }
        let e = prev.to_usize().expect("bounded by max_bits");
        out.push(num_traits::pow(BigInt::from(a), e));
    }
    (out, true)
}

/// Partial sum of τ_β = Σ_j (b/a)^{e_j} and its exponent tower.
#[derive(Debug, Clone)]
pub struct TauBetaConstruction {
    pub value: BigReal,
    pub exact: BigRational,
    pub exponents: Vec<BigInt>,
}

/// Sum of the first `depth` terms of τ_β for β = a/b.
///
/// Fails when the last term is smaller than 2^{-precision}; the error names
/// the deepest depth the budget supports.
pub fn construct_tau_beta(
    a: u64,
    b: u64,
    depth: usize,
    precision: u32,
) -> Result<TauBetaConstruction> {
    validate_beta(a, b)?;
    if depth == 0 {
        return Err(Error::Validation("τ_β depth must be ≥ 1".into()));
    }
    let lg = ((a as f64) / (b as f64)).log2();
    let (exps, _) = tower(a, depth, u32::MAX as u64);
    let safe = exps
        .iter()
        .take_while(|e| e.to_f64().unwrap_or(f64::INFINITY) * lg <= precision as f64)
        .count();
    if exps.len() < depth || safe < depth {
        return Err(Error::exhausted(
            format!("materializing τ_{a}/{b} to depth {depth} at {precision} bits (max safe depth {safe})"),
            Some(safe),
        ));
    }
    let exact = tau_beta_partial(a, b, &exps);
    let value = rational_ball(&exact, precision)?;
    Ok(TauBetaConstruction {
        value,
        exact,
        exponents: exps,
    })
}

fn tau_beta_partial(a: u64, b: u64, exps: &[BigInt]) -> BigRational {
    let mut sum = BigRational::zero();
    for e in exps {
        let e = e.to_usize().expect("materialized exponent");
        sum += BigRational::new(
            num_traits::pow(BigInt::from(b), e),
            num_traits::pow(BigInt::from(a), e),
        );
    }
    sum
}

/// Exact ball for dyadic rationals, one-ulp ball otherwise.
pub(crate) fn rational_ball(r: &BigRational, prec: u32) -> Result<BigReal> {
    let d = r.denom();
    if d.magnitude().count_ones() == 1 {
        let shift = d.bits() - 1;
        Ok(BigReal::from_dyadic(
            r.numer().clone(),
            -(shift as i64),
            prec,
        ))
    } else {
        BigReal::from_rational(r, prec)
    }
}

/// The full series τ_β enclosed to about `prec` bits: every tower term
/// above 2^{-(prec+64)} is summed exactly and the rest bounds the radius.
pub fn tau_beta_ball(a: u64, b: u64, prec: u32) -> Result<BigReal> {
    validate_beta(a, b)?;
    let lg = ((a as f64) / (b as f64)).log2();
    let cutoff = prec as u64 + 64;
    let (exps, _) = tower(a, usize::MAX, (cutoff as f64 / lg).ceil() as u64 + 64);
    let kept: Vec<BigInt> = exps
        .into_iter()
        .take_while(|e| e.to_f64().unwrap_or(f64::INFINITY) * lg <= cutoff as f64)
        .collect();
    let sum = tau_beta_partial(a, b, &kept);
    let body = rational_ball(&sum, prec + 64)?;
    // The omitted tail is at most twice its first term, which is < 2^{-cutoff}.
    let tail = BigReal::from_dyadic(BigInt::one(), 1 - cutoff as i64, prec + 64);
    Ok(body.add(&BigReal::error_ball(&tail)).with_prec(prec + 64))
}

/// Exponents of the first `depth` tower terms without materializing sums.
pub fn tau_beta_exponents(a: u64, depth: usize) -> Result<Vec<BigInt>> {
    let (exps, complete) = tower(a, depth, 1 << 24);
    if !complete {
        return Err(Error::Resource {
            message: format!(
                "tower exponent e_{} of base {a} is too large to write down",
                exps.len()
            ),
            suggested_cap: Some(exps.len() as f64),
        });
    }
    Ok(exps)
}

/// Jarník construction truncated at K quotients, with the reason it stopped
/// early if the next quotient would exceed the bit budget.
pub fn construct_jarnik_prefix(
    psi: &PsiFunction,
    k: usize,
    budget_bits: u64,
) -> Result<(ContinuedFraction, Option<Error>)> {
    if k == 0 {
        return Err(Error::domain("construct_jarnik needs K ≥ 1"));
    }
    if !psi.outgrows_identity() {
        return Err(Error::Infeasible(format!(
            "{psi} does not satisfy 1/ψ(x) = o(1/x) on [1, 10^6]; every quotient would be 1"
        )));
    }
    let mut quotients: Vec<BigInt> = Vec::with_capacity(k);
    let (mut m_prev, mut m) = (BigInt::zero(), BigInt::one());
    while quotients.len() < k {
        let j = quotients.len();
        match next_jarnik_quotient(psi, &m, budget_bits) {
            Ok(a) => {
                let next = &a * &m + &m_prev;
                m_prev = std::mem::replace(&mut m, next);
                quotients.push(a);
            }
            Err(e) => {
                let cf = ContinuedFraction::new(BigInt::zero(), quotients)?;
                let e = match e {
                    Error::Resource { message, .. } => Error::Resource {
                        message: format!("a_{} = ⌈ψ(m_{j})/m_{j}⌉: {message}", j + 1),
                        suggested_cap: Some(j as f64),
                    },
                    other => other,
                };
                return Ok((cf, Some(e)));
            }
        }
    }
    Ok((ContinuedFraction::new(BigInt::zero(), quotients)?, None))
}

/// θ = [0; a_1, ..., a_K] with a_{k+1} = max(1, ⌈ψ(m_k)/m_k⌉).
pub fn construct_jarnik(psi: &PsiFunction, k: usize) -> Result<ContinuedFraction> {
    match construct_jarnik_prefix(psi, k, DEFAULT_BIT_BUDGET)? {
        (cf, None) => Ok(cf),
        (_, Some(e)) => Err(e),
    }
}

/// ln ψ(m) for a possibly huge integer m.
fn ln_psi_at(psi: &PsiFunction, m: &BigInt) -> f64 {
    match m.to_f64() {
        Some(x) if x.is_finite() => psi.ln_eval(x),
        _ => {
            let ln_m = log2_biguint(m.magnitude()) * std::f64::consts::LN_2;
            ln_psi_from_ln(psi, ln_m)
        }
    }
}

fn ln_psi_from_ln(psi: &PsiFunction, ln_x: f64) -> f64 {
    match psi {
        PsiFunction::Pow(s) => s.value() * ln_x,
        PsiFunction::ExpBase(b) => ln_x.exp() * b.value().ln(),
        PsiFunction::ExpExp => ln_x.exp().exp(),
        PsiFunction::Scale(c, inner) => c.value().ln() + ln_psi_from_ln(inner, ln_x),
    }
}

fn next_jarnik_quotient(psi: &PsiFunction, m: &BigInt, budget_bits: u64) -> Result<BigInt> {
    let log2_psi = ln_psi_at(psi, m) / std::f64::consts::LN_2;
    let need = log2_psi - log2_biguint(m.magnitude());
    if !(need.is_finite() && need <= budget_bits as f64) {
        return Err(Error::Resource {
            message: format!("needs about {need:.3e} bits, budget is {budget_bits}"),
            suggested_cap: None,
        });
    }
    let one = BigInt::one();
    if let Some(v) = psi.exact_at_int(m, budget_bits + 64) {
        let q = v / BigRational::from_integer(m.clone());
        return Ok(q.ceil().to_integer().max(one));
    }
    let mut prec = (log2_psi.max(0.0) as u64 + 96).min(budget_bits + 128) as u32;
    loop {
        let x = BigReal::from_int(m.clone(), prec);
        let y = psi.eval_ball(&x)?.div(&x)?;
        match y.ceil() {
            Ok(c) => return Ok(c.max(one)),
            Err(_) if (prec as u64) < budget_bits + 128 => prec = prec.saturating_mul(2),
            Err(e) => return Err(e),
        }
    }
}
