use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::realfield::BigReal;

/// `[a0; a1, a2, ...]` with a_k ≥ 1 for k ≥ 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContinuedFraction {
    a0: BigInt,
    quotients: Vec<BigInt>,
    /// `(start, length)` of the repeating block for quadratic surds, with
    /// `start` indexing `quotients`.
    period: Option<(usize, usize)>,
}

impl ContinuedFraction {
    pub fn new(a0: BigInt, quotients: Vec<BigInt>) -> Result<Self> {
        if let Some(k) = quotients.iter().position(|a| !a.is_positive()) {
            return Err(Error::Validation(format!(
                "partial quotient a_{} = {} must be ≥ 1",
                k + 1,
                quotients[k]
            )));
        }
        Ok(ContinuedFraction {
            a0,
            quotients,
            period: None,
        })
    }

    pub fn a0(&self) -> &BigInt {
        &self.a0
    }

    /// a_1, ..., a_K.
    pub fn partial_quotients(&self) -> &[BigInt] {
        &self.quotients
    }

    /// K, the index of the last partial quotient.
    pub fn depth(&self) -> usize {
        self.quotients.len()
    }

    /// a_k for 0 ≤ k ≤ K.
    pub fn term(&self, k: usize) -> &BigInt {
        if k == 0 {
            &self.a0
        } else {
            &self.quotients[k - 1]
        }
    }

    pub fn terms(&self) -> impl Iterator<Item = &BigInt> {
        std::iter::once(&self.a0).chain(self.quotients.iter())
    }

    pub fn period(&self) -> Option<(usize, usize)> {
        self.period
    }

    /// The first `k + 1` terms.
    pub fn truncate(&self, k: usize) -> ContinuedFraction {
        ContinuedFraction {
            a0: self.a0.clone(),
            quotients: self.quotients[..k.min(self.quotients.len())].to_vec(),
            period: self.period,
        }
    }

    pub fn value(&self) -> BigRational {
        let c = convergents(self);
        let last = c.last().expect("nonempty");
        BigRational::new(last.n.clone(), last.m.clone())
    }
}

impl fmt::Display for ContinuedFraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}", self.a0)?;
        for (i, a) in self.quotients.iter().enumerate() {
            f.write_str(if i == 0 { ";" } else { "," })?;
            write!(f, "{a}")?;
        }
        f.write_str("]")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Convergent {
    pub k: usize,
    pub n: BigInt,
    pub m: BigInt,
}

/// n_k / m_k for every k ≤ K, from n_{-1} = 1, n_{-2} = 0, m_{-1} = 0,
/// m_{-2} = 1.
pub fn convergents(cf: &ContinuedFraction) -> Vec<Convergent> {
    let mut out = Vec::with_capacity(cf.depth() + 1);
    let (mut n1, mut n2) = (BigInt::one(), BigInt::zero());
    let (mut m1, mut m2) = (BigInt::zero(), BigInt::one());
    for (k, a) in cf.terms().enumerate() {
        let n = a * &n1 + &n2;
        let m = a * &m1 + &m2;
        n2 = std::mem::replace(&mut n1, n.clone());
        m2 = std::mem::replace(&mut m1, m.clone());
        out.push(Convergent { k, n, m });
    }
    out
}

/// Expands a ball into its continued fraction, returning as many partial
/// quotients as the ball certifies (at most `k + 1`) and the reason the
/// expansion stopped early, if it did.
///
/// Both endpoints are run through Euclid's algorithm in lockstep; a quotient
/// is certified when the two floors agree.
pub fn cf_expand_prefix(theta: &BigReal, k: usize) -> (Option<ContinuedFraction>, Option<Error>) {
    let exact = theta.is_exact();
    let mut lo = theta.lower_rational();
    let mut hi = theta.upper_rational();
    let mut terms: Vec<BigInt> = Vec::new();
    let stop = |terms: &Vec<BigInt>, err: Error| -> (Option<ContinuedFraction>, Option<Error>) {
        let cf = terms.split_first().map(|(a0, rest)| ContinuedFraction {
            a0: a0.clone(),
            quotients: rest.to_vec(),
            period: None,
        });
        (cf, Some(err))
    };
    while terms.len() <= k {
        let f_lo = lo.floor();
        let f_hi = hi.floor();
        if f_lo != f_hi {
            let last = terms.len().checked_sub(1);
            return stop(
                &terms,
                Error::exhausted(
                    format!("certifying partial quotient a_{}", terms.len()),
                    last,
                ),
            );
        }
        let a = f_lo.to_integer();
        let r_lo = &lo - &f_lo;
        let r_hi = &hi - &f_hi;
        terms.push(a);
        if terms.len() > k {
            break;
        }
        if r_lo.is_zero() || r_hi.is_zero() {
            let err = if exact {
                Error::domain(format!(
                    "rational input: expansion terminates after a_{}",
                    terms.len() - 1
                ))
            } else {
                Error::exhausted(
                    format!("certifying partial quotient a_{}", terms.len()),
                    Some(terms.len() - 1),
                )
            };
            return stop(&terms, err);
        }
        // x ↦ 1/(x − a) reverses the order of the endpoints.
        let next_lo = r_hi.recip();
        let next_hi = r_lo.recip();
        lo = next_lo;
        hi = next_hi;
    }
    let (a0, rest) = terms.split_first().expect("k + 1 ≥ 1 terms");
    (
        Some(ContinuedFraction {
            a0: a0.clone(),
            quotients: rest.to_vec(),
            period: None,
        }),
        None,
    )
}

/// a_0, ..., a_K of the number enclosed by `theta`, each certified.
pub fn cf_expand(theta: &BigReal, k: usize) -> Result<ContinuedFraction> {
    if k == 0 {
        return Err(Error::domain("cf_expand needs K ≥ 1"));
    }
    match cf_expand_prefix(theta, k) {
        (Some(cf), None) => Ok(cf),
        (_, Some(e)) => Err(e),
        (None, None) => unreachable!("expansion returns terms or an error"),
    }
}

/// Exact expansion of √d by the (P, Q) recurrence
/// P' = aQ − P, Q' = (d − P'²)/Q, a' = ⌊(a_0 + P')/Q'⌋.
pub fn cf_expand_surd(d: u64, k: usize) -> Result<ContinuedFraction> {
    let a0 = d.isqrt();
    if d < 2 || a0 * a0 == d {
        return Err(Error::domain(format!("√{d} is not an irrational surd")));
    }
    let (d, a0) = (d as u128, a0 as u128);
    let (mut p, mut q, mut a) = (0u128, 1u128, a0);
    let mut quotients = Vec::with_capacity(k);
    let mut period_len = None;
    while quotients.len() < k {
        p = a * q - p;
        q = (d - p * p) / q;
        a = (a0 + p) / q;
        quotients.push(BigInt::from(a));
        if period_len.is_none() && a == 2 * a0 {
            period_len = Some(quotients.len());
        }
    }
    let period = match period_len {
        Some(len) => Some((0, len)),
        None => {
            // Finish the first period without storing it.
            let mut len = quotients.len();
            let (mut p, mut q, mut a) = (p, q, a);
            while a != 2 * a0 {
                p = a * q - p;
                q = (d - p * p) / q;
                a = (a0 + p) / q;
                len += 1;
            }
            Some((0, len))
        }
    };
    Ok(ContinuedFraction {
        a0: BigInt::from(a0),
        quotients,
        period,
    })
}

/// [1; 1, 1, ...] with K ones.
pub fn golden_cf(k: usize) -> ContinuedFraction {
    ContinuedFraction {
        a0: BigInt::one(),
        quotients: vec![BigInt::one(); k],
        period: Some((0, 1)),
    }
}

/// F_k by fast doubling (F_0 = 0, F_1 = 1).
pub fn fibonacci(k: u64) -> BigInt {
    fn pair(k: u64) -> (BigInt, BigInt) {
        if k == 0 {
            return (BigInt::zero(), BigInt::one());
        }
        let (a, b) = pair(k / 2);
        let c = &a * (&b * 2 - &a);
        let d = &a * &a + &b * &b;
        if k.is_odd() {
            let e = &c + &d;
            (d, e)
        } else {
            (c, d)
        }
    }
    pair(k).0
}

/// Binet's formula F_k = (φ^k − (−φ)^{−k})/√5 in double precision.
pub fn binet(k: i32) -> f64 {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    (phi.powi(k) - (-phi).powi(-k)) / 5f64.sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn sqrt_two_convergents() {
        let cf = cf_expand_surd(2, 4).unwrap();
        let c = convergents(&cf);
        let pairs: Vec<(i64, i64)> = c
            .iter()
            .map(|c| ((&c.n).try_into().unwrap(), (&c.m).try_into().unwrap()))
            .collect();
        assert_eq!(pairs, [(1, 1), (3, 2), (7, 5), (17, 12), (41, 29)]);
        assert_eq!(cf.period(), Some((0, 1)));
    }

    #[test]
    fn sqrt_three_and_squares() {
        let cf = cf_expand_surd(3, 6).unwrap();
        assert_eq!(cf.partial_quotients(), ints(&[1, 2, 1, 2, 1, 2]).as_slice());
        assert_eq!(cf.period(), Some((0, 2)));
        assert!(matches!(cf_expand_surd(4, 3), Err(Error::Domain(_))));
        assert_eq!(cf_expand_surd(13, 1).unwrap().period(), Some((0, 5)));
    }

    #[test]
    fn ball_expansion_of_sqrt_two() {
        let x = BigReal::from_int(2, 256).sqrt().unwrap();
        let cf = cf_expand(&x, 40).unwrap();
        assert_eq!(cf.a0(), &BigInt::from(1));
        assert!(cf.partial_quotients().iter().all(|a| a == &BigInt::from(2)));
    }

    #[test]
    fn ball_expansion_runs_out() {
        let x = BigReal::from_int(2, 64).sqrt().unwrap();
        match cf_expand(&x, 200) {
            Err(Error::PrecisionExhausted {
                last_certified: Some(k),
                ..
            }) => assert!(k > 10),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rational_input_is_rejected() {
        let x = BigReal::from_ratio(&BigInt::from(22), &BigInt::from(7), 128).unwrap();
        // 22/7 is not dyadic, so the ball is inexact and runs out of digits.
        assert!(cf_expand(&x, 10).is_err());
        let y = BigReal::from_dyadic(BigInt::from(13), -3, 64);
        assert!(matches!(cf_expand(&y, 10), Err(Error::Domain(_))));
    }

    #[test]
    fn fibonacci_values() {
        let f: Vec<BigInt> = (0..10).map(fibonacci).collect();
        assert_eq!(f, ints(&[0, 1, 1, 2, 3, 5, 8, 13, 21, 34]));
        assert!((binet(20) - 6765.0).abs() < 1e-9);
    }

    #[test]
    fn display() {
        assert_eq!(golden_cf(3).to_string(), "[1;1,1,1]");
        assert_eq!(
            ContinuedFraction::new(BigInt::from(2), vec![])
                .unwrap()
                .to_string(),
            "[2]"
        );
    }
}
