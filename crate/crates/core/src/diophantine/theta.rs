//! Concrete syntax for θ:
//!
//! ```text
//! rat:a/b            a/b (the only rational form)
//! surd:d             √d, d not a perfect square
//! golden             (1 + √5)/2
//! cf:[a0;a1,a2,...]  the finite continued fraction, exactly
//! taubeta:a/b:depth  Σ_j (b/a)^{e_j}, e_0 = 1, e_{j+1} = a^{e_j}
//! jarnik:<psi>:K     Jarník's number for ψ, K quotients materialized
//! dec:<digits>       a decimal, ± half a unit in its last digit
//! ```

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::cf::{cf_expand_surd, convergents, golden_cf, ContinuedFraction};
use super::construct::{construct_jarnik_prefix, rational_ball, tau_beta_ball, DEFAULT_BIT_BUDGET};
use crate::error::{Error, Result};
use crate::realfield::{parse_decimal_rational, psi_parse, BigReal, PsiFunction};

#[derive(Debug, Clone, PartialEq)]
pub enum ThetaSpec {
    Rational { a: BigInt, b: BigInt },
    Surd(u64),
    Golden,
    CfLiteral(ContinuedFraction),
    TauBeta { a: u64, b: u64, depth: usize },
    Jarnik { psi: PsiFunction, depth: usize },
    Decimal(String),
}

impl fmt::Display for ThetaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ThetaSpec::Rational { a, b } => write!(f, "rat:{a}/{b}"),
            ThetaSpec::Surd(d) => write!(f, "surd:{d}"),
            ThetaSpec::Golden => f.write_str("golden"),
            ThetaSpec::CfLiteral(cf) => write!(f, "cf:{cf}"),
            ThetaSpec::TauBeta { a, b, depth } => write!(f, "taubeta:{a}/{b}:{depth}"),
            ThetaSpec::Jarnik { psi, depth } => write!(f, "jarnik:{psi}:{depth}"),
            ThetaSpec::Decimal(s) => write!(f, "dec:{s}"),
        }
    }
}

impl FromStr for ThetaSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ThetaSpec::parse(s)
    }
}

fn perr(input: &str, position: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        input: input.to_string(),
        position,
        message: message.into(),
    }
}

fn parse_uint<T: FromStr>(input: &str, text: &str, at: usize, what: &str) -> Result<T> {
    if text.is_empty() || !text.bytes().all(|c| c.is_ascii_digit()) {
        return Err(perr(input, at, format!("expected {what}")));
    }
    text.parse()
        .map_err(|_| perr(input, at, format!("{what} out of range")))
}

fn parse_int(input: &str, text: &str, at: usize, what: &str) -> Result<BigInt> {
    let digits = text.strip_prefix('-').unwrap_or(text);
    if digits.is_empty() || !digits.bytes().all(|c| c.is_ascii_digit()) {
        return Err(perr(input, at, format!("expected {what}")));
    }
    text.parse()
        .map_err(|_| perr(input, at, format!("bad {what}")))
}

fn parse_cf_literal(input: &str, body: &str, at: usize) -> Result<ContinuedFraction> {
    let inner = body
        .strip_prefix('[')
        .ok_or_else(|| perr(input, at, "expected '['"))?;
    let inner = inner
        .strip_suffix(']')
        .ok_or_else(|| perr(input, input.len(), "expected ']'"))?;
    let at = at + 1;
    let (head, tail) = match inner.split_once(';') {
        Some((h, t)) => (h, Some(t)),
        None => (inner, None),
    };
    let a0 = parse_int(input, head.trim(), at, "integer a0")?;
    let mut quotients = Vec::new();
    if let Some(tail) = tail {
        let mut offset = at + head.len() + 1;
        for piece in tail.split(',') {
            let q = parse_int(input, piece.trim(), offset, "partial quotient")?;
            quotients.push(q);
            offset += piece.len() + 1;
        }
    }
    ContinuedFraction::new(a0, quotients)
}

impl ThetaSpec {
    pub fn parse(input: &str) -> Result<Self> {
        let (tag, body) = input.split_once(':').unwrap_or((input, ""));
        let at = tag.len() + 1;
        match tag {
            "golden" if body.is_empty() && !input.contains(':') => Ok(ThetaSpec::Golden),
            "rat" => {
                let (a, b) = match body.split_once('/') {
                    Some((a, b)) => (
                        parse_int(input, a, at, "numerator")?,
                        parse_int(input, b, at + a.len() + 1, "denominator")?,
                    ),
                    None => (parse_int(input, body, at, "numerator")?, BigInt::one()),
                };
                if b.is_zero() {
                    return Err(Error::Validation("rat: zero denominator".into()));
                }
                let r = BigRational::new(a, b);
                Ok(ThetaSpec::Rational {
                    a: r.numer().clone(),
                    b: r.denom().clone(),
                })
            }
            "surd" => {
                let d: u64 = parse_uint(input, body, at, "non-square integer d ≥ 2")?;
                let s = d.isqrt();
                if d < 2 || s * s == d {
                    return Err(Error::Validation(format!(
                        "surd:{d}: d must be a non-square ≥ 2"
                    )));
                }
                Ok(ThetaSpec::Surd(d))
            }
            "cf" => Ok(ThetaSpec::CfLiteral(parse_cf_literal(input, body, at)?)),
            "taubeta" => {
                let (frac, depth) = body
                    .split_once(':')
                    .ok_or_else(|| perr(input, input.len(), "expected ':depth'"))?;
                let (a, b) = frac
                    .split_once('/')
                    .ok_or_else(|| perr(input, at, "expected a/b"))?;
                let a: u64 = parse_uint(input, a, at, "integer a")?;
                let b: u64 = parse_uint(input, b, at + frac.find('/').unwrap() + 1, "integer b")?;
                let depth: usize = parse_uint(input, depth, at + frac.len() + 1, "depth")?;
                if b == 0 || a <= b || num_integer::gcd(a, b) != 1 {
                    return Err(Error::Validation(format!(
                        "taubeta needs a > b ≥ 1 with gcd(a, b) = 1, got {a}/{b}"
                    )));
                }
                if depth == 0 {
                    return Err(Error::Validation("taubeta depth must be ≥ 1".into()));
                }
                Ok(ThetaSpec::TauBeta { a, b, depth })
            }
            "jarnik" => {
                let cut = body
                    .rfind(':')
                    .ok_or_else(|| perr(input, input.len(), "expected ':K'"))?;
                let psi = psi_parse(&body[..cut]).map_err(|e| match e {
                    Error::Parse {
                        position, message, ..
                    } => perr(input, at + position, message),
                    other => other,
                })?;
                let depth: usize =
                    parse_uint(input, &body[cut + 1..], at + cut + 1, "quotient count K")?;
                if depth == 0 {
                    return Err(Error::Validation("jarnik needs K ≥ 1".into()));
                }
                Ok(ThetaSpec::Jarnik { psi, depth })
            }
            "dec" => {
                let r = parse_decimal_rational(body)
                    .ok_or_else(|| perr(input, at, "expected a decimal"))?;
                if !r.is_positive() {
                    return Err(Error::Validation("dec: θ must be positive".into()));
                }
                Ok(ThetaSpec::Decimal(body.to_string()))
            }
            _ => Err(perr(
                input,
                0,
                "expected one of rat:, surd:, golden, cf:, taubeta:, jarnik:, dec:",
            )),
        }
    }

    /// Exact value when θ is rational.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self {
            ThetaSpec::Rational { a, b } => Some(BigRational::new(a.clone(), b.clone())),
            ThetaSpec::CfLiteral(cf) => Some(cf.value()),
            _ => None,
        }
    }

    pub fn is_rational(&self) -> bool {
        matches!(self, ThetaSpec::Rational { .. })
    }

    /// Diophantine operations presume irrational θ; `rat:` is refused.
    pub fn require_irrational(&self) -> Result<()> {
        if self.is_rational() {
            Err(Error::domain(format!(
                "{self} is rational; an irrational θ is required"
            )))
        } else {
            Ok(())
        }
    }

    /// A ball containing θ, as tight as `prec` bits allow. Jarník numbers are
    /// limited by how many quotients were materialized.
    pub fn ball(&self, prec: u32) -> Result<BigReal> {
        match self {
            ThetaSpec::Rational { .. } | ThetaSpec::CfLiteral(_) => {
                rational_ball(&self.as_rational().expect("rational variant"), prec)
            }
            ThetaSpec::Surd(d) => BigReal::from_int(*d, prec).sqrt(),
            ThetaSpec::Golden => {
                let five = BigReal::from_int(5, prec + 8).sqrt()?;
                let one = BigReal::from_int(1, prec + 8);
                Ok(five
                    .add(&one)
                    .mul(&BigReal::from_dyadic(BigInt::one(), -1, prec))
                    .with_prec(prec))
            }
            ThetaSpec::TauBeta { a, b, .. } => tau_beta_ball(*a, *b, prec),
            ThetaSpec::Jarnik { psi, depth } => {
                let (cf, _) = construct_jarnik_prefix(psi, *depth, DEFAULT_BIT_BUDGET)?;
                Ok(tail_ball(&cf, prec))
            }
            ThetaSpec::Decimal(text) => {
                let r = parse_decimal_rational(text).expect("validated at parse time");
                let places = text.split_once('.').map_or(0, |(_, f)| f.len());
                let half_unit = BigRational::new(
                    BigInt::one(),
                    BigInt::from(2) * num_traits::pow(BigInt::from(10), places),
                );
                hull(
                    &rational_ball(&(&r - &half_unit), prec)?,
                    &rational_ball(&(&r + &half_unit), prec)?,
                )
            }
        }
    }

    /// θ rounded to double precision.
    pub fn to_f64(&self) -> Result<f64> {
        let v = self.ball(128)?.to_f64();
        if !(v > 0.0) {
            return Err(Error::domain(format!("θ = {self} must be positive")));
        }
        Ok(v)
    }

    /// The first K + 1 terms of θ's continued fraction, from exact data where
    /// the variant has it and from certified ball expansion otherwise.
    pub fn continued_fraction(&self, k: usize, prec: u32) -> Result<ContinuedFraction> {
        self.require_irrational()?;
        match self {
            ThetaSpec::Surd(d) => cf_expand_surd(*d, k),
            ThetaSpec::Golden => Ok(golden_cf(k)),
            ThetaSpec::CfLiteral(cf) if cf.depth() >= k => Ok(cf.truncate(k)),
            ThetaSpec::CfLiteral(cf) => Err(Error::domain(format!(
                "literal {cf} has only {} partial quotients",
                cf.depth()
            ))),
            ThetaSpec::Jarnik { psi, .. } => {
                match construct_jarnik_prefix(psi, k, DEFAULT_BIT_BUDGET)? {
                    (cf, None) => Ok(cf),
                    (_, Some(e)) => Err(e),
                }
            }
            _ => super::cf::cf_expand(&self.ball(prec)?, k),
        }
    }
}

/// Smallest ball (up to rounding) containing two balls.
pub(crate) fn hull(x: &BigReal, y: &BigReal) -> Result<BigReal> {
    let prec = x.prec().max(y.prec());
    let half = BigReal::from_dyadic(BigInt::one(), -1, prec);
    let mid = x.add(y).mul(&half);
    let spread = y.sub(x).mul(&half);
    Ok(mid.add(&BigReal::error_ball(&spread)))
}

/// θ = [a_0; a_1, ..., a_K, α] with unknown α ≥ 1 lies between n_K/m_K and
/// the mediant (n_K + n_{K−1})/(m_K + m_{K−1}).
fn tail_ball(cf: &ContinuedFraction, prec: u32) -> BigReal {
    let c = convergents(cf);
    let last = &c[c.len() - 1];
    let (n_prev, m_prev) = if c.len() >= 2 {
        (c[c.len() - 2].n.clone(), c[c.len() - 2].m.clone())
    } else {
        (BigInt::one(), BigInt::zero())
    };
    let p = BigRational::new(last.n.clone(), last.m.clone());
    let q = BigRational::new(&last.n + n_prev, &last.m + m_prev);
    let bp = rational_ball(&p, prec).expect("nonzero denominator");
    let bq = rational_ball(&q, prec).expect("nonzero denominator");
    hull(&bp, &bq).expect("finite balls")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trips() {
        for text in [
            "rat:2/1",
            "rat:3/2",
            "surd:2",
            "golden",
            "cf:[1;2,2,2]",
            "taubeta:2/1:4",
            "jarnik:expexp:1",
            "jarnik:scale:2:pow:3/2:5",
            "dec:1.4142",
        ] {
            assert_eq!(ThetaSpec::parse(text).unwrap().to_string(), text);
        }
        assert_eq!(ThetaSpec::parse("rat:4/2").unwrap().to_string(), "rat:2/1");
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            ThetaSpec::parse("surd:4"),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            ThetaSpec::parse("taubeta:2/2:3"),
            Err(Error::Validation(_))
        ));
        assert!(matches!(
            ThetaSpec::parse("pi"),
            Err(Error::Parse { position: 0, .. })
        ));
        assert!(matches!(
            ThetaSpec::parse("surd:x"),
            Err(Error::Parse { position: 5, .. })
        ));
        assert!(matches!(
            ThetaSpec::parse("jarnik:pow:q:3"),
            Err(Error::Parse { position: 11, .. })
        ));
        assert!(matches!(
            ThetaSpec::parse("cf:[1;2,x]"),
            Err(Error::Parse { position: 8, .. })
        ));
        assert!(matches!(
            ThetaSpec::parse("cf:[1;2,0]"),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn values() {
        let s2 = ThetaSpec::parse("surd:2").unwrap().to_f64().unwrap();
        assert_eq!(s2, std::f64::consts::SQRT_2);
        let g = ThetaSpec::Golden.to_f64().unwrap();
        assert!((g - 1.618033988749895).abs() < 1e-15);
        let t = ThetaSpec::parse("taubeta:2/1:4").unwrap().to_f64().unwrap();
        assert_eq!(t, 0.8125152587890625);
        let d = ThetaSpec::parse("dec:1.5").unwrap().ball(64).unwrap();
        assert!(d.log2_radius() < -4.0 && d.log2_radius() > -5.0);
    }

    #[test]
    fn jarnik_ball_is_between_convergent_and_mediant() {
        let j = ThetaSpec::parse("jarnik:exp:3:3").unwrap();
        let x = j.to_f64().unwrap();
        // [0; 3, 9, 817028301963]
        let expected = 1.0 / (3.0 + 1.0 / (9.0 + 1.0 / 817028301963.0));
        assert!((x - expected).abs() < 1e-15);
    }

    #[test]
    fn rational_is_refused_by_cf() {
        let r = ThetaSpec::parse("rat:22/7").unwrap();
        assert!(matches!(
            r.continued_fraction(5, 128),
            Err(Error::Domain(_))
        ));
    }
}
