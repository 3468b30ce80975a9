//! Increasing functions ψ: [1, ∞) → (0, ∞) used as irrationality measure
//! functions, with a small textual grammar:
//!
//! ```text
//! psi   := "pow:" num | "exp:" num | "expexp" | "scale:" num ":" psi
//! num   := decimal | integer "/" integer
//! ```
//!
//! `pow:s` is `x^s` (s > 0), `exp:b` is `b^x` (b > 1), `expexp` is
//! `exp(exp(x))` and `scale:c:f` is `c·f(x)` (c > 0).

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::bigreal::{parse_decimal_rational, BigReal};
use crate::error::{Error, Result};

/// A positive rational parameter, kept exactly and as f64.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    exact: BigRational,
    value: f64,
}

impl Param {
    fn new(exact: BigRational) -> Self {
        let value =
            exact.numer().to_f64().unwrap_or(f64::NAN) / exact.denom().to_f64().unwrap_or(f64::NAN);
        Param { exact, value }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn exact(&self) -> &BigRational {
        &self.exact
    }

    fn ball(&self, prec: u32) -> Result<BigReal> {
        BigReal::from_rational(&self.exact, prec)
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.exact.is_integer() {
            write!(f, "{}", self.exact.numer())
        } else {
            write!(f, "{}/{}", self.exact.numer(), self.exact.denom())
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum PsiFunction {
    Pow(Param),
    ExpBase(Param),
    ExpExp,
    Scale(Param, Box<PsiFunction>),
}

impl fmt::Display for PsiFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PsiFunction::Pow(s) => write!(f, "pow:{s}"),
            PsiFunction::ExpBase(b) => write!(f, "exp:{b}"),
            PsiFunction::ExpExp => write!(f, "expexp"),
            PsiFunction::Scale(c, inner) => write!(f, "scale:{c}:{inner}"),
        }
    }
}

impl FromStr for PsiFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        psi_parse(s)
    }
}

struct Parser<'a> {
    input: &'a str,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, position: usize, message: impl Into<String>) -> Error {
        Error::Parse {
            input: self.input.to_string(),
            position,
            message: message.into(),
        }
    }

    fn rest(&self) -> &'a str {
        &self.input[self.pos..]
    }

    fn eat(&mut self, lit: &str) -> bool {
        if self.rest().starts_with(lit) {
            self.pos += lit.len();
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Result<(BigRational, usize)> {
        let start = self.pos;
        let len = self
            .rest()
            .find(|c: char| !(c.is_ascii_digit() || c == '.' || c == '/' || c == '-' || c == '+'))
            .unwrap_or(self.rest().len());
        if len == 0 {
            return Err(self.err(start, "expected a number"));
        }
        let text = &self.rest()[..len];
        let value = match text.split_once('/') {
            Some((n, d)) => {
                let n: BigInt = n.parse().map_err(|_| self.err(start, "bad numerator"))?;
                let d: BigInt = d
                    .parse()
                    .map_err(|_| self.err(start + n.to_string().len() + 1, "bad denominator"))?;
                if d.is_zero() {
                    return Err(self.err(start, "zero denominator"));
                }
                BigRational::new(n, d)
            }
            None => {
                parse_decimal_rational(text).ok_or_else(|| self.err(start, "malformed number"))?
            }
        };
        self.pos += len;
        Ok((value, start))
    }

    fn psi(&mut self) -> Result<PsiFunction> {
        let start = self.pos;
        if self.eat("pow:") {
            let (s, at) = self.number()?;
            if !s.is_positive() {
                return Err(Error::Validation(format!(
                    "pow exponent must be > 0 (at position {at})"
                )));
            }
            Ok(PsiFunction::Pow(Param::new(s)))
        } else if self.eat("expexp") {
            Ok(PsiFunction::ExpExp)
        } else if self.eat("exp:") {
            let (b, at) = self.number()?;
            if b <= BigRational::one() {
                return Err(Error::Validation(format!(
                    "exp base must be > 1 (at position {at})"
                )));
            }
            Ok(PsiFunction::ExpBase(Param::new(b)))
        } else if self.eat("scale:") {
            let (c, at) = self.number()?;
            if !c.is_positive() {
                return Err(Error::Validation(format!(
                    "scale factor must be > 0 (at position {at})"
                )));
            }
            if !self.eat(":") {
                return Err(self.err(self.pos, "expected ':' after scale factor"));
            }
            let inner = self.psi()?;
            Ok(PsiFunction::Scale(Param::new(c), Box::new(inner)))
        } else {
            Err(self.err(start, "expected one of pow:, exp:, expexp, scale:"))
        }
    }
}

/// Parses the ψ grammar described in the module docs.
pub fn psi_parse(text: &str) -> Result<PsiFunction> {
    let mut p = Parser {
        input: text,
        pos: 0,
    };
    let f = p.psi()?;
    if p.pos != text.len() {
        return Err(p.err(p.pos, "unexpected trailing input"));
    }
    Ok(f)
}

impl PsiFunction {
    /// ψ(x) in double precision; may overflow to +∞.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            PsiFunction::Pow(s) => x.powf(s.value),
            PsiFunction::ExpBase(b) => b.value.powf(x),
            PsiFunction::ExpExp => x.exp().exp(),
            PsiFunction::Scale(c, inner) => c.value * inner.eval(x),
        }
    }

    /// ln ψ(x), finite well past the range where `eval` overflows.
    pub fn ln_eval(&self, x: f64) -> f64 {
        match self {
            PsiFunction::Pow(s) => s.value * x.ln(),
            PsiFunction::ExpBase(b) => x * b.value.ln(),
            PsiFunction::ExpExp => x.exp(),
            PsiFunction::Scale(c, inner) => c.value.ln() + inner.ln_eval(x),
        }
    }

    /// ψ(1), the bottom of the range.
    pub fn min_value(&self) -> f64 {
        self.eval(1.0)
    }

    /// ψ⁻¹(y) in closed form. Every family of the grammar has one.
    pub fn inverse(&self, y: f64) -> Result<f64> {
        if !(y > 0.0) || !y.is_finite() {
            return Err(Error::domain(format!(
                "ψ⁻¹ needs a finite positive argument, got {y}"
            )));
        }
        self.inverse_ln(y.ln())?;
        Ok(self.raw_inverse(y).max(1.0))
    }

    fn raw_inverse(&self, y: f64) -> f64 {
        match self {
            PsiFunction::Pow(s) => y.powf(1.0 / s.value),
            PsiFunction::ExpBase(b) => y.ln() / b.value.ln(),
            PsiFunction::ExpExp => y.ln().ln(),
            PsiFunction::Scale(c, inner) => inner.raw_inverse(y / c.value),
        }
    }

    /// ψ⁻¹ of e^{ln_y}; avoids overflow for astronomically large arguments.
    pub fn inverse_ln(&self, ln_y: f64) -> Result<f64> {
        let floor = self.ln_eval(1.0);
        if ln_y < floor - 1e-12 * floor.abs().max(1.0) {
            return Err(Error::domain(format!(
                "ψ⁻¹ argument e^{ln_y} is below ψ(1) = e^{floor} for {self}"
            )));
        }
        let x = self.raw_inverse_ln(ln_y);
        Ok(x.max(1.0))
    }

    fn raw_inverse_ln(&self, ln_y: f64) -> f64 {
        match self {
            PsiFunction::Pow(s) => (ln_y / s.value).exp(),
            PsiFunction::ExpBase(b) => ln_y / b.value.ln(),
            PsiFunction::ExpExp => ln_y.ln(),
            PsiFunction::Scale(c, inner) => inner.raw_inverse_ln(ln_y - c.value.ln()),
        }
    }

    /// ψ evaluated on a ball, at the ball's precision.
    pub fn eval_ball(&self, x: &BigReal) -> Result<BigReal> {
        let prec = x.prec();
        match self {
            PsiFunction::Pow(s) => {
                if s.exact.is_integer() {
                    if let Some(n) = s.exact.numer().to_u64() {
                        return Ok(x.powi(n));
                    }
                }
                x.powf(&s.ball(prec)?)
            }
            PsiFunction::ExpBase(b) => b.ball(prec)?.ln()?.mul(x).exp(),
            PsiFunction::ExpExp => x.exp()?.exp(),
            PsiFunction::Scale(c, inner) => Ok(c.ball(prec)?.mul(&inner.eval_ball(x)?)),
        }
    }

    /// ψ(m) as an exact rational when the family makes that possible and the
    /// result has at most `max_bits` bits.
    pub fn exact_at_int(&self, m: &BigInt, max_bits: u64) -> Option<BigRational> {
        match self {
            PsiFunction::Pow(s) => {
                if !s.exact.is_integer() {
                    return None;
                }
                let e = s.exact.numer().to_u64()?;
                if e.checked_mul(m.bits())? > max_bits {
                    return None;
                }
                Some(BigRational::from_integer(num_traits::pow(
                    m.clone(),
                    e as usize,
                )))
            }
            PsiFunction::ExpBase(b) => {
                let e = m.to_u64()?;
                let width = b.exact.numer().bits().max(b.exact.denom().bits());
                if e.checked_mul(width)? > max_bits {
                    return None;
                }
                let n = num_traits::pow(b.exact.numer().clone(), e as usize);
                let d = num_traits::pow(b.exact.denom().clone(), e as usize);
                Some(BigRational::new(n, d))
            }
            PsiFunction::ExpExp => None,
            PsiFunction::Scale(c, inner) => Some(&c.exact * inner.exact_at_int(m, max_bits)?),
        }
    }

    /// Numerical check of the growth hypothesis 1/ψ(x) = o(1/x): ln ψ(x) − ln x
    /// must increase along a log-spaced sample of [1, 10^6] and gain at least
    /// ln 2 overall.
    pub fn outgrows_identity(&self) -> bool {
        let samples: Vec<f64> = (0..=12).map(|i| 10f64.powf(i as f64 / 2.0)).collect();
        let margin: Vec<f64> = samples.iter().map(|&x| self.ln_eval(x) - x.ln()).collect();
        let increasing = margin.windows(2).all(|w| w[1] > w[0] || w[1].is_infinite());
        increasing && margin[margin.len() - 1] - margin[0] >= std::f64::consts::LN_2
    }
}

/// Inverts ψ by bisection on ln ψ, to relative tolerance `rel_tol`.
///
/// Works for any increasing ψ; used to cross-check the closed forms.
pub fn inverse_by_bisection(psi: &PsiFunction, y: f64, rel_tol: f64) -> Result<f64> {
    let target = y.ln();
    if target < psi.ln_eval(1.0) {
        return Err(Error::domain("argument below ψ(1)"));
    }
    let mut lo = 1.0f64;
    let mut hi = 2.0f64;
    while psi.ln_eval(hi) < target {
        lo = hi;
        hi *= 2.0;
        if hi > 1e300 {
            return Err(Error::domain("ψ⁻¹ argument out of range"));
        }
    }
    while (hi - lo) > rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if psi.ln_eval(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_three_reference_families() {
        let f = psi_parse("exp:3").unwrap();
        assert!((f.eval(2.0) - 9.0).abs() < 1e-12);
        let y = 10f64.powf(1.5);
        assert!((f.inverse(y).unwrap() - y.ln() / 3f64.ln()).abs() < 1e-12);

        let g = psi_parse("expexp").unwrap();
        let y = 2f64.exp().exp();
        assert!((g.inverse(y).unwrap() - 2.0).abs() < 1e-12);

        let h = psi_parse("pow:1").unwrap();
        assert_eq!(h.inverse(17.5).unwrap(), 17.5);
    }

    #[test]
    fn pow_two_inverse() {
        let f = psi_parse("pow:2").unwrap();
        assert!((f.inverse(16.0).unwrap() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn scale_and_fractions() {
        let f = psi_parse("scale:1/2:pow:3/2").unwrap();
        assert_eq!(f.to_string(), "scale:1/2:pow:3/2");
        assert!((f.eval(4.0) - 4.0).abs() < 1e-12);
        assert!((f.inverse(4.0).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn parse_errors_carry_positions() {
        match psi_parse("scale:2:bogus") {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 8),
            other => panic!("unexpected {other:?}"),
        }
        match psi_parse("pow:") {
            Err(Error::Parse { position, .. }) => assert_eq!(position, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            psi_parse("pow:2x"),
            Err(Error::Parse { position: 5, .. })
        ));
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(psi_parse("pow:0"), Err(Error::Validation(_))));
        assert!(matches!(psi_parse("exp:1"), Err(Error::Validation(_))));
        assert!(matches!(psi_parse("exp:0.5"), Err(Error::Validation(_))));
        assert!(matches!(
            psi_parse("scale:-1:pow:1"),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn inverse_below_range_is_domain_error() {
        let f = psi_parse("exp:3").unwrap();
        assert!(matches!(f.inverse(2.0), Err(Error::Domain(_))));
    }

    #[test]
    fn bisection_agrees_with_closed_form() {
        let g = psi_parse("expexp").unwrap();
        let y = 2f64.exp().exp();
        let b = inverse_by_bisection(&g, y, 1e-14).unwrap();
        assert!((b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn exact_values_at_integers() {
        let f = psi_parse("exp:3/2").unwrap();
        let v = f.exact_at_int(&BigInt::from(4), 1 << 20).unwrap();
        assert_eq!(v, BigRational::new(BigInt::from(81), BigInt::from(16)));
        assert!(psi_parse("expexp")
            .unwrap()
            .exact_at_int(&BigInt::from(2), 64)
            .is_none());
    }

    #[test]
    fn growth_hypothesis() {
        assert!(!psi_parse("pow:1").unwrap().outgrows_identity());
        assert!(!psi_parse("scale:3:pow:1").unwrap().outgrows_identity());
        assert!(psi_parse("pow:2").unwrap().outgrows_identity());
        assert!(psi_parse("expexp").unwrap().outgrows_identity());
    }

    #[test]
    fn ball_evaluation_matches_f64() {
        let x = BigReal::from_f64(2.5, 128).unwrap();
        for text in ["pow:3", "pow:1.5", "exp:3", "expexp", "scale:2:exp:1.5"] {
            let f = psi_parse(text).unwrap();
            let b = f.eval_ball(&x).unwrap().to_f64();
            assert!((b - f.eval(2.5)).abs() <= 1e-13 * b, "{text}");
        }
    }
}
