//! Arbitrary-precision reals as midpoint–radius balls.
//!
//! A [`BigReal`] is the closed interval `(mant ± rad) · 2^exp`. The mantissa
//! is kept to at most `prec` significant bits and the radius to at most
//! [`RAD_BITS`] bits, so every result carries a rigorous error bound. Exact
//! dyadic values have `rad == 0` and stay exact as long as they fit the
//! precision budget.

use std::cmp::Ordering;
use std::fmt;
use std::sync::{Mutex, OnceLock};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::{Integer, Roots};
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Largest radius, in bits, stored before the mantissa is shortened.
const RAD_BITS: u64 = 30;

/// Extra working bits used by the transcendental kernels.
const GUARD_BITS: u64 = 64;

#[derive(Clone, PartialEq, Eq)]
pub struct BigReal {
    mant: BigInt,
    exp: i64,
    rad: u64,
    prec: u32,
}

impl fmt::Debug for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "BigReal({:e} ± {} ulp @2^{}, {} bits)",
            self.to_f64(),
            self.rad,
            self.exp,
            self.prec
        )
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.17e}", self.to_f64())
    }
}

/// floor(m / 2^s)
fn floor_shift(m: &BigInt, s: u64) -> BigInt {
    if s == 0 {
        return m.clone();
    }
    let d = BigInt::one() << s;
    m.div_floor(&d)
}

/// Round-to-nearest m / 2^s; also reports whether any bits were dropped.
fn round_shift(m: &BigInt, s: u64) -> (BigInt, bool) {
    if s == 0 {
        return (m.clone(), false);
    }
    let half = BigInt::one() << (s - 1);
    let q = floor_shift(&(m + &half), s);
    let lost = !(m - (&q << s)).is_zero();
    (q, lost)
}

fn ceil_shift_u(r: &BigUint, s: u64) -> BigUint {
    if s == 0 {
        return r.clone();
    }
    let d = BigUint::one() << s;
    (r + &d - 1u32) / d
}

fn shift_signed(m: &BigInt, s: i64) -> (BigInt, bool) {
    if s >= 0 {
        (m << (s as u64), false)
    } else {
        round_shift(m, s.unsigned_abs())
    }
}

fn round_div(n: &BigInt, d: &BigInt) -> BigInt {
    // d > 0
    let two_n: BigInt = n << 1u32;
    let two_d: BigInt = d << 1u32;
    (two_n + d).div_floor(&two_d)
}

/// Multiply by 2^e without intermediate overflow.
pub(crate) fn ldexp(mut x: f64, mut e: i64) -> f64 {
    let up = 2f64.powi(1000);
    let down = 2f64.powi(-1000);
    while e > 1000 {
        x *= up;
        e -= 1000;
        if x.is_infinite() {
            return x;
        }
    }
    while e < -1000 {
        x *= down;
        e += 1000;
        if x == 0.0 {
            return x;
        }
    }
    x * 2f64.powi(e as i32)
}

/// (top 64 bits as f64, remaining shift) for a non-negative integer.
fn top_bits(m: &BigUint) -> (f64, i64) {
    let bits = m.bits();
    if bits <= 64 {
        (m.to_f64().unwrap_or(0.0), 0)
    } else {
        let s = bits - 64;
        ((m >> s).to_f64().unwrap_or(0.0), s as i64)
    }
}

/// log2 of a positive big integer, accurate to ~1e-15 relative.
pub(crate) fn log2_biguint(m: &BigUint) -> f64 {
    if m.is_zero() {
        return f64::NEG_INFINITY;
    }
    let (t, s) = top_bits(m);
    t.log2() + s as f64
}

impl BigReal {
    fn normalize(mant: BigInt, exp: i64, rad: BigUint, prec: u32) -> BigReal {
        let mbits = mant.bits();
        let rbits = rad.bits();
        let mut s = mbits.saturating_sub(prec as u64);
        if rbits > RAD_BITS {
            s = s.max(rbits - RAD_BITS);
        }
        let (mant, exp, rad) = if s == 0 {
            (mant, exp, rad.to_u64().expect("radius bounded"))
        } else {
            let (m2, lost) = round_shift(&mant, s);
            let mut r2 = ceil_shift_u(&rad, s).to_u64().expect("radius bounded");
            if lost {
                r2 += 1;
            }
            (m2, exp + s as i64, r2)
        };
        if mant.is_zero() && rad == 0 {
            return BigReal {
                mant,
                exp: 0,
                rad: 0,
                prec,
            };
        }
        BigReal {
            mant,
            exp,
            rad,
            prec,
        }
    }

    /// Exact zero.
    pub fn zero(prec: u32) -> Self {
        BigReal {
            mant: BigInt::zero(),
            exp: 0,
            rad: 0,
            prec,
        }
    }

    /// Exact integer; the precision grows to hold it.
    pub fn from_int(n: impl Into<BigInt>, prec: u32) -> Self {
        let n = n.into();
        let p = prec.max(n.bits() as u32);
        Self::normalize(n, 0, BigUint::zero(), p)
    }

    /// Exact dyadic rational `mant · 2^exp`.
    pub fn from_dyadic(mant: BigInt, exp: i64, prec: u32) -> Self {
        let p = prec.max(mant.bits() as u32);
        Self::normalize(mant, exp, BigUint::zero(), p)
    }

    /// Exact value of a finite f64.
    pub fn from_f64(x: f64, prec: u32) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::domain(format!("non-finite value {x}")));
        }
        if x == 0.0 {
            return Ok(Self::zero(prec));
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if raw_exp == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), raw_exp - 1075)
        };
        Ok(Self::from_dyadic(
            BigInt::from(sign) * BigInt::from(m),
            e,
            prec.max(53),
        ))
    }

    /// `num / den` rounded to `prec` bits with a one-ulp radius.
    pub fn from_ratio(num: &BigInt, den: &BigInt, prec: u32) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::domain("zero denominator"));
        }
        let a = Self::from_int(num.clone(), prec);
        let b = Self::from_int(den.clone(), prec);
        a.div(&b).map(|q| q.with_prec(prec))
    }

    pub fn from_rational(r: &BigRational, prec: u32) -> Result<Self> {
        Self::from_ratio(r.numer(), r.denom(), prec)
    }

    /// Parses a plain decimal literal (`-12.5`, `3.14159`) exactly, then
    /// rounds to `prec` bits.
    pub fn from_decimal(text: &str, prec: u32) -> Result<Self> {
        let r = parse_decimal_rational(text).ok_or_else(|| Error::Parse {
            input: text.to_string(),
            position: 0,
            message: "expected a decimal number".into(),
        })?;
        Self::from_rational(&r, prec)
    }

    /// A ball centred at zero with the given (absolute) radius bound.
    pub fn error_ball(bound: &BigReal) -> Self {
        let hi = bound.abs_upper();
        let r = hi.mant.magnitude().clone() + 1u32;
        Self::normalize(BigInt::zero(), hi.exp, r, bound.prec)
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn is_exact(&self) -> bool {
        self.rad == 0
    }

    /// Radius in units of the last place.
    pub fn radius_ulps(&self) -> u64 {
        self.rad
    }

    pub fn exponent(&self) -> i64 {
        self.exp
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mant
    }

    /// Same value, possibly rounded to a different precision budget.
    pub fn with_prec(&self, prec: u32) -> Self {
        Self::normalize(self.mant.clone(), self.exp, BigUint::from(self.rad), prec)
    }

    fn ball_parts(&self) -> (BigInt, BigInt) {
        let r = BigInt::from(self.rad);
        (&self.mant - &r, &self.mant + &r)
    }

    /// Exact lower endpoint.
    pub fn lower(&self) -> Self {
        let (lo, _) = self.ball_parts();
        Self::from_dyadic(lo, self.exp, self.prec)
    }

    /// Exact upper endpoint.
    pub fn upper(&self) -> Self {
        let (_, hi) = self.ball_parts();
        Self::from_dyadic(hi, self.exp, self.prec)
    }

    /// Exact upper bound on |x|.
    pub fn abs_upper(&self) -> Self {
        let m = self.mant.magnitude() + BigUint::from(self.rad);
        Self::from_dyadic(BigInt::from(m), self.exp, self.prec)
    }

    /// Lower endpoint as an exact rational.
    pub fn lower_rational(&self) -> BigRational {
        let (lo, _) = self.ball_parts();
        dyadic_to_rational(lo, self.exp)
    }

    pub fn upper_rational(&self) -> BigRational {
        let (_, hi) = self.ball_parts();
        dyadic_to_rational(hi, self.exp)
    }

    pub fn mid_rational(&self) -> BigRational {
        dyadic_to_rational(self.mant.clone(), self.exp)
    }

    /// Midpoint converted to the nearest f64 (may overflow to ±inf or
    /// underflow to 0).
    pub fn to_f64(&self) -> f64 {
        if self.mant.is_zero() {
            return 0.0;
        }
        let (t, s) = top_bits(self.mant.magnitude());
        let v = ldexp(t, s + self.exp);
        if self.mant.sign() == Sign::Minus {
            -v
        } else {
            v
        }
    }

    /// log2 |midpoint|; −∞ for a zero midpoint. Valid far outside the f64
    /// exponent range.
    pub fn log2_abs(&self) -> f64 {
        log2_biguint(self.mant.magnitude()) + self.exp as f64
    }

    /// Upper bound on the absolute error, as log2 (−∞ when exact).
    pub fn log2_radius(&self) -> f64 {
        if self.rad == 0 {
            f64::NEG_INFINITY
        } else {
            (self.rad as f64).log2() + self.exp as f64
        }
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero() && self.rad == 0
    }

    /// Certified sign, if the ball excludes zero.
    pub fn sign(&self) -> Option<Ordering> {
        if self.is_zero() {
            return Some(Ordering::Equal);
        }
        if self.mant.magnitude() > &BigUint::from(self.rad) {
            Some(if self.mant.is_negative() {
                Ordering::Less
            } else {
                Ordering::Greater
            })
        } else {
            None
        }
    }

    /// Certified comparison; `None` when the balls overlap.
    pub fn cmp_certified(&self, other: &BigReal) -> Option<Ordering> {
        let p = self.prec.max(other.prec) + 64;
        self.with_prec(p).sub(&other.with_prec(p)).sign()
    }

    /// True only when every point of the ball is `< other`.
    pub fn certainly_lt(&self, other: &BigReal) -> bool {
        self.cmp_certified(other) == Some(Ordering::Less)
    }

    pub fn neg(&self) -> Self {
        BigReal {
            mant: -self.mant.clone(),
            exp: self.exp,
            rad: self.rad,
            prec: self.prec,
        }
    }

    /// |x| as a ball; a ball straddling zero becomes `[0, max|x|]`.
    pub fn abs(&self) -> Self {
        if self.mant.magnitude() >= &BigUint::from(self.rad) {
            return BigReal {
                mant: BigInt::from(self.mant.magnitude().clone()),
                ..self.clone()
            };
        }
        let m = self.mant.magnitude() + BigUint::from(self.rad);
        Self::normalize(BigInt::from(m.clone()), self.exp - 1, m, self.prec)
    }

    pub fn add(&self, other: &BigReal) -> Self {
        let prec = self.prec.max(other.prec);
        if self.rad == 0 && other.rad == 0 {
            let e = self.exp.min(other.exp);
            let a = &self.mant << ((self.exp - e) as u64);
            let b = &other.mant << ((other.exp - e) as u64);
            return Self::normalize(a + b, e, BigUint::zero(), prec);
        }
        let e = [self, other]
            .iter()
            .filter(|x| x.rad > 0)
            .map(|x| x.exp)
            .max()
            .expect("one operand is inexact");
        let align = |x: &BigReal| -> (BigInt, BigUint) {
            if x.exp >= e {
                let s = (x.exp - e) as u64;
                (&x.mant << s, BigUint::from(x.rad) << s)
            } else {
                let s = (e - x.exp) as u64;
                let (m, lost) = round_shift(&x.mant, s);
                let mut r = ceil_shift_u(&BigUint::from(x.rad), s);
                if lost {
                    r += 1u32;
                }
                (m, r)
            }
        };
        let (am, ar) = align(self);
        let (bm, br) = align(other);
        Self::normalize(am + bm, e, ar + br, prec)
    }

    pub fn sub(&self, other: &BigReal) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &BigReal) -> Self {
        let prec = self.prec.max(other.prec);
        self.mul_with_prec(other, prec)
    }

    fn mul_with_prec(&self, other: &BigReal, prec: u32) -> Self {
        let mant = &self.mant * &other.mant;
        let ra = BigUint::from(self.rad);
        let rb = BigUint::from(other.rad);
        let rad = self.mant.magnitude() * &rb + other.mant.magnitude() * &ra + &ra * &rb;
        Self::normalize(mant, self.exp + other.exp, rad, prec)
    }

    /// Multiplication by an exact integer without loss of absolute accuracy.
    pub fn mul_int(&self, k: &BigInt) -> Self {
        let prec = self.prec + k.bits() as u32 + 1;
        self.mul_with_prec(&BigReal::from_int(k.clone(), prec), prec)
    }

    pub fn div(&self, other: &BigReal) -> Result<Self> {
        let prec = self.prec.max(other.prec);
        let bm = &other.mant;
        let rb = BigInt::from(other.rad);
        if bm.magnitude() <= other.rad_big().magnitude() {
            return Err(Error::exhausted(
                "dividing by a ball that contains zero",
                None,
            ));
        }
        let am = &self.mant;
        let ra = BigInt::from(self.rad);
        let k = (prec as i64 + 2 + bm.bits() as i64 - am.bits() as i64).max(0) as u64;
        let (sign_b, bmag) = if bm.is_negative() {
            (-1, -bm.clone())
        } else {
            (1, bm.clone())
        };
        // Work with a positive divisor; flip the numerator sign instead.
        let an = if sign_b < 0 { -am.clone() } else { am.clone() };
        let q = round_div(&(&an << k), &bmag);
        let num_lo: BigInt = (&an - &ra) << k;
        let num_hi: BigInt = (&an + &ra) << k;
        let den_lo = &bmag - &rb;
        let den_hi = &bmag + &rb;
        let mut lo: Option<BigInt> = None;
        let mut hi: Option<BigInt> = None;
        for n in [&num_lo, &num_hi] {
            for d in [&den_lo, &den_hi] {
                let f = n.div_floor(d);
                let c = -((-n).div_floor(d));
                lo = Some(match lo {
                    Some(v) if v <= f => v,
                    _ => f,
                });
                hi = Some(match hi {
                    Some(v) if v >= c => v,
                    _ => c,
                });
            }
        }
        let lo = lo.expect("four corners");
        let hi = hi.expect("four corners");
        let spread = (&hi - &q).max(&q - &lo);
        let rad = spread.magnitude() + 1u32;
        Ok(Self::normalize(
            q,
            self.exp - other.exp - k as i64,
            rad,
            prec,
        ))
    }

    fn rad_big(&self) -> BigInt {
        BigInt::from(self.rad)
    }

    pub fn recip(&self) -> Result<Self> {
        BigReal::from_int(1, self.prec).div(self)
    }

    pub fn sqrt(&self) -> Result<Self> {
        if self.is_zero() {
            return Ok(self.clone());
        }
        let (lo, hi) = self.ball_parts();
        if hi.is_negative() {
            return Err(Error::domain("square root of a negative number"));
        }
        let prec = self.prec;
        let want = 2 * prec as i64 + 4;
        let mut t = (want - self.mant.bits() as i64).max(0);
        if (self.exp - t).rem_euclid(2) != 0 {
            t += 1;
        }
        let t = t as u64;
        let q = (&self.mant.clone().max(BigInt::zero()) << t).sqrt();
        let lo = lo.max(BigInt::zero());
        let q_lo = (lo << t).sqrt();
        let q_hi = (hi << t).sqrt() + 1u32;
        let spread = (&q_hi - &q).max(&q - &q_lo);
        let rad = spread.magnitude() + 1u32;
        Ok(Self::normalize(q, (self.exp - t as i64) / 2, rad, prec))
    }

    /// Certified floor; fails when the ball straddles an integer.
    pub fn floor(&self) -> Result<BigInt> {
        let (lo, hi) = self.ball_parts();
        let f = |m: &BigInt| -> BigInt {
            if self.exp >= 0 {
                m << (self.exp as u64)
            } else {
                floor_shift(m, self.exp.unsigned_abs())
            }
        };
        let a = f(&lo);
        let b = f(&hi);
        if a == b {
            Ok(a)
        } else {
            Err(Error::exhausted("taking a certified floor", None))
        }
    }

    pub fn ceil(&self) -> Result<BigInt> {
        self.neg().floor().map(|f| -f)
    }

    /// Integer nearest to the midpoint (ties away from zero).
    pub fn round_mid(&self) -> BigInt {
        if self.exp >= 0 {
            &self.mant << (self.exp as u64)
        } else {
            round_shift(&self.mant, self.exp.unsigned_abs()).0
        }
    }

    /// ‖x‖, the distance to the nearest integer, as a ball inside [0, 1/2].
    pub fn nearest_int_distance(&self) -> Self {
        let n = self.round_mid();
        let d = self.sub(&BigReal::from_int(n, self.prec)).abs();
        let half = BigReal::from_dyadic(BigInt::one(), -1, self.prec);
        match d.cmp_certified(&half) {
            Some(Ordering::Greater) => half,
            _ => d,
        }
    }

    pub fn exp(&self) -> Result<Self> {
        let prec = self.prec;
        let xf = self.to_f64();
        if !xf.is_finite() || xf.abs() > 2f64.powi(52) {
            return Err(Error::Resource {
                message: format!("exp argument {xf:e} out of range"),
                suggested_cap: None,
            });
        }
        let n = (xf / std::f64::consts::LN_2).round() as i64;
        let k = halving_count(prec as u64);
        let w = prec as u64 + GUARD_BITS + k + 64 - (n.unsigned_abs().leading_zeros() as u64);
        let x_fixed = shift_signed(&self.mant, self.exp + w as i64).0;
        let r = x_fixed - ln2_fixed(w) * BigInt::from(n);
        let e_r = exp_fixed(&r, w, k);
        let alg = BigUint::one() << (k + 16);
        let mut out = Self::normalize(e_r, n - w as i64, alg, prec);
        if self.rad > 0 {
            let dx = ldexp(self.rad as f64, self.exp);
            out = inflate_relative(&out, dx.exp_m1() * (1.0 + 1e-9));
        }
        Ok(out)
    }

    pub fn ln(&self) -> Result<Self> {
        let prec = self.prec;
        match self.sign() {
            Some(Ordering::Greater) => {}
            Some(_) => return Err(Error::domain("logarithm of a non-positive number")),
            None => {
                return Err(Error::exhausted(
                    "taking a logarithm of a ball that touches zero",
                    None,
                ))
            }
        }
        let j = halving_count(prec as u64) / 2;
        let w = prec as u64 + GUARD_BITS + 2 * j + 16;
        let bits = self.mant.bits() as i64;
        let t = bits + self.exp - 1;
        // y in [1, 2) at scale 2^w.
        let mut y = shift_signed(&self.mant, w as i64 - bits + 1).0;
        for _ in 0..j {
            y = (y << w).sqrt();
        }
        let one = BigInt::one() << w;
        let s = ((&y - &one) << w) / (&y + &one);
        let s2 = (&s * &s) >> w;
        let mut sum = s.clone();
        let mut term = s;
        let mut i = 1u64;
        loop {
            term = (&term * &s2) >> w;
            if term.is_zero() {
                break;
            }
            sum += &term / BigInt::from(2 * i + 1);
            i += 1;
        }
        let ln_y = sum << (j + 1);
        let value = ln_y + ln2_fixed(w) * BigInt::from(t);
        let alg = BigUint::one() << (j + 20);
        let mut out = Self::normalize(value, -(w as i64), alg, prec);
        if self.rad > 0 {
            let rel = self.rad as f64
                / (top_bits(self.mant.magnitude()).0 - self.rad as f64).max(1.0)
                * ldexp(1.0, -top_bits(self.mant.magnitude()).1);
            // ln(1 ± rel) is bounded by rel / (1 − rel).
            let abs_err = rel / (1.0 - rel).max(1e-300) * (1.0 + 1e-9);
            out = inflate_absolute(&out, abs_err);
        }
        Ok(out)
    }

    /// x^y for x > 0.
    pub fn powf(&self, y: &BigReal) -> Result<Self> {
        self.ln()?.mul(y).exp()
    }

    /// x^n for an integer n ≥ 0 by repeated squaring.
    pub fn powi(&self, n: u64) -> Self {
        let mut result = BigReal::from_int(1, self.prec);
        let mut base = self.clone();
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                result = result.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        result
    }
}

/// Widens a ball by `rel · |mid|` (in absolute terms).
fn inflate_relative(x: &BigReal, rel: f64) -> BigReal {
    if rel <= 0.0 {
        return x.clone();
    }
    let extra = (top_bits(x.mant.magnitude()).0 * rel).ceil();
    let shift = top_bits(x.mant.magnitude()).1;
    add_radius_units(x, extra, shift)
}

/// Widens a ball by an absolute amount `abs_err`.
fn inflate_absolute(x: &BigReal, abs_err: f64) -> BigReal {
    if abs_err <= 0.0 {
        return x.clone();
    }
    // abs_err / 2^exp ulps
    let ulps = ldexp(abs_err, -x.exp).ceil();
    add_radius_units(x, ulps, 0)
}

fn add_radius_units(x: &BigReal, units: f64, shift: i64) -> BigReal {
    if units == 0.0 {
        return x.clone();
    }
    if !units.is_finite() {
        // Error dwarfs the value; fall back to a huge radius.
        let r = BigUint::one() << (x.mant.bits() + 8);
        return BigReal::normalize(x.mant.clone(), x.exp, r, x.prec);
    }
    let extra = BigUint::from_f64(units).unwrap_or_default() + 1u32;
    let extra = if shift >= 0 {
        extra << (shift as u64)
    } else {
        ceil_shift_u(&extra, shift.unsigned_abs())
    };
    BigReal::normalize(x.mant.clone(), x.exp, BigUint::from(x.rad) + extra, x.prec)
}

fn dyadic_to_rational(m: BigInt, e: i64) -> BigRational {
    if e >= 0 {
        BigRational::from_integer(m << (e as u64))
    } else {
        BigRational::new(m, BigInt::one() << e.unsigned_abs())
    }
}

/// Exact rational value of a decimal literal such as `-3.25` or `7`.
pub fn parse_decimal_rational(text: &str) -> Option<BigRational> {
    let t = text.trim();
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    if body.is_empty() {
        return None;
    }
    let (int_part, frac_part) = match body.split_once('.') {
        Some((i, f)) => (i, f),
        None => (body, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().all(|c| c.is_ascii_digit())
        || !frac_part.chars().all(|c| c.is_ascii_digit())
    {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let n: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().ok()?
    };
    let den = num_traits::pow(BigInt::from(10u32), frac_part.len());
    let r = BigRational::new(if neg { -n } else { n }, den);
    Some(r)
}

/// Number of argument halvings used by the exp kernel at a given precision.
fn halving_count(prec: u64) -> u64 {
    (prec.sqrt() / 2).clamp(4, 48)
}

/// e^r at scale 2^w for |r| ≲ 0.35 · 2^w.
fn exp_fixed(r: &BigInt, w: u64, k: u64) -> BigInt {
    let rk = floor_shift(r, k);
    let one = BigInt::one() << w;
    let mut sum = one.clone();
    let mut term = one;
    let mut i = 1u64;
    loop {
        term = floor_shift(&(&term * &rk), w) / BigInt::from(i);
        if term.is_zero() {
            break;
        }
        sum += &term;
        i += 1;
    }
    for _ in 0..k {
        sum = (&sum * &sum) >> w;
    }
    sum
}

fn ln2_cache() -> &'static Mutex<Option<(u64, BigInt)>> {
    static CACHE: OnceLock<Mutex<Option<(u64, BigInt)>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(None))
}

/// ln 2 at scale 2^w via 2·atanh(1/3), truncated.
pub(crate) fn ln2_fixed(w: u64) -> BigInt {
    {
        let guard = ln2_cache().lock().expect("ln2 cache poisoned");
        if let Some((cw, v)) = guard.as_ref() {
            if *cw >= w {
                return v >> (cw - w);
            }
        }
    }
    let g = 32;
    let wg = w + g;
    let mut term = (BigInt::one() << wg) / BigInt::from(3u32);
    let mut sum = BigInt::zero();
    let mut i = 0u64;
    while !term.is_zero() {
        sum += &term / BigInt::from(2 * i + 1);
        term /= BigInt::from(9u32);
        i += 1;
    }
    let full = sum << 1u32;
    let mut guard = ln2_cache().lock().expect("ln2 cache poisoned");
    *guard = Some((wg, full.clone()));
    full >> g
}

/// atan(1/x) at scale 2^w.
fn atan_inv_fixed(x: u64, w: u64) -> BigInt {
    let x2 = BigInt::from(x * x);
    let mut term = (BigInt::one() << w) / BigInt::from(x);
    let mut sum = BigInt::zero();
    let mut i = 0u64;
    while !term.is_zero() {
        let t = &term / BigInt::from(2 * i + 1);
        if i.is_multiple_of(2) {
            sum += t;
        } else {
            sum -= t;
        }
        term /= &x2;
        i += 1;
    }
    sum
}

/// π via Machin's formula.
pub fn pi_const(prec: u32) -> BigReal {
    let w = prec as u64 + GUARD_BITS;
    let v = atan_inv_fixed(5, w) * BigInt::from(16) - atan_inv_fixed(239, w) * BigInt::from(4);
    BigReal::normalize(v, -(w as i64), BigUint::from(64u32), prec)
}

/// Euler–Mascheroni constant by the Brent–McMillan algorithm.
pub fn gamma_const(prec: u32) -> BigReal {
    let prec = prec.max(53);
    let w = prec as u64 + GUARD_BITS;
    // Truncation error is O(e^{-4n}).
    let n = ((w as f64 + 16.0) * std::f64::consts::LN_2 / 4.0).ceil() as u64 + 1;
    let ln_n = BigReal::from_int(n, w as u32)
        .with_prec(w as u32 + 32)
        .ln()
        .expect("n is positive");
    let ln_n_fixed = shift_signed(ln_n.mantissa(), ln_n.exponent() + w as i64).0;
    let n2 = BigInt::from(n * n);
    let mut a = -ln_n_fixed;
    let mut b = BigInt::one() << w;
    let mut u = a.clone();
    let mut v = b.clone();
    let mut k = 1u64;
    loop {
        let kk = BigInt::from(k);
        b = &b * &n2 / (&kk * &kk);
        a = (&a * &n2 / &kk + &b) / &kk;
        if b.is_zero() && a.is_zero() {
            break;
        }
        u += &a;
        v += &b;
        k += 1;
    }
    let g = (u << w) / v;
    BigReal::normalize(g, -(w as i64), BigUint::from(1u32) << 20u32, prec)
}

#[cfg(test)]
mod tests {
    use super::*;

    const PI_DIGITS: &str = "3.14159265358979323846264338327950288419716939937510";

    fn close(x: &BigReal, want: f64, tol: f64) -> bool {
        (x.to_f64() - want).abs() <= tol * want.abs().max(1.0)
    }

    #[test]
    fn exact_dyadic_sum_stays_exact() {
        let p = 64;
        let terms = [1i64, 2, 4, 16];
        let mut s = BigReal::zero(p);
        for e in terms {
            s = s.add(&BigReal::from_dyadic(BigInt::one(), -e, p));
        }
        assert!(s.is_exact());
        assert_eq!(s.to_f64(), 0.8125152587890625);
    }

    #[test]
    fn sqrt_two_contains_truth() {
        let r = BigReal::from_int(2, 200).sqrt().unwrap();
        let sq = r.mul(&r);
        let two = BigReal::from_int(2, 200);
        assert!(
            sq.cmp_certified(&two).is_none(),
            "ball of sqrt(2)^2 must contain 2"
        );
        assert!(close(&r, std::f64::consts::SQRT_2, 1e-16));
    }

    #[test]
    fn division_encloses_quotient() {
        let q = BigReal::from_ratio(&BigInt::from(22), &BigInt::from(7), 128).unwrap();
        let back = q.mul(&BigReal::from_int(7, 128));
        assert!(back.cmp_certified(&BigReal::from_int(22, 128)).is_none());
        assert_eq!(q.floor().unwrap(), BigInt::from(3));
    }

    #[test]
    fn floor_refuses_straddling_ball() {
        let x = BigReal::from_dyadic(BigInt::from(4), -2, 8); // exactly 1
        let fuzzy = x.add(&BigReal::error_ball(&BigReal::from_dyadic(
            BigInt::one(),
            -10,
            8,
        )));
        assert!(fuzzy.floor().is_err());
        assert_eq!(x.floor().unwrap(), BigInt::one());
    }

    #[test]
    fn pi_matches_published_digits() {
        let pi = pi_const(200);
        let lit = BigReal::from_decimal(PI_DIGITS, 200).unwrap();
        let diff = pi.sub(&lit).abs_upper().to_f64();
        assert!(diff < 1e-49, "diff {diff}");
    }

    #[test]
    fn ln_and_exp_roundtrip() {
        for &v in &[0.001, 0.5, 1.0, 2.0, 10.0, 12345.678] {
            let x = BigReal::from_f64(v, 256).unwrap();
            let y = x.ln().unwrap().exp().unwrap();
            assert!(
                y.cmp_certified(&x).is_none() || close(&y, v, 1e-70),
                "{v}: {y:?}"
            );
            assert!(close(&x.ln().unwrap(), v.ln(), 1e-15));
        }
    }

    #[test]
    fn exp_handles_huge_arguments() {
        // 1.5^65536 = exp(65536 ln 1.5)
        let x = BigReal::from_f64(1.5, 128)
            .unwrap()
            .ln()
            .unwrap()
            .mul_int(&BigInt::from(65536));
        let y = x.exp().unwrap();
        let want = 65536.0 * 1.5f64.log2();
        assert!((y.log2_abs() - want).abs() < 1e-9);
    }

    #[test]
    fn gamma_matches_published_digits() {
        let g = gamma_const(256);
        let lit =
            BigReal::from_decimal("0.57721566490153286060651209008240243104215933593992", 256)
                .unwrap();
        let diff = g.sub(&lit).abs_upper().to_f64();
        assert!(diff < 1e-49, "diff {diff:e}");
    }

    #[test]
    fn nearest_distance_folds() {
        let x = BigReal::from_ratio(&BigInt::from(7), &BigInt::from(4), 64).unwrap();
        assert_eq!(x.nearest_int_distance().to_f64(), 0.25);
        let half = BigReal::from_dyadic(BigInt::from(5), -1, 64);
        assert_eq!(half.nearest_int_distance().to_f64(), 0.5);
    }

    #[test]
    fn decimal_parser() {
        assert_eq!(
            parse_decimal_rational("-1.25").unwrap(),
            BigRational::new(BigInt::from(-5), BigInt::from(4))
        );
        assert!(parse_decimal_rational("1.2.3").is_none());
        assert!(parse_decimal_rational("abc").is_none());
    }
}
