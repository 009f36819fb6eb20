//! Exact number layer shared by the engines and the verifier.
//!
//! Everything here is integer or rational arithmetic. The golden-rotation
//! instance needs comparisons in the real quadratic field Q(sqrt 5), which
//! [`Quad`] decides exactly by the usual conjugate trick.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::ParseError;

/// Formats a rational as `num/den` in lowest terms, sign on the numerator.
///
/// Integers are still written with an explicit denominator (`2/1`).
pub fn format_ratio(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses `num/den` or a bare integer. The result is reduced.
pub fn parse_ratio(s: &str) -> Result<BigRational, ParseError> {
    let bad = || ParseError::Number(s.to_string());
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    if n.is_empty() || d.is_empty() || d.starts_with('-') || d.starts_with('+') {
        return Err(bad());
    }
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(BigRational::new(n, d))
}

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int_ratio(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// p-adic valuation of an integer; `None` stands for +infinity (d = 0).
pub fn valuation(p: u64, d: i128) -> Option<u32> {
    if d == 0 {
        return None;
    }
    let p = p as i128;
    let mut d = d;
    let mut v = 0;
    while d % p == 0 {
        d /= p;
        v += 1;
    }
    Some(v)
}

/// floor(sqrt(n)) for u128.
pub fn isqrt_u128(n: u128) -> u128 {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as u128;
    // correct the float seed in both directions
    while x.checked_mul(x).is_none_or(|sq| sq > n) {
        x -= 1;
    }
    while (x + 1).checked_mul(x + 1).is_some_and(|sq| sq <= n) {
        x += 1;
    }
    x
}

/// `floor(d * sqrt(5))` for |d| < 2^61.
pub fn floor_sqrt5_multiple(d: i64) -> i128 {
    let m = (d as i128).unsigned_abs();
    let s = isqrt_u128(5 * m * m) as i128;
    if d >= 0 {
        s
    } else {
        // 5 d^2 is never a perfect square for d != 0
        -s - 1
    }
}

/// Number of bits of |x|.
pub fn bit_len(x: &BigInt) -> u64 {
    x.bits()
}

// ---------------------------------------------------------------------------
// Quadratic field Q(sqrt 5)

/// An element `rational + surd * sqrt(5)` of Q(sqrt 5).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Quad {
    pub rational: BigRational,
    pub surd: BigRational,
}

impl Quad {
    pub fn new(rational: BigRational, surd: BigRational) -> Self {
        Quad { rational, surd }
    }

    pub fn from_ratio(r: BigRational) -> Self {
        Quad::new(r, BigRational::zero())
    }

    pub fn zero() -> Self {
        Quad::from_ratio(BigRational::zero())
    }

    /// The golden rotation angle (sqrt 5 - 1)/2.
    pub fn golden() -> Self {
        Quad::new(ratio(-1, 2), ratio(1, 2))
    }

    /// Exact sign. Zero only for the zero element, since sqrt 5 is irrational.
    pub fn signum(&self) -> Ordering {
        let a = self.rational.cmp(&BigRational::zero());
        let b = self.surd.cmp(&BigRational::zero());
        match (a, b) {
            (x, Ordering::Equal) => x,
            (Ordering::Equal, y) => y,
            (x, y) if x == y => x,
            (x, y) => {
                let a2 = &self.rational * &self.rational;
                let b2 = &self.surd * &self.surd * int_ratio(5);
                if a2 > b2 {
                    x
                } else {
                    y
                }
            }
        }
    }

    pub fn floor(&self) -> BigInt {
        // floor(a + b sqrt5) with a = p/q: bracket b sqrt5 by integer sqrt of
        // 5 b^2 scaled to a common denominator, then settle with exact signs.
        let den = self.rational.denom() * self.surd.denom();
        let a_scaled = self.rational.numer() * self.surd.denom();
        let b_scaled = self.surd.numer() * self.rational.denom();
        // value = (a_scaled + b_scaled sqrt5) / den
        let s = (&b_scaled * &b_scaled * BigInt::from(5)).sqrt();
        let approx = if b_scaled.is_negative() { -s - BigInt::one() } else { s };
        let mut guess = (a_scaled + approx).div_floor(&den);
        loop {
            let g = Quad::from_ratio(BigRational::from_integer(guess.clone()));
            let diff = self - &g;
            match diff.signum() {
                Ordering::Less => guess -= 1,
                _ => {
                    let next = &diff - &Quad::from_ratio(BigRational::one());
                    if next.signum() == Ordering::Less {
                        return guess;
                    }
                    guess += 1;
                }
            }
        }
    }

    /// Fractional part in [0, 1).
    pub fn fract(&self) -> Quad {
        let f = self.floor();
        self - &Quad::from_ratio(BigRational::from_integer(f))
    }

    pub fn abs(&self) -> Quad {
        if self.signum() == Ordering::Less {
            -self.clone()
        } else {
            self.clone()
        }
    }

    /// Fixed-point decimal approximation with `digits` fractional digits,
    /// used only by cross-checks.
    pub fn approx_scaled(&self, digits: u32) -> BigInt {
        let scale = BigInt::from(10u32).pow(digits);
        let guard = BigInt::from(10u32).pow(digits + 10);
        let sqrt5 = (BigInt::from(5) * &guard * &guard).sqrt();
        let num = self.rational.numer() * &guard * self.surd.denom()
            + self.surd.numer() * &sqrt5 * self.rational.denom();
        let den = self.rational.denom() * self.surd.denom() * &guard;
        (num * scale).div_floor(&den)
    }
}

impl fmt::Display for Quad {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} + {}*sqrt5",
            format_ratio(&self.rational),
            format_ratio(&self.surd)
        )
    }
}

impl<'a> Add<&'a Quad> for &'a Quad {
    type Output = Quad;
    fn add(self, o: &Quad) -> Quad {
        Quad::new(&self.rational + &o.rational, &self.surd + &o.surd)
    }
}

impl<'a> Sub<&'a Quad> for &'a Quad {
    type Output = Quad;
    fn sub(self, o: &Quad) -> Quad {
        Quad::new(&self.rational - &o.rational, &self.surd - &o.surd)
    }
}

impl<'a> Mul<&'a Quad> for &'a Quad {
    type Output = Quad;
    fn mul(self, o: &Quad) -> Quad {
        let five = int_ratio(5);
        Quad::new(
            &self.rational * &o.rational + &self.surd * &o.surd * five,
            &self.rational * &o.surd + &self.surd * &o.rational,
        )
    }
}

impl Neg for Quad {
    type Output = Quad;
    fn neg(self) -> Quad {
        Quad::new(-self.rational, -self.surd)
    }
}

// ---------------------------------------------------------------------------
// Powers with a small per-thread cache.

struct PowCursor {
    base: u64,
    exp: u32,
    value: BigUint,
}

thread_local! {
    static POW_CACHE: RefCell<Vec<PowCursor>> = const { RefCell::new(Vec::new()) };
}

const POW_CURSORS: usize = 6;
const POW_STEP_LIMIT: u32 = 48;

/// `base^exp` as a big integer.
///
/// Requests from the engines come in runs of nearby exponents, so a few
/// cursors are kept per thread and walked one factor at a time.
pub fn pow_big(base: u64, exp: u32) -> BigUint {
    POW_CACHE.with(|cache| {
        let mut cache = cache.borrow_mut();
        let nearest = cache
            .iter()
            .enumerate()
            .filter(|(_, c)| c.base == base)
            .min_by_key(|(_, c)| c.exp.abs_diff(exp))
            .map(|(i, c)| (i, c.exp.abs_diff(exp)));
        let slot = match nearest {
            Some((i, dist)) if dist <= POW_STEP_LIMIT => i,
            _ => {
                let cursor = PowCursor {
                    base,
                    exp,
                    value: BigUint::from(base).pow(exp),
                };
                if cache.len() >= POW_CURSORS {
                    cache.remove(0);
                }
                cache.push(cursor);
                cache.len() - 1
            }
        };
        let c = &mut cache[slot];
        while c.exp < exp {
            c.value *= base;
            c.exp += 1;
        }
        while c.exp > exp {
            c.value /= base;
            c.exp -= 1;
        }
        c.value.clone()
    })
}

// ---------------------------------------------------------------------------
// Measures and bounds

/// An exact Haar measure value.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Measure {
    /// `base^-exp`
    InversePower { base: u64, exp: u32 },
    Ratio(BigRational),
}

impl Measure {
    pub fn to_ratio(&self) -> BigRational {
        match self {
            Measure::InversePower { base, exp } => BigRational::new(
                BigInt::one(),
                BigInt::from_biguint(Sign::Plus, pow_big(*base, *exp)),
            ),
            Measure::Ratio(r) => r.clone(),
        }
    }

    /// Strict comparison `self < bound`.
    pub fn lt(&self, bound: &MeasureBound) -> bool {
        match self {
            Measure::InversePower { base, exp } => bound.exceeds_inverse_power(*base, *exp),
            Measure::Ratio(r) => {
                // r * den * 2^h < num
                let lhs = BigInt::from_biguint(Sign::Plus, bound.denom.clone() << bound.halvings)
                    * r.numer();
                let rhs = BigInt::from_biguint(Sign::Plus, bound.numer.clone()) * r.denom();
                lhs < rhs
            }
        }
    }
}

impl fmt::Display for Measure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_ratio(&self.to_ratio()))
    }
}

/// A positive bound `numer / (denom * 2^halvings)`.
///
/// Budget terms r_i = r_0 / 2^i are carried in this form so that very deep
/// terms never materialize a huge rational.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasureBound {
    pub numer: BigUint,
    pub denom: BigUint,
    pub halvings: u32,
}

impl MeasureBound {
    pub fn from_ratio(r: &BigRational) -> Option<Self> {
        if !r.is_positive() {
            return None;
        }
        Some(MeasureBound {
            numer: r.numer().magnitude().clone(),
            denom: r.denom().magnitude().clone(),
            halvings: 0,
        })
    }

    pub fn halved(&self, times: u32) -> Self {
        MeasureBound {
            halvings: self.halvings + times,
            ..self.clone()
        }
    }

    pub fn to_ratio(&self) -> BigRational {
        BigRational::new(
            BigInt::from_biguint(Sign::Plus, self.numer.clone()),
            BigInt::from_biguint(Sign::Plus, self.denom.clone() << self.halvings),
        )
    }

    /// `base^-exp < self`, i.e. `denom * 2^h < numer * base^exp`.
    pub fn exceeds_inverse_power(&self, base: u64, exp: u32) -> bool {
        if base == 2 {
            let shift = exp.min(self.halvings);
            let lhs = &self.denom << (self.halvings - shift);
            let rhs = &self.numer << (exp - shift);
            return lhs < rhs;
        }
        // cheap bit-length screen before the exact product
        let lhs_bits = self.denom.bits() + self.halvings as u64;
        let base_bits = 64 - base.leading_zeros() as u64;
        let rhs_lo = self.numer.bits() - 1 + (base_bits - 1) * exp as u64;
        if lhs_bits < rhs_lo + 1 {
            return true;
        }
        let lhs = &self.denom << self.halvings;
        let rhs = &self.numer * pow_big(base, exp);
        lhs < rhs
    }

    /// Smallest `k` with `base^-k < self`.
    pub fn min_inverse_power_level(&self, base: u64) -> u32 {
        // The float estimate only picks the starting point of the exact walk.
        let target = self.halvings as f64 + approx_log2(&self.denom) - approx_log2(&self.numer);
        let est = (target / (base as f64).log2()).floor() - 2.0;
        let mut k = if est > 0.0 { est as u32 } else { 0 };
        while k > 0 && self.exceeds_inverse_power(base, k - 1) {
            k -= 1;
        }
        while !self.exceeds_inverse_power(base, k) {
            k += 1;
        }
        k
    }
}

fn approx_log2(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        return x.to_u64().map_or(0.0, |v| (v as f64).log2());
    }
    let top = (x >> (bits - 64)).to_u64().unwrap_or(u64::MAX);
    (top as f64).log2() + (bits - 64) as f64
}

impl fmt::Display for MeasureBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.halvings <= 256 {
            f.write_str(&format_ratio(&self.to_ratio()))
        } else {
            write!(f, "{}/({}*2^{})", self.numer, self.denom, self.halvings)
        }
    }
}

/// Exact running sum of measures.
///
/// Terms of the form `base^-k` for one fixed base are accumulated as
/// `numer / base^exp`; anything else goes to a rational side sum.
#[derive(Clone, Debug)]
pub struct MeasureSum {
    base: u64,
    exp: u32,
    numer: BigUint,
    other: BigRational,
}

impl MeasureSum {
    pub fn new(base: u64) -> Self {
        MeasureSum {
            base,
            exp: 0,
            numer: BigUint::zero(),
            other: BigRational::zero(),
        }
    }

    pub fn add(&mut self, m: &Measure) {
        match m {
            Measure::InversePower { base, exp } if *base == self.base => {
                let k = *exp;
                if k <= self.exp {
                    self.numer += pow_big(self.base, self.exp - k);
                } else {
                    self.numer *= pow_big(self.base, k - self.exp);
                    self.numer += 1u32;
                    self.exp = k;
                }
            }
            other => self.other += other.to_ratio(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.numer.is_zero() && self.other.is_zero()
    }

    /// The sum in lowest terms.
    pub fn to_ratio(&self) -> BigRational {
        let (n, d) = self.reduced_power_part();
        let power = BigRational::new(
            BigInt::from_biguint(Sign::Plus, n),
            BigInt::from_biguint(Sign::Plus, d),
        );
        if self.other.is_zero() {
            power
        } else {
            power + &self.other
        }
    }

    /// `num/den` in lowest terms without a big gcd when only powers are present.
    pub fn format(&self) -> String {
        if self.other.is_zero() {
            let (n, d) = self.reduced_power_part();
            format!("{n}/{d}")
        } else {
            format_ratio(&self.to_ratio())
        }
    }

    fn reduced_power_part(&self) -> (BigUint, BigUint) {
        if self.numer.is_zero() {
            return (BigUint::zero(), BigUint::one());
        }
        let mut n = self.numer.clone();
        let mut e = self.exp;
        let b = BigUint::from(self.base);
        while e > 0 {
            let (q, r) = n.div_rem(&b);
            if !r.is_zero() {
                break;
            }
            n = q;
            e -= 1;
        }
        (n, pow_big(self.base, e))
    }

    /// Strict comparison against a rational.
    pub fn lt_ratio(&self, r: &BigRational) -> bool {
        if self.other.is_zero() {
            // numer / base^exp < r
            let lhs = BigInt::from_biguint(Sign::Plus, self.numer.clone()) * r.denom();
            let rhs = r.numer() * BigInt::from_biguint(Sign::Plus, pow_big(self.base, self.exp));
            lhs < rhs
        } else {
            &self.to_ratio() < r
        }
    }
}

/// Upper bound `e` with `r <= 2^e` for a positive rational.
pub fn log2_upper(r: &BigRational) -> i64 {
    r.numer().bits() as i64 - r.denom().bits() as i64 + 1
}

pub fn to_i64(x: &BigInt) -> Option<i64> {
    x.to_i64()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_round_trip() {
        let r = parse_ratio("-6/4").unwrap();
        assert_eq!(format_ratio(&r), "-3/2");
        assert_eq!(format_ratio(&parse_ratio("7").unwrap()), "7/1");
        assert!(parse_ratio("1/0").is_err());
        assert!(parse_ratio("1/-2").is_err());
        assert!(parse_ratio("x").is_err());
    }

    #[test]
    fn valuations() {
        assert_eq!(valuation(2, 0), None);
        assert_eq!(valuation(2, 2), Some(1));
        assert_eq!(valuation(3, -54), Some(3));
        assert_eq!(valuation(5, 7), Some(0));
    }

    #[test]
    fn floor_of_multiples_of_sqrt5() {
        for d in -2000i64..2000 {
            let expect = (d as f64 * 5f64.sqrt()).floor() as i128;
            assert_eq!(floor_sqrt5_multiple(d), expect, "d = {d}");
        }
    }

    #[test]
    fn quad_sign_and_floor() {
        let phi = Quad::golden();
        assert_eq!(phi.signum(), Ordering::Greater);
        assert_eq!(phi.floor(), BigInt::zero());
        let two_phi = &phi + &phi;
        assert_eq!(two_phi.floor(), BigInt::one());
        // phi^2 + phi - 1 = 0
        let check = &(&(&phi * &phi) + &phi) - &Quad::from_ratio(int_ratio(1));
        assert_eq!(check.signum(), Ordering::Equal);
        let neg = -Quad::golden();
        assert_eq!(neg.floor(), BigInt::from(-1));
    }

    #[test]
    fn bound_level_search() {
        let b = MeasureBound::from_ratio(&ratio(1, 16)).unwrap();
        assert_eq!(b.min_inverse_power_level(2), 5);
        assert_eq!(b.min_inverse_power_level(3), 3);
        assert_eq!(b.halved(1).min_inverse_power_level(2), 6);
        let deep = b.halved(5000);
        let k = deep.min_inverse_power_level(3);
        assert!(deep.exceeds_inverse_power(3, k));
        assert!(!deep.exceeds_inverse_power(3, k - 1));
    }

    #[test]
    fn measure_sum_reduces() {
        let mut s = MeasureSum::new(2);
        s.add(&Measure::InversePower { base: 2, exp: 5 });
        s.add(&Measure::InversePower { base: 2, exp: 5 });
        assert_eq!(s.format(), "1/16");
        s.add(&Measure::InversePower { base: 2, exp: 7 });
        assert_eq!(s.format(), "9/128");
        assert_eq!(s.to_ratio(), ratio(9, 128));
        s.add(&Measure::Ratio(ratio(1, 3)));
        assert_eq!(s.to_ratio(), ratio(9, 128) + ratio(1, 3));
        assert!(s.lt_ratio(&ratio(1, 2)));
    }

    #[test]
    fn pow_cache_matches_direct() {
        for &(b, e) in &[(3u64, 10u32), (3, 400), (3, 380), (5, 17), (3, 900), (97, 3)] {
            assert_eq!(pow_big(b, e), BigUint::from(b).pow(e));
        }
    }
}
