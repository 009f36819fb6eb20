//! Geometric predicates re-derived from first principles.
//!
//! Nothing here calls into the engine's geometry: p-adic balls are decided by
//! divisibility, circle arcs by bracketing `d√5` between consecutive dyadic
//! rationals, intervals by endpoint comparison.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::geometry::{CellSize, Topology};
use crate::group::Element;

/// The topology of an instance, as the verifier sees it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Space {
    PAdic(u64),
    Circle,
    Line,
    Discrete,
}

impl Space {
    pub fn of(topology: Topology) -> Self {
        match topology {
            Topology::PAdic { p } => Space::PAdic(p),
            Topology::GoldenCircle => Space::Circle,
            Topology::Line => Space::Line,
            Topology::Discrete => Space::Discrete,
        }
    }

    /// Whether `size` is a size this space understands.
    pub fn accepts(self, size: &CellSize) -> bool {
        matches!(
            (self, size),
            (Space::PAdic(_), CellSize::Level(_))
                | (Space::Circle, CellSize::Level(_) | CellSize::Radius(_))
                | (Space::Line, CellSize::Radius(_))
                | (Space::Discrete, CellSize::Point)
        )
    }

    /// `g ∈ center·size`.
    pub fn contains(self, center: &Element, size: &CellSize, g: &Element) -> bool {
        match (self, size) {
            (Space::PAdic(p), CellSize::Level(k)) => divisible(&int_diff(g, center), p, *k),
            (Space::Circle, size) => !circle_norm_exceeds(&int_diff(g, center), &radius(size)),
            (Space::Line, CellSize::Radius(r)) => {
                let (lo, hi) = interval(center, r);
                let g = rat(g);
                lo <= *g && *g <= hi
            }
            (Space::Discrete, CellSize::Point) => g == center,
            _ => panic!("size {size} does not belong to {self:?}"),
        }
    }

    pub fn disjoint(self, a: (&Element, &CellSize), b: (&Element, &CellSize)) -> bool {
        match (self, a.1, b.1) {
            (Space::PAdic(p), CellSize::Level(ka), CellSize::Level(kb)) => {
                !divisible(&int_diff(a.0, b.0), p, (*ka).min(*kb))
            }
            (Space::Circle, sa, sb) => {
                circle_norm_exceeds(&int_diff(a.0, b.0), &(radius(sa) + radius(sb)))
            }
            (Space::Line, CellSize::Radius(ra), CellSize::Radius(rb)) => {
                let (alo, ahi) = interval(a.0, ra);
                let (blo, bhi) = interval(b.0, rb);
                ahi < blo || bhi < alo
            }
            (Space::Discrete, CellSize::Point, CellSize::Point) => a.0 != b.0,
            _ => panic!("sizes {} and {} do not belong to {self:?}", a.1, b.1),
        }
    }

    /// A size separating two distinct points.
    pub fn separating_size(self, a: &Element, b: &Element) -> CellSize {
        match self {
            Space::PAdic(p) => {
                let d = int_diff(a, b);
                let k = (1..).find(|k| !divisible(&d, p, *k)).expect("distinct points");
                CellSize::Level(k)
            }
            Space::Circle => {
                let d = int_diff(a, b);
                let k = (0..)
                    .find(|k| circle_norm_exceeds(&d, &dyadic(*k)))
                    .expect("distinct points");
                CellSize::Level(k)
            }
            Space::Line => CellSize::Radius((rat(a) - rat(b)).abs() / BigInt::from(3)),
            Space::Discrete => CellSize::Point,
        }
    }
}

fn int_diff(a: &Element, b: &Element) -> BigInt {
    let v = |e: &Element| BigInt::from(e.as_int().unwrap_or_else(|| panic!("{e} is not an integer")));
    v(a) - v(b)
}

fn rat(e: &Element) -> &BigRational {
    e.as_rat().unwrap_or_else(|| panic!("{e} is not rational"))
}

fn interval(center: &Element, r: &BigRational) -> (BigRational, BigRational) {
    let c = rat(center);
    (c - r, c + r)
}

/// `2^-k`
fn dyadic(k: u32) -> BigRational {
    BigRational::new(BigInt::one(), BigInt::one() << k)
}

fn radius(size: &CellSize) -> BigRational {
    match size {
        CellSize::Level(k) => dyadic(k + 1),
        CellSize::Radius(r) => r.clone(),
        CellSize::Point => panic!("a point has no radius"),
    }
}

/// `p^k` divides `d`.
fn divisible(d: &BigInt, p: u64, k: u32) -> bool {
    if d.is_zero() || k == 0 {
        return true;
    }
    // |d| < 2^bits <= 2^(k·floor(log2 p)) <= p^k
    let floor_log2 = 63 - p.leading_zeros() as u64;
    if d.bits() <= k as u64 * floor_log2 {
        return false;
    }
    let modulus = BigInt::from(p).pow(k);
    d.mod_floor(&modulus).is_zero()
}

/// `‖dφ‖ > s` for φ = (√5 − 1)/2, where ‖·‖ is the distance to ℤ.
///
/// `D√5` is bracketed by `[a, a + 1] / 2^m` with `a = ⌊√(5D²4^m)⌋`, which
/// traps `Dφ` in an interval of width `2^-(m+1)` inside one unit interval;
/// precision doubles until the interval decides the comparison. It always
/// does for `d ≠ 0` because `dφ` is irrational.
pub fn circle_norm_exceeds(d: &BigInt, s: &BigRational) -> bool {
    if d.is_zero() || *s >= BigRational::new(BigInt::one(), BigInt::from(2)) {
        return false;
    }
    let big_d = d.magnitude().clone();
    let (sn, sd) = (s.numer().clone(), s.denom().clone());
    let mut m: u32 = 64;
    loop {
        let a: BigUint = ((&big_d * &big_d * 5u32) << (2 * m)).sqrt();
        let q = BigInt::one() << (m + 1);
        let low = BigInt::from_biguint(Sign::Plus, a) - BigInt::from_biguint(Sign::Plus, &big_d << m);
        let f = low.div_floor(&q);
        let from_floor = &low - &f * &q;
        let to_ceil: BigInt = (&f + 1) * &q - &low;
        let lower: BigInt = from_floor.clone().min(&to_ceil - BigInt::one());
        let upper: BigInt = (from_floor + BigInt::one()).min(to_ceil);
        if lower * &sd > &sn * &q {
            return true;
        }
        if upper * &sd <= &sn * &q {
            return false;
        }
        m *= 2;
    }
}

/// Exact Haar measure of a precompact cell.
pub fn cell_measure(space: Space, size: &CellSize) -> Option<Term> {
    match (space, size) {
        (Space::PAdic(_), CellSize::Level(k)) | (Space::Circle, CellSize::Level(k)) => {
            Some(Term::Level(*k))
        }
        (Space::Circle, CellSize::Radius(r)) => {
            Some(Term::Rational((r * BigInt::from(2)).min(BigRational::one())))
        }
        _ => None,
    }
}

/// A measure `base^-k` or an explicit rational.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Term {
    Level(u32),
    Rational(BigRational),
}

pub fn base_of(space: Space) -> Option<u64> {
    match space {
        Space::PAdic(p) => Some(p),
        Space::Circle => Some(2),
        _ => None,
    }
}

/// Σ base^-k over `terms`, evaluated by Horner's rule over level counts.
pub fn horner_total(base: u64, terms: &[Term]) -> BigRational {
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    let mut extra = BigRational::zero();
    for t in terms {
        match t {
            Term::Level(k) => *counts.entry(*k).or_default() += 1,
            Term::Rational(r) => extra += r,
        }
    }
    let Some((&top, _)) = counts.iter().next_back() else {
        return extra;
    };
    let lowest = *counts.keys().next().expect("nonempty");
    let mut acc = BigUint::zero();
    for k in lowest..=top {
        acc = acc * base + counts.get(&k).copied().unwrap_or(0);
    }
    let denom = BigUint::from(base).pow(top);
    // acc = Σ count_k · base^(top − k)
    BigRational::new(BigInt::from(acc), BigInt::from(denom)) + extra
}

/// Strict test `base^-k < numer / (denom·2^i)`, sweeping `base^k` so that
/// consecutive calls with nearby `k` reuse the previous power.
pub struct PowerSweep {
    base: BigUint,
    k: u32,
    power: BigUint,
}

impl PowerSweep {
    pub fn new(base: u64) -> Self {
        PowerSweep {
            base: BigUint::from(base),
            k: 0,
            power: BigUint::one(),
        }
    }

    fn power(&mut self, k: u32) -> &BigUint {
        if k.abs_diff(self.k) > 64 && k < self.k / 2 {
            self.k = 0;
            self.power = BigUint::one();
        }
        while self.k < k {
            self.power *= &self.base;
            self.k += 1;
        }
        while self.k > k {
            self.power /= &self.base;
            self.k -= 1;
        }
        &self.power
    }

    pub fn below(&mut self, k: u32, numer: &BigUint, denom: &BigUint, i: u64) -> bool {
        let lhs = denom << i;
        let rhs = numer * self.power(k);
        lhs < rhs
    }
}

/// Floating-point position of `n`, for cross-checks only.
pub fn approx_position(n: i64) -> f64 {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    (n as f64 * phi).rem_euclid(1.0)
}
