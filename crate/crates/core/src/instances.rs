//! Concrete countable groups with declared topologies.
//!
//! | name              | group | topology            | case           |
//! |-------------------|-------|---------------------|----------------|
//! | `z-in-zp`         | ℤ     | dense in ℤ_p        | precompact     |
//! | `golden-rotation` | ℤ     | n ↦ nφ on the circle| precompact     |
//! | `q-usual`         | ℚ     | order topology      | not precompact |
//! | `z-discrete`      | ℤ     | discrete            | not precompact |
//! | `f2-discrete`     | F₂    | discrete            | not precompact |

use std::collections::HashSet;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, GeometryError};
use crate::exact::{int_ratio, ratio, MeasureBound};
use crate::geometry::{Cell, CellSize, Region, Topology};
use crate::group::{Element, Family};

/// Which half of the construction an instance runs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Case {
    Precompact,
    NonPrecompact,
}

impl Case {
    pub fn number(self) -> u8 {
        match self {
            Case::Precompact => 1,
            Case::NonPrecompact => 2,
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            Case::Precompact => "precompact",
            Case::NonPrecompact => "non-precompact",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum InstanceKind {
    ZInZp,
    GoldenRotation,
    QUsual,
    ZDiscrete,
    F2Discrete,
}

impl InstanceKind {
    pub const ALL: [InstanceKind; 5] = [
        InstanceKind::ZInZp,
        InstanceKind::GoldenRotation,
        InstanceKind::QUsual,
        InstanceKind::ZDiscrete,
        InstanceKind::F2Discrete,
    ];

    pub fn name(self) -> &'static str {
        match self {
            InstanceKind::ZInZp => "z-in-zp",
            InstanceKind::GoldenRotation => "golden-rotation",
            InstanceKind::QUsual => "q-usual",
            InstanceKind::ZDiscrete => "z-discrete",
            InstanceKind::F2Discrete => "f2-discrete",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, ConfigError> {
        InstanceKind::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| ConfigError::UnknownInstance(name.to_string()))
    }
}

impl fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Instance selection as given on the command line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceConfig {
    pub name: String,
    pub p: Option<u64>,
}

impl InstanceConfig {
    pub fn new(name: &str, p: Option<u64>) -> Self {
        InstanceConfig {
            name: name.to_string(),
            p,
        }
    }
}

/// Neighborhoods `U ⊇ VV⁻¹` of a non-precompact instance; no finite union of
/// `U`-translates covers the group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EscapeWitness {
    pub u: CellSize,
    pub v: CellSize,
}

impl EscapeWitness {
    /// The size of `VV⁻¹`: two `V`-translates meet iff their centers differ
    /// by an element of this set.
    pub fn difference_size(&self) -> CellSize {
        match &self.v {
            CellSize::Radius(r) => CellSize::Radius(r * BigInt::from(2)),
            other => other.clone(),
        }
    }

    /// `VV⁻¹ ⊆ U`, checked on interval endpoints.
    pub fn certify(&self) -> bool {
        match (&self.difference_size(), &self.u) {
            (CellSize::Radius(vv), CellSize::Radius(u)) => vv <= u,
            (CellSize::Point, CellSize::Point) => true,
            _ => false,
        }
    }
}

/// Static description of an instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupDescriptor {
    pub name: &'static str,
    pub case: Case,
    pub enumeration: &'static str,
    pub completion: String,
}

/// A fully wired group: algebra, enumeration, topology and (for Case 2)
/// the escape witness. Immutable after construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    kind: InstanceKind,
    p: Option<u64>,
    family: Family,
    topology: Topology,
    witness: Option<EscapeWitness>,
}

pub const MAX_PRIME: u64 = 97;

fn is_prime(n: u64) -> bool {
    n >= 2 && (2..).take_while(|d| d * d <= n).all(|d| !n.is_multiple_of(d))
}

pub fn make_instance(config: &InstanceConfig) -> Result<Instance, ConfigError> {
    let kind = InstanceKind::from_name(&config.name)?;
    let (family, topology, witness) = match kind {
        InstanceKind::ZInZp => {
            let p = config
                .p
                .ok_or_else(|| ConfigError::MissingPrime(config.name.clone()))?;
            if !is_prime(p) {
                return Err(ConfigError::NotPrime(p));
            }
            if p > MAX_PRIME {
                return Err(ConfigError::PrimeOutOfRange(p));
            }
            (Family::Integers, Topology::PAdic { p }, None)
        }
        InstanceKind::GoldenRotation => (Family::Integers, Topology::GoldenCircle, None),
        InstanceKind::QUsual => (
            Family::Rationals,
            Topology::Line,
            Some(EscapeWitness {
                u: CellSize::Radius(int_ratio(1)),
                v: CellSize::Radius(ratio(1, 2)),
            }),
        ),
        InstanceKind::ZDiscrete => (
            Family::Integers,
            Topology::Discrete,
            Some(EscapeWitness {
                u: CellSize::Point,
                v: CellSize::Point,
            }),
        ),
        InstanceKind::F2Discrete => (
            Family::Free,
            Topology::Discrete,
            Some(EscapeWitness {
                u: CellSize::Point,
                v: CellSize::Point,
            }),
        ),
    };
    let p = match topology {
        Topology::PAdic { p } => Some(p),
        _ => None,
    };
    Ok(Instance {
        kind,
        p,
        family,
        topology,
        witness,
    })
}

impl Instance {
    pub fn kind(&self) -> InstanceKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn p(&self) -> Option<u64> {
        self.p
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn case(&self) -> Case {
        if self.topology.is_precompact() {
            Case::Precompact
        } else {
            Case::NonPrecompact
        }
    }

    pub fn descriptor(&self) -> GroupDescriptor {
        let completion = match self.topology {
            Topology::PAdic { p } => format!("Z_{p}, Haar measure of p^k Z_p is {p}^-k"),
            Topology::GoldenCircle => "R/Z with arc length".to_string(),
            Topology::Line => "none (not precompact)".to_string(),
            Topology::Discrete => "none (discrete, infinite)".to_string(),
        };
        GroupDescriptor {
            name: self.name(),
            case: self.case(),
            enumeration: self.family.enumeration_name(),
            completion,
        }
    }

    pub fn witness(&self) -> Option<&EscapeWitness> {
        self.witness.as_ref()
    }

    // --- group -------------------------------------------------------------

    pub fn identity(&self) -> Element {
        self.family.identity()
    }

    pub fn element_at(&self, i: u64) -> Element {
        self.family.element_at(i)
    }

    pub fn index_of(&self, x: &Element) -> BigUint {
        self.family.index_of(x)
    }

    pub fn compose(&self, a: &Element, b: &Element) -> Element {
        self.family.compose(a, b)
    }

    pub fn inverse(&self, a: &Element) -> Element {
        self.family.inverse(a)
    }

    pub fn difference(&self, a: &Element, b: &Element) -> Element {
        self.family.difference(a, b)
    }

    // --- geometry ----------------------------------------------------------

    pub fn contains(&self, cell: &Cell, g: &Element) -> bool {
        self.topology.contains(cell, g)
    }

    pub fn cells_disjoint(&self, a: &Cell, b: &Cell) -> bool {
        self.topology.cells_disjoint(a, b)
    }

    pub fn separation(&self, a: &Element, b: &Element) -> Result<CellSize, GeometryError> {
        self.topology.separation(a, b)
    }

    /// The pair `(x, y)` with `x = g·y`, both outside `forbidden` and
    /// `excluded`, and `index_of(y)` minimal.
    pub fn find_difference_pair(
        &self,
        g: &Element,
        forbidden: &Region,
        excluded: &HashSet<Element>,
    ) -> Result<(Element, Element), GeometryError> {
        if *g == self.identity() {
            return Err(GeometryError::IdentityTarget);
        }
        let blocked =
            |e: &Element| excluded.contains(e) || self.topology.region_contains(forbidden, e);
        Ok(self.scan_pair(g, 0, blocked))
    }

    /// Pair search with a caller-supplied blocking predicate, starting at
    /// enumeration index `start` (every earlier index must be blocked).
    pub fn scan_pair(
        &self,
        g: &Element,
        start: u64,
        blocked: impl Fn(&Element) -> bool,
    ) -> (Element, Element) {
        let mut i = start;
        loop {
            let y = self.element_at(i);
            if !blocked(&y) {
                let x = self.compose(g, &y);
                if !blocked(&x) {
                    return (x, y);
                }
            }
            i += 1;
        }
    }

    pub fn fit_shared_neighborhood(
        &self,
        x: &Element,
        y: &Element,
        forbidden: &Region,
        bound: &MeasureBound,
    ) -> Result<CellSize, GeometryError> {
        self.topology.fit_shared_neighborhood(x, y, forbidden, bound)
    }

    pub fn fit_point_neighborhood(
        &self,
        z: &Element,
        avoid: &[Element],
        bound: &MeasureBound,
    ) -> Result<CellSize, GeometryError> {
        self.topology.fit_point_neighborhood(z, avoid, bound)
    }

    // --- escape ------------------------------------------------------------

    /// Least-index element outside `F·U`.
    pub fn escape(&self, finite: &[Element]) -> Result<Element, GeometryError> {
        let witness = self
            .witness
            .as_ref()
            .ok_or_else(|| GeometryError::NoEscapeWitness(self.name().to_string()))?;
        let cells: Vec<Cell> = finite
            .iter()
            .map(|f| Cell::new(f.clone(), witness.u.clone()))
            .collect();
        Ok(self.least_outside(&cells, |_| false))
    }

    /// Least-index element outside every cell and not `excluded`.
    ///
    /// Discrete instances scan the enumeration. On ℚ the admissible set is a
    /// finite union of open intervals, and the least-index rational of an
    /// open interval is its Stern–Brocot simplest element, so no scan is
    /// needed (indices of admissible points can be astronomically large).
    pub fn least_outside(&self, cells: &[Cell], excluded: impl Fn(&Element) -> bool) -> Element {
        match self.topology {
            Topology::Line => least_rational_outside(cells, excluded),
            Topology::Discrete => {
                let taken: HashSet<&Element> = cells.iter().map(|c| &c.center).collect();
                (0..)
                    .map(|i| self.element_at(i))
                    .find(|g| !taken.contains(g) && !excluded(g))
                    .expect("enumeration is infinite")
            }
            _ => (0..)
                .map(|i| self.element_at(i))
                .find(|g| !cells.iter().any(|c| self.contains(c, g)) && !excluded(g))
                .expect("dense subgroup meets every open set"),
        }
    }
}

// ---------------------------------------------------------------------------
// Least-index rationals

/// Positive rational of minimal Stern–Brocot depth in the open interval
/// `(lo, hi)`, `0 <= lo < hi`, `hi = None` meaning +∞.
pub fn simplest_between(lo: &BigRational, hi: Option<&BigRational>) -> BigRational {
    let n = lo.floor();
    let next = &n + BigRational::one();
    if hi.is_none_or(|h| next < *h) {
        return next;
    }
    // (lo, hi) ⊆ [n, n + 1]; write x = n + 1/y
    let hi = hi.expect("bounded here");
    let inner_lo = (hi - &n).recip();
    let inner_hi = if *lo == n { None } else { Some((lo - &n).recip()) };
    n + simplest_between(&inner_lo, inner_hi.as_ref()).recip()
}

#[derive(Clone, Debug)]
struct OpenInterval {
    negative: bool,
    lo: BigRational,
    hi: Option<BigRational>,
    best: BigRational,
    index: BigUint,
}

impl OpenInterval {
    fn new(negative: bool, lo: BigRational, hi: Option<BigRational>) -> Self {
        let best = simplest_between(&lo, hi.as_ref());
        let signed = if negative { -best.clone() } else { best.clone() };
        let index = Family::Rationals.index_of(&Element::Rat(signed));
        OpenInterval {
            negative,
            lo,
            hi,
            best,
            index,
        }
    }

    fn element(&self) -> Element {
        Element::Rat(if self.negative { -self.best.clone() } else { self.best.clone() })
    }
}

fn least_rational_outside(cells: &[Cell], excluded: impl Fn(&Element) -> bool) -> Element {
    let mut closed: Vec<(BigRational, BigRational)> = cells
        .iter()
        .map(|c| {
            let r = match &c.size {
                CellSize::Radius(r) => r.clone(),
                s => panic!("size {s} on the rational line"),
            };
            let center = c.center.as_rat().expect("rational center");
            (center - &r, center + r)
        })
        .collect();
    closed.sort();
    let mut merged: Vec<(BigRational, BigRational)> = Vec::new();
    for (lo, hi) in closed {
        match merged.last_mut() {
            Some(last) if lo <= last.1 => {
                if hi > last.1 {
                    last.1 = hi;
                }
            }
            _ => merged.push((lo, hi)),
        }
    }
    let zero = Element::Rat(BigRational::zero());
    let zero_free = !merged.iter().any(|(lo, hi)| !lo.is_positive() && !hi.is_negative());
    if zero_free && !excluded(&zero) {
        return zero;
    }
    // complement as open intervals with None for ±∞
    let mut gaps: Vec<(Option<BigRational>, Option<BigRational>)> = Vec::new();
    let mut left: Option<BigRational> = None;
    for (lo, hi) in merged {
        gaps.push((left.take(), Some(lo)));
        left = Some(hi);
    }
    gaps.push((left, None));

    let mut work: Vec<OpenInterval> = Vec::new();
    let zero_q = BigRational::zero();
    for (a, b) in gaps {
        // positive part (max(a, 0), b)
        if b.as_ref().is_none_or(|b| b.is_positive()) {
            let lo = a.clone().map_or(zero_q.clone(), |a| a.max(zero_q.clone()));
            work.push(OpenInterval::new(false, lo, b.clone()));
        }
        // negative part, reflected: (max(-b, 0), -a)
        if a.as_ref().is_none_or(|a| a.is_negative()) {
            let lo = b.map_or(zero_q.clone(), |b| (-b).max(zero_q.clone()));
            work.push(OpenInterval::new(true, lo, a.map(|a| -a)));
        }
    }
    loop {
        let (pos, _) = work
            .iter()
            .enumerate()
            .min_by(|(_, x), (_, y)| x.index.cmp(&y.index))
            .expect("the complement of finitely many bounded intervals is nonempty");
        let candidate = work[pos].element();
        if !excluded(&candidate) {
            return candidate;
        }
        let iv = work.swap_remove(pos);
        work.push(OpenInterval::new(iv.negative, iv.lo.clone(), Some(iv.best.clone())));
        work.push(OpenInterval::new(iv.negative, iv.best, iv.hi));
    }
}
