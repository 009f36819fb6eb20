//! Cells and regions in the completion, seen only through G-points.
//!
//! A cell is a translate `c·U` of a basic closed neighborhood `U` of the
//! identity. The completion itself is never represented: membership,
//! disjointness and Haar measure of cells reduce to exact arithmetic on the
//! center and the size parameter.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashSet};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{ConfigError, GeometryError, ParseError};
use crate::exact::{
    floor_sqrt5_multiple, format_ratio, log2_upper, parse_ratio, ratio, valuation, Measure,
    MeasureBound, Quad,
};
use crate::group::{Element, Family};

/// Size parameter of a basic neighborhood.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CellSize {
    /// p-adic ball `p^k ℤ_p`, or on the circle the closed arc of radius
    /// `2^-(k+1)` (measure `2^-k`).
    Level(u32),
    /// Closed interval or arc of the given radius.
    Radius(BigRational),
    /// The singleton `{e}` of a discrete group.
    Point,
}

impl fmt::Display for CellSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellSize::Level(k) => write!(f, "level:{k}"),
            CellSize::Radius(r) => write!(f, "radius:{}", format_ratio(r)),
            CellSize::Point => f.write_str("point"),
        }
    }
}

impl std::str::FromStr for CellSize {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ParseError::Size(s.to_string());
        if s == "point" {
            return Ok(CellSize::Point);
        }
        if let Some(k) = s.strip_prefix("level:") {
            if k.starts_with('+') {
                return Err(bad());
            }
            return k.parse().map(CellSize::Level).map_err(|_| bad());
        }
        if let Some(r) = s.strip_prefix("radius:") {
            let r = parse_ratio(r).map_err(|_| bad())?;
            if !r.is_positive() || format!("radius:{}", format_ratio(&r)) != s {
                return Err(bad());
            }
            return Ok(CellSize::Radius(r));
        }
        Err(bad())
    }
}

/// A closed neighborhood translate `center · U`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cell {
    pub center: Element,
    pub size: CellSize,
}

impl Cell {
    pub fn new(center: Element, size: CellSize) -> Self {
        Cell { center, size }
    }
}

/// A finite union of cells.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Region {
    pub cells: Vec<Cell>,
}

impl Region {
    pub fn new(cells: Vec<Cell>) -> Self {
        Region { cells }
    }

    pub fn push(&mut self, cell: Cell) {
        self.cells.push(cell);
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }
}

/// The topology an instance puts on its group, with exact predicates.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Topology {
    /// ℤ inside the p-adic integers.
    PAdic { p: u64 },
    /// ℤ acting on the circle ℝ/ℤ by n ↦ nφ, φ = (√5 − 1)/2.
    GoldenCircle,
    /// ℚ with the order topology.
    Line,
    /// Every singleton is open.
    Discrete,
}

impl Topology {
    pub fn is_precompact(self) -> bool {
        matches!(self, Topology::PAdic { .. } | Topology::GoldenCircle)
    }

    /// Base `b` with every ladder measure of the form `b^-k`.
    pub fn measure_base(self) -> Option<u64> {
        match self {
            Topology::PAdic { p } => Some(p),
            Topology::GoldenCircle => Some(2),
            _ => None,
        }
    }

    /// Size number `k` of the canonical ladder, largest first.
    pub fn ladder(self, k: u32) -> CellSize {
        match self {
            Topology::PAdic { .. } | Topology::GoldenCircle => CellSize::Level(k),
            Topology::Line => CellSize::Radius(BigRational::new(
                BigInt::one(),
                BigInt::one() << (k + 1),
            )),
            Topology::Discrete => CellSize::Point,
        }
    }

    fn check_size(self, size: &CellSize) -> Result<(), GeometryError> {
        let ok = matches!(
            (self, size),
            (Topology::PAdic { .. }, CellSize::Level(_))
                | (Topology::GoldenCircle, CellSize::Level(_) | CellSize::Radius(_))
                | (Topology::Line, CellSize::Radius(_))
                | (Topology::Discrete, CellSize::Point)
        );
        if ok {
            Ok(())
        } else {
            Err(GeometryError::ForeignSize {
                size: size.to_string(),
                instance: format!("{self:?}"),
            })
        }
    }

    /// Exact Haar measure with μ(H) = 1.
    pub fn cell_measure(self, size: &CellSize) -> Result<Measure, GeometryError> {
        if !self.is_precompact() {
            return Err(GeometryError::NoHaarMeasure(format!("{self:?}")));
        }
        self.check_size(size)?;
        Ok(match (self, size) {
            (Topology::PAdic { p }, CellSize::Level(k)) => Measure::InversePower { base: p, exp: *k },
            (Topology::GoldenCircle, CellSize::Level(k)) => Measure::InversePower { base: 2, exp: *k },
            (Topology::GoldenCircle, CellSize::Radius(r)) => {
                let len = r * BigInt::from(2);
                Measure::Ratio(len.min(BigRational::one()))
            }
            _ => unreachable!(),
        })
    }

    pub fn contains(self, cell: &Cell, g: &Element) -> bool {
        match (self, &cell.size) {
            (Topology::PAdic { p }, CellSize::Level(k)) => {
                let d = int(g) as i128 - int(&cell.center) as i128;
                valuation(p, d).is_none_or(|v| v >= *k)
            }
            (Topology::GoldenCircle, size) => {
                let d = int(g).checked_sub(int(&cell.center)).expect("circle offset overflow");
                !circle_gap_exceeds(d, &[size])
            }
            (Topology::Line, CellSize::Radius(r)) => (rat(g) - rat(&cell.center)).abs() <= *r,
            (Topology::Discrete, CellSize::Point) => *g == cell.center,
            (t, s) => panic!("size {s} is not a {t:?} size"),
        }
    }

    /// Disjointness of the cells as subsets of the completion. Closed cells
    /// that share a boundary point are not disjoint.
    pub fn cells_disjoint(self, a: &Cell, b: &Cell) -> bool {
        match (self, &a.size, &b.size) {
            (Topology::PAdic { p }, CellSize::Level(ka), CellSize::Level(kb)) => {
                let d = int(&a.center) as i128 - int(&b.center) as i128;
                valuation(p, d).is_some_and(|v| v < (*ka).min(*kb))
            }
            (Topology::GoldenCircle, sa, sb) => {
                let d = int(&a.center).checked_sub(int(&b.center)).expect("circle offset overflow");
                circle_gap_exceeds(d, &[sa, sb])
            }
            (Topology::Line, CellSize::Radius(ra), CellSize::Radius(rb)) => {
                (rat(&a.center) - rat(&b.center)).abs() > ra + rb
            }
            (Topology::Discrete, CellSize::Point, CellSize::Point) => a.center != b.center,
            (t, sa, sb) => panic!("sizes {sa}, {sb} are not {t:?} sizes"),
        }
    }

    pub fn region_contains(self, region: &Region, g: &Element) -> bool {
        region.cells.iter().any(|c| self.contains(c, g))
    }

    /// Σ of cell measures (subadditive upper bound for the union).
    pub fn region_measure_bound(self, region: &Region) -> Result<BigRational, GeometryError> {
        let mut total = BigRational::zero();
        for c in &region.cells {
            total += self.cell_measure(&c.size)?.to_ratio();
        }
        Ok(total)
    }

    /// A size `s` with `cell(a, s)` and `cell(b, s)` disjoint.
    pub fn separation(self, a: &Element, b: &Element) -> Result<CellSize, GeometryError> {
        if a == b {
            return Err(GeometryError::EqualPoints);
        }
        Ok(match self {
            Topology::PAdic { p } => {
                let d = int(a) as i128 - int(b) as i128;
                CellSize::Level(valuation(p, d).expect("distinct points") + 1)
            }
            Topology::GoldenCircle => {
                let d = int(a) - int(b);
                let mut k = 0;
                while !circle_gap_exceeds(d, &[&CellSize::Level(k), &CellSize::Level(k)]) {
                    k += 1;
                }
                CellSize::Level(k)
            }
            Topology::Line => CellSize::Radius((rat(a) - rat(b)).abs() / BigInt::from(4)),
            Topology::Discrete => CellSize::Point,
        })
    }

    /// Largest ladder size whose cells around `x` and `y` avoid `forbidden`,
    /// avoid each other, and have measure below `bound`.
    pub fn fit_shared_neighborhood(
        self,
        x: &Element,
        y: &Element,
        forbidden: &Region,
        bound: &MeasureBound,
    ) -> Result<CellSize, GeometryError> {
        if x == y {
            return Err(GeometryError::EqualPoints);
        }
        for p in [x, y] {
            if self.region_contains(forbidden, p) {
                return Err(GeometryError::PointInAvoidSet(p.to_string()));
            }
        }
        let mut k = self.min_measure_level(bound)?;
        loop {
            let size = self.ladder(k);
            let cx = Cell::new(x.clone(), size.clone());
            let cy = Cell::new(y.clone(), size.clone());
            let clear = self.cells_disjoint(&cx, &cy)
                && forbidden
                    .cells
                    .iter()
                    .all(|f| self.cells_disjoint(&cx, f) && self.cells_disjoint(&cy, f));
            if clear {
                return Ok(size);
            }
            k += 1;
        }
    }

    /// Largest ladder size whose cell around `z` misses every point of
    /// `avoid` and has measure below `bound`.
    pub fn fit_point_neighborhood(
        self,
        z: &Element,
        avoid: &[Element],
        bound: &MeasureBound,
    ) -> Result<CellSize, GeometryError> {
        if avoid.contains(z) {
            return Err(GeometryError::PointInAvoidSet(z.to_string()));
        }
        let mut k = self.min_measure_level(bound)?;
        loop {
            let cell = Cell::new(z.clone(), self.ladder(k));
            if avoid.iter().all(|a| !self.contains(&cell, a)) {
                return Ok(cell.size);
            }
            k += 1;
        }
    }

    /// Smallest ladder index with measure strictly below `bound`.
    pub fn min_measure_level(self, bound: &MeasureBound) -> Result<u32, GeometryError> {
        let base = self
            .measure_base()
            .ok_or_else(|| GeometryError::NoHaarMeasure(format!("{self:?}")))?;
        Ok(bound.min_inverse_power_level(base))
    }
}

fn int(g: &Element) -> i64 {
    g.as_int().unwrap_or_else(|| panic!("{g:?} is not an integer element"))
}

fn rat(g: &Element) -> &BigRational {
    g.as_rat().unwrap_or_else(|| panic!("{g:?} is not a rational element"))
}

/// Upper bound `e` with `radius(size) <= 2^e`.
fn radius_log2_upper(size: &CellSize) -> i64 {
    match size {
        CellSize::Level(k) => -(*k as i64) - 1,
        CellSize::Radius(r) => log2_upper(r),
        CellSize::Point => panic!("points have no radius"),
    }
}

fn radius_exact(size: &CellSize) -> BigRational {
    match size {
        CellSize::Level(k) => BigRational::new(BigInt::one(), BigInt::one() << (*k + 1)),
        CellSize::Radius(r) => r.clone(),
        CellSize::Point => panic!("points have no radius"),
    }
}

/// Signed offset of `dφ` from its nearest integer, as `(P + Q√5) / 2`.
pub fn golden_offset(d: i64) -> (i128, i128) {
    // nearest integer R = floor(dφ + 1/2) = floor((floor(d√5) + 1 − d) / 2)
    let fl = floor_sqrt5_multiple(d);
    let r = (fl + 1 - d as i128).div_euclid(2);
    (-(d as i128) - 2 * r, d as i128)
}

/// Whether the circle distance ‖dφ‖ strictly exceeds the sum of the radii.
///
/// For d ≠ 0 the offset is `(P + Q√5)/2` with `|P² − 5Q²| ≥ 1`, which forces
/// ‖dφ‖ > 1/(10|d| + 2). Radii below that bound are decided without
/// touching big rationals; everything else goes through exact field signs.
pub fn circle_gap_exceeds(d: i64, radii: &[&CellSize]) -> bool {
    if d == 0 {
        return false;
    }
    let e_max = radii.iter().map(|s| radius_log2_upper(s)).max().unwrap_or(i64::MIN / 2);
    let spread = 64 - (radii.len().max(1) as u64 - 1).leading_zeros() as i64;
    let e = e_max + spread;
    let liouville = 10 * (d as i128).unsigned_abs() + 2;
    let liouville_bits = 128 - liouville.leading_zeros() as i64;
    if e <= -liouville_bits {
        return true;
    }
    let mut total = BigRational::zero();
    for s in radii {
        total += radius_exact(s);
    }
    let (p, q) = golden_offset(d);
    let twice_offset = Quad::new(
        BigRational::from_integer(BigInt::from(p)),
        BigRational::from_integer(BigInt::from(q)),
    )
    .abs();
    let gap = &twice_offset - &Quad::from_ratio(total * BigInt::from(2));
    gap.signum() == Ordering::Greater
}

/// Exact circle position frac(nφ).
pub fn golden_position(n: i64) -> Quad {
    let phi = Quad::golden();
    let scaled = &phi * &Quad::from_ratio(BigRational::from_integer(BigInt::from(n)));
    scaled.fract()
}

/// Indexed union of cells for the engines' repeated membership queries.
///
/// Cells too small to contain any other integer point within the supported
/// range are stored as bare centers; p-adic balls of moderate level are
/// stored as residue classes.
#[derive(Clone, Debug)]
pub struct RegionIndex {
    topology: Topology,
    residues: BTreeMap<u32, (i128, HashSet<i128>)>,
    coarse: Vec<Cell>,
    points: HashSet<Element>,
    len: usize,
}

/// Integer points handled by the index satisfy |n| < 2^60.
pub const INDEX_RANGE: i64 = 1 << 60;

impl RegionIndex {
    pub fn new(topology: Topology) -> Self {
        RegionIndex {
            topology,
            residues: BTreeMap::new(),
            coarse: Vec::new(),
            points: HashSet::new(),
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn insert(&mut self, cell: &Cell) {
        self.len += 1;
        match (self.topology, &cell.size) {
            (Topology::PAdic { p }, CellSize::Level(k)) => {
                let c = bounded(&cell.center) as i128;
                match (p as i128).checked_pow(*k).filter(|m| *m <= 1i128 << 62) {
                    Some(modulus) => {
                        self.residues
                            .entry(*k)
                            .or_insert_with(|| (modulus, HashSet::new()))
                            .1
                            .insert(c.rem_euclid(modulus));
                    }
                    // p^k > 2^62 > |difference of two indexed points|
                    None => {
                        self.points.insert(cell.center.clone());
                    }
                }
            }
            (Topology::GoldenCircle, CellSize::Level(k)) if *k >= 70 => {
                bounded(&cell.center);
                self.points.insert(cell.center.clone());
            }
            (Topology::Discrete, CellSize::Point) => {
                self.points.insert(cell.center.clone());
            }
            _ => self.coarse.push(cell.clone()),
        }
    }

    pub fn contains(&self, g: &Element) -> bool {
        if self.points.contains(g) {
            return true;
        }
        if !self.residues.is_empty() {
            let n = bounded(g) as i128;
            if self
                .residues
                .values()
                .any(|(m, set)| set.contains(&n.rem_euclid(*m)))
            {
                return true;
            }
        }
        self.coarse.iter().any(|c| self.topology.contains(c, g))
    }
}

fn bounded(g: &Element) -> i64 {
    let n = int(g);
    assert!(n.abs() < INDEX_RANGE, "point {n} outside the indexed range");
    n
}

// ---------------------------------------------------------------------------
// Budget

/// The rule producing the budget sequence r_i.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BudgetRule {
    /// r_i = first / 2^i
    Halving { first: BigRational },
    /// r_i = value for every i
    Constant { value: BigRational },
}

/// The sequence (r_i) with a closed-form certificate for Σ r_i < 1/6.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasureBudget {
    pub id: String,
    pub rule: BudgetRule,
}

impl Default for MeasureBudget {
    fn default() -> Self {
        MeasureBudget {
            id: "geom-1/16".to_string(),
            rule: BudgetRule::Halving { first: ratio(1, 16) },
        }
    }
}

impl MeasureBudget {
    /// `geom-<first>` (halving from `first`) or `const-<value>`.
    pub fn parse(id: &str) -> Result<Self, ConfigError> {
        let unknown = || ConfigError::UnknownBudget(id.to_string());
        let (kind, value) = id.split_once('-').ok_or_else(unknown)?;
        let value = parse_ratio(value).map_err(|_| unknown())?;
        if !value.is_positive() {
            return Err(unknown());
        }
        let rule = match kind {
            "geom" => BudgetRule::Halving { first: value },
            "const" => BudgetRule::Constant { value },
            _ => return Err(unknown()),
        };
        Ok(MeasureBudget {
            id: id.to_string(),
            rule,
        })
    }

    /// Exact Σ r_i, or `None` when the series diverges.
    pub fn sum(&self) -> Option<BigRational> {
        match &self.rule {
            BudgetRule::Halving { first } => Some(first * BigInt::from(2)),
            BudgetRule::Constant { .. } => None,
        }
    }

    /// Checks Σ r_i < 1/6 and returns the sum.
    pub fn certify(&self) -> Result<BigRational, ConfigError> {
        let reject = |reason: String| ConfigError::BudgetRejected {
            rule: self.id.clone(),
            reason,
        };
        let sum = self.sum().ok_or_else(|| reject("the series diverges".into()))?;
        if sum < ratio(1, 6) {
            Ok(sum)
        } else {
            Err(reject(format!("sum {} is not below 1/6", format_ratio(&sum))))
        }
    }

    pub fn term(&self, i: u64) -> MeasureBound {
        match &self.rule {
            BudgetRule::Halving { first } => MeasureBound::from_ratio(first)
                .expect("positive budget")
                .halved(u32::try_from(i).expect("budget index overflow")),
            BudgetRule::Constant { value } => MeasureBound::from_ratio(value).expect("positive budget"),
        }
    }
}

/// Identity element of a family, as the center of neighborhoods of `e`.
pub fn identity_cell(family: Family, size: CellSize) -> Cell {
    Cell::new(family.identity(), size)
}
