//! The precompact construction.
//!
//! State after step n: points `A_n = {x_i, y_i : i <= n}` with neighborhoods
//! `U_i`, and the z-list enumerating `A_nA_n⁻¹ \ A_n` with neighborhoods
//! `V_j`. Every placed cell goes into the forbidden region `B`; the next pair
//! `x = g·y` is the least-index solution outside `B`.

use std::collections::HashSet;

use crate::error::{ConfigError, EngineError, GeometryError, InvariantViolation};
use crate::exact::{ratio, MeasureSum};
use crate::geometry::{Cell, CellSize, MeasureBudget, Region, RegionIndex};
use crate::group::Element;
use crate::instances::{Case, Instance};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pair {
    pub x: Element,
    pub y: Element,
    pub u: CellSize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZEntry {
    pub z: Element,
    pub v: CellSize,
}

/// Everything one step decided, in trace order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StepTrace {
    pub step: u64,
    pub target_index: u64,
    pub target: Element,
    pub x: Element,
    pub y: Element,
    pub u: CellSize,
    pub z_new: Vec<ZEntry>,
    pub step_measure: String,
    pub cumulative: String,
}

/// Thin-mode exclusion set `{g_i^{±1}·a : i < gens, a in A}`, grown in place.
#[derive(Clone, Debug, Default)]
pub(crate) struct Exclusion {
    set: HashSet<Element>,
    gens: u64,
    points: usize,
}

impl Exclusion {
    pub(crate) fn contains(&self, g: &Element) -> bool {
        self.set.contains(g)
    }

    /// Brings the set up to generators `g_0 .. g_{gens-1}` and all of `points`.
    pub(crate) fn extend(&mut self, instance: &Instance, gens: u64, points: &[Element]) {
        let translate = |set: &mut HashSet<Element>, i: u64, a: &Element| {
            let g = instance.element_at(i);
            set.insert(instance.compose(&g, a));
            set.insert(instance.compose(&instance.inverse(&g), a));
        };
        for a in &points[self.points..] {
            for i in 0..self.gens {
                translate(&mut self.set, i, a);
            }
        }
        for i in self.gens..gens.max(self.gens) {
            for a in points {
                translate(&mut self.set, i, a);
            }
        }
        self.gens = gens.max(self.gens);
        self.points = points.len();
    }
}

#[derive(Clone, Debug)]
pub struct Case1State {
    instance: Instance,
    budget: MeasureBudget,
    thin: bool,
    step: u64,
    pairs: Vec<Pair>,
    zlist: Vec<ZEntry>,
    checkpoints: Vec<usize>,
    points: Vec<Element>,
    covered: HashSet<Element>,
    first_open: u64,
    first_free: u64,
    forbidden: Region,
    index: RegionIndex,
    measure: MeasureSum,
    exclusion: Exclusion,
}

/// `x₀ = y₀ = e` with the largest ladder neighborhood below `r₀`.
pub fn init_case1(
    instance: &Instance,
    budget: MeasureBudget,
    thin: bool,
) -> Result<Case1State, EngineError> {
    if instance.case() != Case::Precompact {
        return Err(ConfigError::WrongCase {
            instance: instance.name().to_string(),
            actual: instance.case().describe(),
            expected: Case::Precompact.describe(),
        }
        .into());
    }
    budget.certify()?;
    let topology = instance.topology();
    let base = topology
        .measure_base()
        .ok_or_else(|| GeometryError::NoHaarMeasure(instance.name().to_string()))?;
    let e = instance.identity();
    let u0 = topology.ladder(topology.min_measure_level(&budget.term(0))?);
    let cell = Cell::new(e.clone(), u0.clone());
    let mut measure = MeasureSum::new(base);
    measure.add(&topology.cell_measure(&u0)?);
    let mut index = RegionIndex::new(topology);
    index.insert(&cell);
    Ok(Case1State {
        instance: instance.clone(),
        budget,
        thin,
        step: 0,
        pairs: vec![Pair {
            x: e.clone(),
            y: e.clone(),
            u: u0,
        }],
        zlist: Vec::new(),
        checkpoints: vec![0],
        points: vec![e.clone()],
        covered: [e].into_iter().collect(),
        first_open: 0,
        first_free: 0,
        forbidden: Region::new(vec![cell]),
        index,
        measure,
        exclusion: Exclusion::default(),
    })
}

impl Case1State {
    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn budget(&self) -> &MeasureBudget {
        &self.budget
    }

    pub fn thin(&self) -> bool {
        self.thin
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn zlist(&self) -> &[ZEntry] {
        &self.zlist
    }

    /// Length of the z-list after each step, starting with step 0.
    pub fn checkpoints(&self) -> &[usize] {
        &self.checkpoints
    }

    /// The distinct points of `A_n` in order of appearance.
    pub fn points(&self) -> &[Element] {
        &self.points
    }

    /// `A_nA_n⁻¹` as maintained by the engine.
    pub fn covered(&self) -> &HashSet<Element> {
        &self.covered
    }

    /// Cells `x_iU_i`, `y_iU_i`, `z_jV_j`; the initial pair gives one cell.
    pub fn forbidden_region(&self) -> &Region {
        &self.forbidden
    }

    /// Exact measure of all placed cells, `num/den`.
    pub fn cumulative_measure(&self) -> String {
        self.measure.format()
    }

    pub fn measure_sum(&self) -> &MeasureSum {
        &self.measure
    }

    /// Number of leading enumeration indices inside `A_nA_n⁻¹`.
    pub fn covered_prefix(&self) -> u64 {
        self.first_open
    }

    fn advance_first_open(&mut self) {
        while self.covered.contains(&self.instance.element_at(self.first_open)) {
            self.first_open += 1;
        }
    }

    fn blocked(&self, g: &Element) -> bool {
        self.index.contains(g) || (self.thin && self.exclusion.contains(g))
    }

    fn place(&mut self, cell: Cell) -> Result<(), GeometryError> {
        self.measure.add(&self.instance.topology().cell_measure(&cell.size)?);
        self.index.insert(&cell);
        self.forbidden.push(cell);
        Ok(())
    }

    fn violation(&self, detail: String) -> InvariantViolation {
        InvariantViolation {
            stage: self.step + 1,
            detail,
        }
    }

    /// One inductive step: cover the least uncovered element.
    pub fn step(&mut self) -> Result<StepTrace, EngineError> {
        if !self.measure.lt_ratio(&ratio(1, 2)) {
            return Err(self
                .violation(format!("forbidden measure {} is not below 1/2", self.measure.format()))
                .into());
        }
        let n1 = self.step + 1;
        self.advance_first_open();
        let target_index = self.first_open;
        let g = self.instance.element_at(target_index);
        if self.thin {
            self.exclusion
                .extend(&self.instance, n1 + 1, &self.points);
        }
        while self.blocked(&self.instance.element_at(self.first_free)) {
            self.first_free += 1;
        }
        let (x, y) = self
            .instance
            .scan_pair(&g, self.first_free, |e| self.blocked(e));
        let u = self.instance.fit_shared_neighborhood(
            &x,
            &y,
            &self.forbidden,
            &self.budget.term(n1),
        )?;
        let mut step_measure = MeasureSum::new(
            self.instance.topology().measure_base().expect("precompact"),
        );
        let mu = self.instance.topology().cell_measure(&u)?;
        step_measure.add(&mu);
        step_measure.add(&mu);
        self.place(Cell::new(x.clone(), u.clone()))?;
        self.place(Cell::new(y.clone(), u.clone()))?;
        self.pairs.push(Pair {
            x: x.clone(),
            y: y.clone(),
            u: u.clone(),
        });

        // new differences; the fresh points themselves are not z's
        let mut fresh: Vec<Element> = Vec::new();
        for p in [x.clone(), y.clone()] {
            self.points.push(p.clone());
            for a in &self.points {
                for d in [self.instance.difference(&p, a), self.instance.difference(a, &p)] {
                    if self.covered.insert(d.clone()) {
                        fresh.push(d);
                    }
                }
            }
        }
        let new_points = [&x, &y];
        let mut znew: Vec<(num_bigint::BigUint, Element)> = fresh
            .into_iter()
            .filter(|d| !new_points.contains(&d))
            .map(|d| (self.instance.index_of(&d), d))
            .collect();
        znew.sort();

        let mut z_entries = Vec::with_capacity(znew.len());
        for (_, z) in znew {
            let j = self.zlist.len() as u64;
            let v = self
                .instance
                .fit_point_neighborhood(&z, &self.points, &self.budget.term(j))?;
            step_measure.add(&self.instance.topology().cell_measure(&v)?);
            self.place(Cell::new(z.clone(), v.clone()))?;
            let entry = ZEntry { z, v };
            self.zlist.push(entry.clone());
            z_entries.push(entry);
        }
        self.checkpoints.push(self.zlist.len());
        self.step = n1;
        if self.instance.difference(&x, &y) != g {
            return Err(self.violation(format!("x y^-1 != {g}")).into());
        }
        Ok(StepTrace {
            step: n1,
            target_index,
            target: g,
            x,
            y,
            u,
            z_new: z_entries,
            step_measure: step_measure.format(),
            cumulative: self.measure.format(),
        })
    }
}

/// `steps` successive steps from the initial state.
pub fn run_case1(
    instance: &Instance,
    budget: MeasureBudget,
    steps: u64,
    thin: bool,
) -> Result<(Case1State, Vec<StepTrace>), EngineError> {
    let mut state = init_case1(instance, budget, thin)?;
    let mut traces = Vec::with_capacity(steps as usize);
    for _ in 0..steps {
        traces.push(state.step()?);
    }
    Ok((state, traces))
}
