//! The non-precompact construction.
//!
//! Block n is `{x_n, g_n·x_n}` for the n-th enumerated `g_n`; its
//! `V`-thickening must miss every earlier block's. Two `V`-translates `aV`,
//! `bV` meet iff `b⁻¹a ∈ VV⁻¹`, so a candidate `t` is admissible iff neither
//! `t` nor `g_n·t` lies in `p·VV⁻¹` for an earlier point `p`.

use std::collections::HashSet;

use crate::case1::Exclusion;
use crate::error::{ConfigError, EngineError};
use crate::geometry::Cell;
use crate::group::Element;
use crate::instances::{Case, EscapeWitness, Instance};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    pub g: Element,
    pub x: Element,
    pub gx: Element,
}

/// The record of one step.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockTrace {
    pub step: u64,
    pub block: Block,
}

#[derive(Clone, Debug)]
pub struct Case2State {
    instance: Instance,
    witness: EscapeWitness,
    thin: bool,
    blocks: Vec<Block>,
    points: Vec<Element>,
    point_set: HashSet<Element>,
    covered: HashSet<Element>,
    exclusion: Exclusion,
}

pub fn init_case2(instance: &Instance, thin: bool) -> Result<Case2State, EngineError> {
    let wrong = || ConfigError::WrongCase {
        instance: instance.name().to_string(),
        actual: instance.case().describe(),
        expected: Case::NonPrecompact.describe(),
    };
    if instance.case() != Case::NonPrecompact {
        return Err(wrong().into());
    }
    let witness = instance.witness().ok_or_else(wrong)?.clone();
    Ok(Case2State {
        instance: instance.clone(),
        witness,
        thin,
        blocks: Vec::new(),
        points: Vec::new(),
        point_set: HashSet::new(),
        covered: HashSet::new(),
        exclusion: Exclusion::default(),
    })
}

impl Case2State {
    pub fn instance(&self) -> &Instance {
        &self.instance
    }

    pub fn witness(&self) -> &EscapeWitness {
        &self.witness
    }

    pub fn thin(&self) -> bool {
        self.thin
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn step_count(&self) -> u64 {
        self.blocks.len() as u64
    }

    /// Distinct points of A in order of appearance.
    pub fn points(&self) -> &[Element] {
        &self.points
    }

    /// `AA⁻¹` as maintained by the engine.
    pub fn covered(&self) -> &HashSet<Element> {
        &self.covered
    }

    fn add_point(&mut self, p: Element) {
        if !self.point_set.insert(p.clone()) {
            return;
        }
        self.points.push(p.clone());
        for a in &self.points {
            self.covered.insert(self.instance.difference(&p, a));
            self.covered.insert(self.instance.difference(a, &p));
        }
    }

    /// Chooses block n for `g_n`, n = number of blocks so far.
    pub fn step(&mut self) -> BlockTrace {
        let n = self.step_count();
        let g = self.instance.element_at(n);
        if self.thin {
            self.exclusion.extend(&self.instance, n + 1, &self.points);
        }
        let ginv = self.instance.inverse(&g);
        let reach = self.witness.difference_size();
        // t ∉ p·VV⁻¹ and g·t ∉ p·VV⁻¹, i.e. t ∉ g⁻¹p·VV⁻¹
        let mut cells: Vec<Cell> = Vec::with_capacity(2 * self.points.len());
        for p in &self.points {
            cells.push(Cell::new(p.clone(), reach.clone()));
            cells.push(Cell::new(self.instance.compose(&ginv, p), reach.clone()));
        }
        let thin = self.thin;
        let exclusion = &self.exclusion;
        let instance = &self.instance;
        let x = instance.least_outside(&cells, |t| {
            thin && (exclusion.contains(t) || exclusion.contains(&instance.compose(&g, t)))
        });
        let gx = self.instance.compose(&g, &x);
        let block = Block {
            g,
            x: x.clone(),
            gx: gx.clone(),
        };
        self.add_point(x);
        self.add_point(gx);
        self.blocks.push(block.clone());
        BlockTrace { step: n, block }
    }
}

pub fn run_case2(
    instance: &Instance,
    steps: u64,
    thin: bool,
) -> Result<(Case2State, Vec<BlockTrace>), EngineError> {
    let mut state = init_case2(instance, thin)?;
    let traces = (0..steps).map(|_| state.step()).collect();
    Ok((state, traces))
}
