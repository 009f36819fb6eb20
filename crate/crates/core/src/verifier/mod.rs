//! Independent re-checking of run traces.
//!
//! A trace is first replayed (the engine is rerun from the header and every
//! line must match byte for byte), then each invariant is re-derived from the
//! trace contents alone using the predicates in [`predicates`].

pub mod mutations;
pub mod predicates;

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use num_bigint::BigUint;
use num_rational::BigRational;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::exact::{format_ratio, parse_ratio, ratio};
use crate::geometry::{BudgetRule, CellSize, MeasureBudget};
use crate::group::{Element, Family};
use crate::instances::{Case, Instance};
use crate::run::{execute, RunConfig};
use crate::trace::{config_digest, first_stage, parse_trace, CellRecord, Header, Records, Trace};
use predicates::{base_of, cell_measure, horner_total, PowerSweep, Space, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// One invariant check with its exact inputs and outcome.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub check: String,
    pub stage: Option<u64>,
    pub digest: String,
    pub values: BTreeMap<String, String>,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

impl fmt::Display for Certificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "PASS" } else { "FAIL" };
        write!(f, "{verdict:4}  {:<10}", self.check)?;
        if let Some(s) = self.stage {
            write!(f, "  stage {s}")?;
        }
        if let Some(w) = &self.witness {
            write!(f, "  {w}")?;
        }
        Ok(())
    }
}

/// Checks selectable on the command line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Check {
    Cover,
    Disjoint,
    ZSep,
    Budget,
    Thin,
    Separation,
}

impl Check {
    pub const ALL: [Check; 6] = [
        Check::Cover,
        Check::Disjoint,
        Check::ZSep,
        Check::Budget,
        Check::Thin,
        Check::Separation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::Cover => "cover",
            Check::Disjoint => "disjoint",
            Check::ZSep => "z-sep",
            Check::Budget => "budget",
            Check::Thin => "thin",
            Check::Separation => "separation",
        }
    }

    pub fn parse(name: &str) -> Option<Check> {
        Check::ALL.into_iter().find(|c| c.name() == name)
    }

    fn applies_to(self, case: Case) -> bool {
        match self {
            Check::ZSep | Check::Budget => case == Case::Precompact,
            _ => true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct VerifyOptions {
    /// Checks to run; `None` selects the defaults for the trace's case.
    pub checks: Option<Vec<Check>>,
    /// Number of elements `g ≠ e` in the thinness test.
    pub thin_k: u64,
    pub replay: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            checks: None,
            thin_k: 30,
            replay: true,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Report {
    pub certificates: Vec<Certificate>,
    /// The input could not be read as a trace.
    pub malformed: bool,
}

impl Report {
    pub fn passed(&self) -> bool {
        !self.malformed && self.certificates.iter().all(Certificate::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Certificate> {
        self.certificates.iter().filter(|c| !c.passed())
    }

    /// 0 when everything passed, 2 for unreadable input, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.malformed {
            2
        } else if self.passed() {
            0
        } else {
            1
        }
    }
}

/// Builds certificates sharing one trace digest.
struct Certifier {
    trace_digest: String,
    out: Vec<Certificate>,
}

type Values = Vec<(&'static str, String)>;

impl Certifier {
    fn issue(&mut self, check: &str, stage: Option<u64>, values: Values, witness: Option<String>) -> bool {
        let mut h = Sha256::new();
        h.update(check.as_bytes());
        h.update(format!(":{stage:?}:").as_bytes());
        h.update(self.trace_digest.as_bytes());
        let pass = witness.is_none();
        self.out.push(Certificate {
            check: check.to_string(),
            stage,
            digest: hex::encode(h.finalize()),
            values: values.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            witness,
        });
        pass
    }

    fn pass(&mut self, check: &str, stage: Option<u64>, values: Values) -> bool {
        self.issue(check, stage, values, None)
    }

    fn fail(&mut self, check: &str, stage: u64, witness: String) -> bool {
        self.issue(check, Some(stage), Vec::new(), Some(witness))
    }

    fn record(&mut self, check: &str, result: Result<(Option<u64>, Values), (u64, String)>) {
        match result {
            Ok((stage, values)) => {
                self.pass(check, stage, values);
            }
            Err((stage, witness)) => {
                self.fail(check, stage, witness);
            }
        }
    }
}

/// Failure of a check: the stage and a concrete witness.
type Outcome = Result<(Option<u64>, Values), (u64, String)>;

pub fn verify_text(text: &str, options: &VerifyOptions) -> Report {
    let mut cert = Certifier {
        trace_digest: hex::encode(Sha256::digest(text.as_bytes())),
        out: Vec::new(),
    };
    let trace = match parse_trace(text) {
        Ok(t) => t,
        Err(e) => {
            cert.fail("parse", e.stage, format!("line {}: {}", e.line, e.message));
            return Report {
                certificates: cert.out,
                malformed: true,
            };
        }
    };
    let Some(ctx) = check_header(&trace, &mut cert) else {
        return Report {
            certificates: cert.out,
            malformed: true,
        };
    };
    let decoded = match decode(&trace, &ctx) {
        Ok(d) => d,
        Err((stage, msg)) => {
            cert.fail("parse", stage, msg);
            return Report {
                certificates: cert.out,
                malformed: true,
            };
        }
    };
    check_records(&trace, &mut cert);
    if options.replay {
        check_replay(text, &ctx, &mut cert);
    }
    let checks: Vec<Check> = match &options.checks {
        Some(list) => list.clone(),
        None => Check::ALL
            .into_iter()
            .filter(|c| *c != Check::Thin || trace.header.thin)
            .filter(|c| *c != Check::Separation || ctx.instance.case() == Case::NonPrecompact)
            .collect(),
    };
    for check in checks {
        if !check.applies_to(ctx.instance.case()) {
            continue;
        }
        let result = match (&decoded, check) {
            (Decoded::Case1(d), Check::Cover) => cover1(&ctx, d),
            (Decoded::Case1(d), Check::Disjoint) => disjoint1(&ctx, d),
            (Decoded::Case1(d), Check::ZSep) => zsep(&ctx, d),
            (Decoded::Case1(d), Check::Budget) => budget(&ctx, d),
            (Decoded::Case1(d), Check::Thin) => thin(&ctx, &stage_points1(&ctx, d), options.thin_k),
            (Decoded::Case1(d), Check::Separation) => separation(&ctx, &stage_points1(&ctx, d)),
            (Decoded::Case2(d), Check::Cover) => cover2(&ctx, d),
            (Decoded::Case2(d), Check::Disjoint) => disjoint2(&ctx, d),
            (Decoded::Case2(d), Check::Thin) => thin(&ctx, &stage_points2(d), options.thin_k),
            (Decoded::Case2(d), Check::Separation) => separation(&ctx, &stage_points2(d)),
            (Decoded::Case2(_), Check::ZSep | Check::Budget) => continue,
        };
        cert.record(check.name(), result);
    }
    Report {
        certificates: cert.out,
        malformed: false,
    }
}

// ---------------------------------------------------------------------------
// Header, records, replay

struct Context {
    config: RunConfig,
    instance: Instance,
    family: Family,
    space: Space,
    budget: Option<MeasureBudget>,
    start: u64,
    header_ok: bool,
}

fn check_header(trace: &Trace, cert: &mut Certifier) -> Option<Context> {
    let h: &Header = &trace.header;
    let config = RunConfig {
        instance: h.instance.clone(),
        p: h.p,
        steps: h.steps,
        thin: h.thin,
        budget: h.budget.clone().unwrap_or_else(|| MeasureBudget::default().id),
    };
    let (instance, budget) = match config.validate() {
        Ok(v) => v,
        Err(e) => {
            cert.fail("header", 0, e.to_string());
            return None;
        }
    };
    let mut problems = Vec::new();
    if h.format != 1 {
        problems.push(format!("unsupported format {}", h.format));
    }
    if h.case != instance.case().number() {
        problems.push(format!("case {} but {} is {}", h.case, h.instance, instance.case().describe()));
    }
    if h.enumeration != instance.family().enumeration_name() {
        problems.push(format!("enumeration `{}` is not `{}`", h.enumeration, instance.family().enumeration_name()));
    }
    if budget.is_none() && h.budget.is_some() {
        problems.push("a budget is recorded for a non-precompact instance".into());
    }
    let digest = config_digest(
        &h.instance,
        h.p,
        budget.as_ref().map(|b| b.id.as_str()),
        h.thin,
        h.steps,
    );
    if digest != h.config_digest {
        problems.push(format!("config digest {} does not match the header fields ({digest})", h.config_digest));
    }
    match (&h.u0, instance.case()) {
        (Some(CellRecord { center, size }), Case::Precompact) => {
            if *center != instance.identity().to_string() {
                problems.push(format!("U0 is centered at {center}"));
            }
            if size.parse::<CellSize>().map_or(true, |s| !Space::of(instance.topology()).accepts(&s)) {
                problems.push(format!("U0 size `{size}` is invalid"));
            }
        }
        (None, Case::Precompact) => problems.push("U0 missing".into()),
        (Some(_), Case::NonPrecompact) => problems.push("U0 recorded for a non-precompact instance".into()),
        (None, Case::NonPrecompact) => {}
    }
    let header_ok = problems.is_empty();
    if header_ok {
        cert.pass(
            "header",
            Some(0),
            vec![
                ("instance", h.instance.clone()),
                ("case", h.case.to_string()),
                ("steps", h.steps.to_string()),
                ("config_digest", digest),
            ],
        );
    } else {
        cert.fail("header", 0, problems.join("; "));
    }
    Some(Context {
        family: instance.family(),
        space: Space::of(instance.topology()),
        start: first_stage(h.case),
        instance,
        config,
        budget,
        header_ok,
    })
}

fn check_records(trace: &Trace, cert: &mut Certifier) {
    let start = first_stage(trace.header.case);
    let steps: Vec<(u64, u8)> = match &trace.records {
        Records::Case1(r) => r.iter().map(|r| (r.step, r.case)).collect(),
        Records::Case2(r) => r.iter().map(|r| (r.step, r.case)).collect(),
    };
    for (k, (step, case)) in steps.iter().enumerate() {
        let expected = start + k as u64;
        if *step != expected || *case != trace.header.case {
            cert.fail(
                "records",
                expected,
                format!("record {} carries step {step}, case {case}; expected step {expected}, case {}", k + 1, trace.header.case),
            );
            return;
        }
    }
    let n = steps.len() as u64;
    if n != trace.header.steps {
        cert.fail(
            "records",
            start + n.min(trace.header.steps),
            format!("{n} records for {} steps", trace.header.steps),
        );
        return;
    }
    cert.pass("records", Some(start + n.saturating_sub(1)), vec![("records", n.to_string())]);
}

fn check_replay(text: &str, ctx: &Context, cert: &mut Certifier) {
    if !ctx.header_ok {
        cert.fail("replay", 0, "not attempted: the header is invalid".into());
        return;
    }
    let run = match execute(&ctx.config) {
        Ok(r) => r,
        Err(e) => {
            cert.fail("replay", 0, format!("the engine refused the header: {e}"));
            return;
        }
    };
    let given: Vec<&str> = text.lines().collect();
    for (k, expected) in run.lines.iter().enumerate() {
        let stage = if k == 0 { 0 } else { ctx.start + k as u64 - 1 };
        match given.get(k) {
            Some(line) if *line == expected.as_str() => {}
            Some(line) => {
                cert.fail(
                    "replay",
                    stage,
                    format!("line {} differs: expected {} got {}", k + 1, clip(expected), clip(line)),
                );
                return;
            }
            None => {
                cert.fail("replay", stage, format!("trace ends before line {}", k + 1));
                return;
            }
        }
    }
    if given.len() > run.lines.len() {
        cert.fail("replay", ctx.start + run.lines.len() as u64 - 1, "extra lines after the last step".into());
        return;
    }
    cert.pass("replay", None, vec![("lines", run.lines.len().to_string())]);
}

fn clip(s: &str) -> String {
    if s.len() <= 160 {
        s.to_string()
    } else {
        let mut end = 160;
        while !s.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}...", &s[..end])
    }
}

// ---------------------------------------------------------------------------
// Decoding

struct Step1 {
    step: u64,
    target_index: u64,
    target: Element,
    x: Element,
    y: Element,
    u_center: Element,
    u: CellSize,
    z: Vec<(Element, Element, CellSize)>,
    step_measure: String,
    cumulative: String,
}

struct Case1Data {
    u0: CellSize,
    steps: Vec<Step1>,
}

struct Block {
    g: Element,
    x: Element,
    gx: Element,
}

enum Decoded {
    Case1(Case1Data),
    Case2(Vec<Block>),
}

fn decode(trace: &Trace, ctx: &Context) -> Result<Decoded, (u64, String)> {
    let fam = ctx.family;
    let el = |s: &str, stage: u64| fam.parse(s).map_err(|e| (stage, e.to_string()));
    let size = |s: &str, stage: u64| -> Result<CellSize, (u64, String)> {
        let size: CellSize = s.parse().map_err(|e: crate::error::ParseError| (stage, e.to_string()))?;
        if ctx.space.accepts(&size) {
            Ok(size)
        } else {
            Err((stage, format!("size `{s}` does not belong to {}", ctx.instance.name())))
        }
    };
    match &trace.records {
        Records::Case1(records) => {
            let u0 = trace.header.u0.as_ref().ok_or((0, "U0 missing".to_string()))?;
            let u0 = size(&u0.size, 0)?;
            let mut steps = Vec::with_capacity(records.len());
            for (k, r) in records.iter().enumerate() {
                let s = ctx.start + k as u64;
                let mut z = Vec::with_capacity(r.z_new.len());
                for e in &r.z_new {
                    z.push((el(&e.z, s)?, el(&e.v.center, s)?, size(&e.v.size, s)?));
                }
                steps.push(Step1 {
                    step: s,
                    target_index: r.target_index,
                    target: el(&r.target, s)?,
                    x: el(&r.x, s)?,
                    y: el(&r.y, s)?,
                    u_center: el(&r.u.center, s)?,
                    u: size(&r.u.size, s)?,
                    z,
                    step_measure: r.measures.step.clone(),
                    cumulative: r.measures.cumulative.clone(),
                });
            }
            Ok(Decoded::Case1(Case1Data { u0, steps }))
        }
        Records::Case2(records) => records
            .iter()
            .enumerate()
            .map(|(k, r)| {
                let s = ctx.start + k as u64;
                Ok(Block {
                    g: el(&r.g, s)?,
                    x: el(&r.x, s)?,
                    gx: el(&r.gx, s)?,
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Decoded::Case2),
    }
}

/// Points of A with the stage that introduced them (first occurrence).
struct StagedPoints {
    points: Vec<(Element, u64)>,
    /// Number of stages, and the number of points present after each stage.
    after: Vec<usize>,
}

fn stage_points1(ctx: &Context, d: &Case1Data) -> StagedPoints {
    let mut seen = HashSet::new();
    let mut points = Vec::new();
    let e = ctx.family.identity();
    seen.insert(e.clone());
    points.push((e, 0));
    let mut after = vec![1];
    for st in &d.steps {
        for p in [&st.x, &st.y] {
            if seen.insert(p.clone()) {
                points.push((p.clone(), st.step));
            }
        }
        after.push(points.len());
    }
    StagedPoints { points, after }
}

fn stage_points2(blocks: &[Block]) -> StagedPoints {
    let mut seen = HashSet::new();
    let mut points = Vec::new();
    let mut after = vec![0];
    for (n, b) in blocks.iter().enumerate() {
        for p in [&b.x, &b.gx] {
            if seen.insert(p.clone()) {
                points.push((p.clone(), n as u64));
            }
        }
        after.push(points.len());
    }
    StagedPoints { points, after }
}

/// `g ∈ AA⁻¹` iff `g·a ∈ A` for some `a ∈ A`.
fn in_difference_set(family: Family, g: &Element, order: &[Element], set: &HashSet<Element>) -> bool {
    order.iter().any(|a| set.contains(&family.compose(g, a)))
}

/// All `a·b⁻¹` over ordered pairs.
pub fn brute_difference_set(family: Family, points: &[Element]) -> HashSet<Element> {
    let mut out = HashSet::with_capacity(points.len() * points.len());
    for a in points {
        for b in points {
            out.insert(family.difference(a, b));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Case 1 checks

/// Condition (1) at every stage, plus minimality of each target.
fn cover1(ctx: &Context, d: &Case1Data) -> Outcome {
    let fam = ctx.family;
    let e = fam.identity();
    let mut order = vec![e.clone()];
    let mut set: HashSet<Element> = [e].into_iter().collect();
    let mut prefix = 0u64;
    let extend = |prefix: &mut u64, order: &[Element], set: &HashSet<Element>| {
        while in_difference_set(fam, &fam.element_at(*prefix), order, set) {
            *prefix += 1;
        }
    };
    extend(&mut prefix, &order, &set);
    for st in &d.steps {
        let k = st.step;
        if st.target_index != prefix {
            return Err((k, format!("target index {} but the least uncovered index is {prefix} ({})", st.target_index, fam.element_at(prefix))));
        }
        if fam.element_at(st.target_index) != st.target {
            return Err((k, format!("target {} is not element {}", st.target, st.target_index)));
        }
        if fam.difference(&st.x, &st.y) != st.target {
            return Err((k, format!("x y^-1 = {} but the target is {}", fam.difference(&st.x, &st.y), st.target)));
        }
        for p in [&st.x, &st.y] {
            if set.insert(p.clone()) {
                order.push(p.clone());
            }
        }
        extend(&mut prefix, &order, &set);
        if prefix <= k {
            return Err((k, format!("g_{prefix} = {} is not in A_kA_k^-1", fam.element_at(prefix))));
        }
    }
    Ok((
        d.steps.last().map(|s| s.step),
        vec![("covered_prefix", prefix.to_string()), ("points", order.len().to_string())],
    ))
}

/// Condition (2): x-cells pairwise disjoint, y-cells pairwise disjoint, and
/// x_i U_i, y_j U_j disjoint for i, j ≥ 1.
fn disjoint1(ctx: &Context, d: &Case1Data) -> Outcome {
    let e = ctx.family.identity();
    let mut xs = vec![(e.clone(), d.u0.clone(), 0u64)];
    let mut ys = vec![(e.clone(), d.u0.clone(), 0u64)];
    for st in &d.steps {
        if st.u_center != e {
            return Err((st.step, format!("U is centered at {} instead of the identity", st.u_center)));
        }
        xs.push((st.x.clone(), st.u.clone(), st.step));
        ys.push((st.y.clone(), st.u.clone(), st.step));
    }
    let sp = ctx.space;
    let apart = |a: &(Element, CellSize, u64), b: &(Element, CellSize, u64)| sp.disjoint((&a.0, &a.1), (&b.0, &b.1));
    let mut pairs = 0u64;
    for j in 0..xs.len() {
        for i in 0..j {
            for (fam, a, b) in [("x", &xs[i], &xs[j]), ("y", &ys[i], &ys[j])] {
                pairs += 1;
                if !apart(a, b) {
                    return Err((b.2, format!("{fam}-cells {} and {} meet ({}U_{i}, {}U_{j})", i, j, a.0, b.0)));
                }
            }
        }
        if j >= 1 {
            for i in 1..=j {
                for (a, b) in [(&xs[i], &ys[j]), (&xs[j], &ys[i])] {
                    pairs += 1;
                    if !apart(a, b) {
                        return Err((j as u64, format!("x-cell at {} and y-cell at {} meet", a.0, b.0)));
                    }
                }
            }
        }
    }
    Ok((
        d.steps.last().map(|s| s.step),
        vec![("cells", (2 * xs.len() - 1).to_string()), ("pairs_checked", pairs.to_string())],
    ))
}

/// Budget term `r_i` as `numer / (denom · 2^halvings(i))`.
struct Terms {
    numer: BigUint,
    denom: BigUint,
    halving: bool,
}

impl Terms {
    fn new(budget: &MeasureBudget) -> Self {
        let (value, halving) = match &budget.rule {
            BudgetRule::Halving { first } => (first, true),
            BudgetRule::Constant { value } => (value, false),
        };
        Terms {
            numer: value.numer().magnitude().clone(),
            denom: value.denom().magnitude().clone(),
            halving,
        }
    }

    fn shift(&self, i: u64) -> u64 {
        if self.halving {
            i
        } else {
            0
        }
    }

    /// `μ < r_i` for a measure term.
    fn below(&self, sweep: &mut PowerSweep, term: &Term, i: u64) -> bool {
        match term {
            Term::Level(k) => sweep.below(*k, &self.numer, &self.denom, self.shift(i)),
            Term::Rational(m) => {
                let lhs = m.numer().magnitude() * (&self.denom << self.shift(i));
                let rhs = m.denom().magnitude() * &self.numer;
                lhs < rhs
            }
        }
    }

    fn describe(&self, i: u64) -> String {
        format!("{}/({}*2^{})", self.numer, self.denom, self.shift(i))
    }
}

fn measure_of(ctx: &Context, size: &CellSize) -> Term {
    cell_measure(ctx.space, size).expect("precompact sizes were validated while decoding")
}

/// Conditions (4) and (5) and completeness of the z-list at every stage.
fn zsep(ctx: &Context, d: &Case1Data) -> Outcome {
    let fam = ctx.family;
    let budget = ctx.budget.as_ref().expect("precompact");
    let terms = Terms::new(budget);
    let mut sweep = PowerSweep::new(base_of(ctx.space).expect("precompact"));
    let e = fam.identity();
    let mut order = vec![(e.clone(), 0u64)];
    let mut points: HashSet<Element> = [e.clone()].into_iter().collect();
    let mut diffs: HashSet<Element> = [e].into_iter().collect();
    let mut zs: HashSet<Element> = HashSet::new();
    let mut cells: Vec<(Element, CellSize, u64)> = Vec::new();
    for st in &d.steps {
        let k = st.step;
        for p in [&st.x, &st.y] {
            if points.insert(p.clone()) {
                order.push((p.clone(), k));
                for (a, _) in &order {
                    diffs.insert(fam.difference(p, a));
                    diffs.insert(fam.difference(a, p));
                }
            }
        }
        let mut last: Option<num_bigint::BigUint> = None;
        for (z, center, v) in &st.z {
            let j = cells.len() as u64;
            if center != z {
                return Err((k, format!("z_{j} = {z} but its cell is centered at {center}")));
            }
            if !diffs.contains(z) {
                return Err((k, format!("z_{j} = {z} is not in A_kA_k^-1")));
            }
            if points.contains(z) {
                return Err((k, format!("z_{j} = {z} lies in A_k")));
            }
            if !zs.insert(z.clone()) {
                return Err((k, format!("z_{j} = {z} is listed twice")));
            }
            let index = fam.index_of(z);
            if last.as_ref().is_some_and(|l| *l >= index) {
                return Err((k, format!("z_{j} = {z} is out of enumeration order")));
            }
            last = Some(index);
            if !terms.below(&mut sweep, &measure_of(ctx, v), j) {
                return Err((k, format!("(5) fails: mu(V_{j}) for size {v} is not below r_{j} = {}", terms.describe(j))));
            }
            cells.push((z.clone(), v.clone(), k));
        }
        if zs.len() + points.len() != diffs.len() {
            let missing = diffs
                .iter()
                .find(|g| !zs.contains(*g) && !points.contains(*g))
                .map_or("?".to_string(), ToString::to_string);
            return Err((k, format!("z-list misses {missing} of A_kA_k^-1 \\ A_k")));
        }
    }
    // (4) against the final A covers every earlier stage
    let sp = ctx.space;
    for (j, (z, v, s)) in cells.iter().enumerate() {
        for (a, t) in &order {
            if sp.contains(z, v, a) {
                return Err(((*s).max(*t), format!("(4) fails: z_{j}V_{j} = {z}·{v} contains the point {a}")));
            }
        }
    }
    Ok((
        d.steps.last().map(|s| s.step),
        vec![
            ("z_entries", cells.len().to_string()),
            ("difference_set", diffs.len().to_string()),
        ],
    ))
}

/// Condition (3), the per-step measure ledger, and the bound on μ(B).
fn budget(ctx: &Context, d: &Case1Data) -> Outcome {
    let budget = ctx.budget.as_ref().expect("precompact");
    let base = base_of(ctx.space).expect("precompact");
    let terms = Terms::new(budget);
    let mut sweep = PowerSweep::new(base);
    let mu0 = measure_of(ctx, &d.u0);
    if !terms.below(&mut sweep, &mu0, 0) {
        return Err((0, format!("(3) fails: mu(U_0) for {} is not below r_0", d.u0)));
    }
    let mut all = vec![mu0];
    let mut running = horner_total(base, &all);
    for st in &d.steps {
        let k = st.step;
        let mu = measure_of(ctx, &st.u);
        if !terms.below(&mut sweep, &mu, k) {
            return Err((k, format!("(3) fails: mu(U_{k}) for {} is not below r_{k} = {}", st.u, terms.describe(k))));
        }
        let mut step_terms = vec![mu.clone(), mu];
        step_terms.extend(st.z.iter().map(|(_, _, v)| measure_of(ctx, v)));
        let step_total = horner_total(base, &step_terms);
        let recorded_step = parse_ratio(&st.step_measure).map_err(|e| (k, format!("step measure: {e}")))?;
        if recorded_step != step_total {
            return Err((k, format!("step measure {} but the cells of this step sum to {}", clip(&st.step_measure), clip(&format_ratio(&step_total)))));
        }
        running += &step_total;
        let recorded = parse_ratio(&st.cumulative).map_err(|e| (k, format!("cumulative measure: {e}")))?;
        if recorded != running {
            return Err((k, format!("cumulative measure {} does not equal the running total", clip(&st.cumulative))));
        }
        all.extend(step_terms);
    }
    let last = d.steps.last().map_or(0, |s| s.step);
    let total = horner_total(base, &all);
    if total != running {
        return Err((last, "Horner total disagrees with the running total".into()));
    }
    if total >= ratio(1, 2) {
        return Err((last, format!("total measure {} is not below 1/2", clip(&format_ratio(&total)))));
    }
    let sum = budget.sum().expect("certified budget");
    let three_sum = &sum * BigRational::from_integer(3.into());
    if total > three_sum {
        return Err((last, format!("total measure exceeds 3 * sum r_i = {}", format_ratio(&three_sum))));
    }
    Ok((
        Some(last),
        vec![
            ("cells", all.len().to_string()),
            ("total", format_ratio(&total)),
            ("three_sum_r", format_ratio(&three_sum)),
            ("half", "1/2".into()),
        ],
    ))
}

// ---------------------------------------------------------------------------
// Case 2 checks

fn cover2(ctx: &Context, blocks: &[Block]) -> Outcome {
    let fam = ctx.family;
    let mut order = Vec::new();
    let mut set = HashSet::new();
    for (n, b) in blocks.iter().enumerate() {
        let n = n as u64;
        if b.g != fam.element_at(n) {
            return Err((n, format!("block {n} is built for {} instead of g_{n} = {}", b.g, fam.element_at(n))));
        }
        if fam.compose(&b.g, &b.x) != b.gx {
            return Err((n, format!("g x = {} but the block records {}", fam.compose(&b.g, &b.x), b.gx)));
        }
        for p in [&b.x, &b.gx] {
            if set.insert(p.clone()) {
                order.push(p.clone());
            }
        }
    }
    for (n, b) in blocks.iter().enumerate() {
        if !in_difference_set(fam, &b.g, &order, &set) {
            return Err((n as u64, format!("g_{n} = {} is not in AA^-1", b.g)));
        }
    }
    Ok((
        blocks.len().checked_sub(1).map(|n| n as u64),
        vec![("covered", blocks.len().to_string()), ("points", order.len().to_string())],
    ))
}

fn disjoint2(ctx: &Context, blocks: &[Block]) -> Outcome {
    let v = ctx.instance.witness().expect("non-precompact").v.clone();
    let sp = ctx.space;
    let members = |b: &Block| -> Vec<Element> {
        if b.x == b.gx {
            vec![b.x.clone()]
        } else {
            vec![b.x.clone(), b.gx.clone()]
        }
    };
    let sets: Vec<Vec<Element>> = blocks.iter().map(members).collect();
    let mut pairs = 0u64;
    for j in 0..sets.len() {
        for i in 0..j {
            for a in &sets[i] {
                for b in &sets[j] {
                    pairs += 1;
                    if !sp.disjoint((a, &v), (b, &v)) {
                        return Err((j as u64, format!("{a}V (block {i}) meets {b}V (block {j})")));
                    }
                }
            }
        }
    }
    Ok((
        blocks.len().checked_sub(1).map(|n| n as u64),
        vec![("V", v.to_string()), ("pairs_checked", pairs.to_string())],
    ))
}

// ---------------------------------------------------------------------------
// Shared checks

/// Hausdorff witnesses for every pair of distinct points.
fn separation(ctx: &Context, pts: &StagedPoints) -> Outcome {
    let sp = ctx.space;
    for j in 0..pts.points.len() {
        for i in 0..j {
            let (a, _) = &pts.points[i];
            let (b, s) = &pts.points[j];
            let size = sp.separating_size(a, b);
            if !sp.disjoint((a, &size), (b, &size)) {
                return Err((*s, format!("cells of size {size} around {a} and {b} meet")));
            }
        }
    }
    Ok((None, vec![("points", pts.points.len().to_string())]))
}

/// `|{a ∈ A : g·a ∈ A}|` for each `g`.
pub fn pair_counts(family: Family, points: &[Element], gs: &[Element]) -> Vec<usize> {
    let set: HashSet<&Element> = points.iter().collect();
    gs.iter()
        .map(|g| points.iter().filter(|a| set.contains(&family.compose(g, a))).count())
        .collect()
}

/// Stabilization of pair counts between stage ⌊N/2⌋ and stage N for
/// `g_1 .. g_k`.
///
/// An element is tested only when it and its inverse both have index below
/// N/2: the exclusion set at stage N/2 covers exactly those, and every later
/// block or pair adds one pair for its own element and one for its inverse.
fn thin(ctx: &Context, pts: &StagedPoints, k: u64) -> Outcome {
    let fam = ctx.family;
    let n2 = pts.after.len() as u64 - 1;
    let n1 = n2 / 2;
    let limit = num_bigint::BigUint::from(n1);
    let gs: Vec<Element> = (1..=k)
        .map(|i| fam.element_at(i))
        .filter(|g| fam.index_of(g) < limit && fam.index_of(&fam.inverse(g)) < limit)
        .collect();
    let all: Vec<Element> = pts.points.iter().map(|(p, _)| p.clone()).collect();
    let early = &all[..pts.after[n1 as usize]];
    let c1 = pair_counts(fam, early, &gs);
    let c2 = pair_counts(fam, &all, &gs);
    let fmt = |c: &[usize]| c.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
    let last_stage = |n: u64| if ctx.start == 1 { n } else { n.saturating_sub(1) };
    if let Some(i) = (0..c1.len()).find(|i| c1[*i] != c2[*i]) {
        return Err((
            last_stage(n2),
            format!(
                "g = {}: {} pairs at stage {} but {} at stage {}",
                gs[i],
                c1[i],
                last_stage(n1),
                c2[i],
                last_stage(n2)
            ),
        ));
    }
    Ok((
        Some(last_stage(n2)),
        vec![
            ("n1", n1.to_string()),
            ("n2", n2.to_string()),
            ("tested", gs.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")),
            ("counts_n1", fmt(&c1)),
            ("counts_n2", fmt(&c2)),
        ],
    ))
}
