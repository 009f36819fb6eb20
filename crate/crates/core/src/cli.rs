//! Command-line front end.

use std::collections::HashSet;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::case1::{init_case1, Case1State};
use crate::case2::{init_case2, Case2State};
use crate::error::{ConfigError, EngineError};
use crate::group::Element;
use crate::instances::Instance;
use crate::run::{execute, Outcome, RunConfig};
use crate::verifier::{brute_difference_set, verify_text, Check, VerifyOptions};

/// Largest run accepted by `oracle-diff`.
pub const ORACLE_MAX_STEPS: u64 = 200;

/// Measures longer than this are left to the trace file in the summary.
const SUMMARY_MEASURE_CHARS: usize = 120;

#[derive(Debug, Parser)]
#[command(name = "discrete-cover", version, about = "Closed discrete sets A with G = AA⁻¹, with certificates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the construction and write a JSONL trace.
    Construct(ConstructArgs),
    /// Re-check a trace and print one certificate per check.
    Verify(VerifyArgs),
    /// Compare engine bookkeeping against a brute-force difference set.
    OracleDiff(OracleArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct RunArgs {
    /// z-in-zp, golden-rotation, q-usual, z-discrete or f2-discrete.
    #[arg(long)]
    pub instance: Option<String>,
    /// Prime for z-in-zp.
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long)]
    pub steps: Option<u64>,
    /// Keep pair counts |{a ∈ A : ga ∈ A}| finite.
    #[arg(long)]
    pub thin: bool,
    /// Measure budget rule, e.g. geom-1/16.
    #[arg(long)]
    pub budget: Option<String>,
    /// JSON file with the same fields; flags given on the command line win.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConstructArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Trace destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub path: PathBuf,
    /// Comma-separated subset of cover, disjoint, z-sep, budget, thin, separation.
    #[arg(long, value_delimiter = ',')]
    pub checks: Option<Vec<String>>,
    /// Write all certificates as JSONL.
    #[arg(long)]
    pub certs: Option<PathBuf>,
    /// Skip re-running the engine; only the record-level checks run.
    #[arg(long)]
    pub no_replay: bool,
    /// Number of g ≠ e tested by the thin check.
    #[arg(long, default_value_t = 30)]
    pub thin_k: u64,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Drop one element from the engine's set at this stage (harness self-test).
    #[arg(long, hide = true)]
    pub inject_divergence: Option<u64>,
}

/// Config file contents; every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    instance: Option<String>,
    p: Option<u64>,
    steps: Option<u64>,
    thin: Option<bool>,
    budget: Option<String>,
    out: Option<PathBuf>,
    /// Runs are always deterministic; accepted for completeness.
    #[serde(default)]
    #[allow(dead_code)]
    random_free: Option<bool>,
}

struct Resolved {
    config: RunConfig,
    out: Option<PathBuf>,
}

fn resolve(args: &RunArgs, out: Option<PathBuf>) -> Result<Resolved, String> {
    let file = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
            serde_json::from_str::<ConfigFile>(&text).map_err(|e| format!("{}: {e}", path.display()))?
        }
        None => ConfigFile::default(),
    };
    let instance = args
        .instance
        .clone()
        .or(file.instance)
        .ok_or("missing --instance")?;
    let steps = args.steps.or(file.steps).ok_or("missing --steps")?;
    let mut config = RunConfig::new(&instance, args.p.or(file.p), steps, args.thin || file.thin.unwrap_or(false));
    if let Some(b) = args.budget.clone().or(file.budget) {
        config.budget = b;
    }
    Ok(Resolved {
        config,
        out: out.or(file.out),
    })
}

/// Parses `std::env::args` and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match cli.command {
        Command::Construct(a) => cmd_construct(&a),
        Command::Verify(a) => cmd_verify(&a),
        Command::OracleDiff(a) => cmd_oracle_diff(&a),
    }
}

pub fn cmd_construct(args: &ConstructArgs) -> i32 {
    let resolved = match resolve(&args.run, args.out.clone()) {
        Ok(r) => r,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 2;
        }
    };
    let run = match execute(&resolved.config) {
        Ok(run) => run,
        Err(e) => return report_engine_error(&e),
    };
    let text = run.text();
    let summary: Box<dyn Write> = match &resolved.out {
        Some(path) => {
            if let Err(e) = fs::write(path, &text) {
                eprintln!("error: {}: {e}", path.display());
                return 2;
            }
            Box::new(io::stdout())
        }
        None => {
            print!("{text}");
            Box::new(io::stderr())
        }
    };
    let _ = write_summary(summary, &run.outcome, run.points().len(), resolved.out.as_deref());
    0
}

fn report_engine_error(e: &EngineError) -> i32 {
    match e {
        EngineError::Config(c) => {
            eprintln!("error: {c}");
            2
        }
        EngineError::Invariant(v) => {
            eprintln!("FAIL  invariant   stage {}  {}", v.stage, v.detail);
            1
        }
        EngineError::Geometry(g) => {
            eprintln!("FAIL  geometry    {g}");
            1
        }
    }
}

fn write_summary(mut w: Box<dyn Write>, outcome: &Outcome, size: usize, out: Option<&Path>) -> io::Result<()> {
    writeln!(w, "|A| = {size}")?;
    match outcome {
        Outcome::Case1(s) => {
            writeln!(w, "covered prefix = {}", s.covered_prefix())?;
            let m = s.cumulative_measure();
            if m.len() <= SUMMARY_MEASURE_CHARS {
                writeln!(w, "measure = {m}")?;
            } else {
                let place = out.map_or("the trace".to_string(), |p| p.display().to_string());
                writeln!(w, "measure = ({} characters, see {place})", m.len())?;
            }
        }
        Outcome::Case2(s) => {
            writeln!(w, "covered prefix = {}", prefix_len(s.instance(), s.covered()))?;
        }
    }
    Ok(())
}

fn prefix_len(instance: &Instance, covered: &HashSet<Element>) -> u64 {
    (0..).find(|i| !covered.contains(&instance.element_at(*i))).unwrap_or(u64::MAX)
}

pub fn cmd_verify(args: &VerifyArgs) -> i32 {
    let checks = match &args.checks {
        Some(names) => {
            let mut out = Vec::new();
            for n in names {
                match Check::parse(n.trim()) {
                    Some(c) => out.push(c),
                    None => {
                        eprintln!("error: unknown check {n:?}");
                        return 2;
                    }
                }
            }
            Some(out)
        }
        None => None,
    };
    let text = match fs::read_to_string(&args.path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {}: {e}", args.path.display());
            return 2;
        }
    };
    let opts = VerifyOptions {
        checks,
        thin_k: args.thin_k,
        replay: !args.no_replay,
    };
    let report = verify_text(&text, &opts);
    for c in &report.certificates {
        println!("{c}");
    }
    if let Some(path) = &args.certs {
        let lines: String = report
            .certificates
            .iter()
            .map(|c| serde_json::to_string(c).expect("certificates serialize") + "\n")
            .collect();
        if let Err(e) = fs::write(path, lines) {
            eprintln!("error: {}: {e}", path.display());
            return 2;
        }
    }
    report.exit_code()
}

/// An engine driven one stage at a time.
#[allow(clippy::large_enum_variant)]
enum Engine {
    Case1(Case1State),
    Case2(Case2State),
}

impl Engine {
    fn covered(&self) -> &HashSet<Element> {
        match self {
            Engine::Case1(s) => s.covered(),
            Engine::Case2(s) => s.covered(),
        }
    }

    fn points(&self) -> &[Element] {
        match self {
            Engine::Case1(s) => s.points(),
            Engine::Case2(s) => s.points(),
        }
    }

    fn step(&mut self) -> Result<(), EngineError> {
        match self {
            Engine::Case1(s) => s.step().map(drop),
            Engine::Case2(s) => {
                s.step();
                Ok(())
            }
        }
    }
}

pub fn cmd_oracle_diff(args: &OracleArgs) -> i32 {
    let config = match resolve(&args.run, None) {
        Ok(r) => r.config,
        Err(msg) => {
            eprintln!("error: {msg}");
            return 2;
        }
    };
    if config.steps > ORACLE_MAX_STEPS {
        eprintln!("error: {}", ConfigError::TooManySteps(config.steps, ORACLE_MAX_STEPS));
        return 2;
    }
    match oracle_diff(&config, args.inject_divergence) {
        Ok(None) => {
            println!("PASS  oracle-diff  {} stages agree", config.steps);
            0
        }
        Ok(Some(d)) => {
            println!("FAIL  oracle-diff  stage {}  {}", d.stage, d.detail);
            1
        }
        Err(e) => report_engine_error(&e),
    }
}

/// The first stage where engine and oracle disagree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Divergence {
    pub stage: u64,
    pub detail: String,
}

/// Steps the engine and compares its difference set with the brute-force
/// one after every stage. Case 1 stages run 1..=N, Case 2 stages 0..N.
pub fn oracle_diff(config: &RunConfig, inject: Option<u64>) -> Result<Option<Divergence>, EngineError> {
    let (instance, budget) = config.validate()?;
    let (mut engine, first) = match budget {
        Some(b) => (Engine::Case1(init_case1(&instance, b, config.thin)?), 1),
        None => (Engine::Case2(init_case2(&instance, config.thin)?), 0),
    };
    for k in 0..config.steps {
        engine.step()?;
        let stage = first + k;
        let mut engine_set = engine.covered().clone();
        if inject == Some(stage) {
            if let Some(g) = engine_set.iter().find(|g| **g != instance.identity()).cloned() {
                engine_set.remove(&g);
            }
        }
        let brute = brute_difference_set(instance.family(), engine.points());
        if let Some(g) = brute.iter().find(|g| !engine_set.contains(*g)) {
            return Ok(Some(Divergence {
                stage,
                detail: format!("{g} is a difference of A but missing from the engine set"),
            }));
        }
        if let Some(g) = engine_set.iter().find(|g| !brute.contains(*g)) {
            return Ok(Some(Divergence {
                stage,
                detail: format!("engine set contains {g}, which is not a difference of A"),
            }));
        }
        // after k + 1 steps the first k + 2 (Case 1) or k + 1 (Case 2) elements are covered
        let want = k + 1 + first;
        if let Some(i) = (0..want).find(|i| !brute.contains(&instance.element_at(*i))) {
            return Ok(Some(Divergence {
                stage,
                detail: format!("g_{i} = {} is not in AA⁻¹", instance.element_at(i)),
            }));
        }
    }
    Ok(None)
}
