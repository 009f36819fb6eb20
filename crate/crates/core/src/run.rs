//! End-to-end runs: configuration, engine dispatch and trace text.

use serde::{Deserialize, Serialize};

use crate::case1::{run_case1, Case1State};
use crate::case2::{run_case2, Case2State};
use crate::error::{ConfigError, EngineError};
use crate::geometry::MeasureBudget;
use crate::instances::{make_instance, Case, Instance, InstanceConfig};
use crate::trace::{config_digest, to_line, Case1Record, Case2Record, CellRecord, Header, FORMAT_VERSION};

pub const MAX_STEPS: u64 = 10_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub instance: String,
    #[serde(default)]
    pub p: Option<u64>,
    pub steps: u64,
    #[serde(default)]
    pub thin: bool,
    #[serde(default = "default_budget")]
    pub budget: String,
}

fn default_budget() -> String {
    MeasureBudget::default().id
}

impl RunConfig {
    pub fn new(instance: &str, p: Option<u64>, steps: u64, thin: bool) -> Self {
        RunConfig {
            instance: instance.to_string(),
            p,
            steps,
            thin,
            budget: default_budget(),
        }
    }

    /// Instance and budget, checked before anything runs.
    pub fn validate(&self) -> Result<(Instance, Option<MeasureBudget>), ConfigError> {
        if self.steps > MAX_STEPS {
            return Err(ConfigError::TooManySteps(self.steps, MAX_STEPS));
        }
        let instance = make_instance(&InstanceConfig::new(&self.instance, self.p))?;
        let budget = match instance.case() {
            Case::Precompact => {
                let b = MeasureBudget::parse(&self.budget)?;
                b.certify()?;
                Some(b)
            }
            Case::NonPrecompact => None,
        };
        Ok((instance, budget))
    }
}

/// Final engine state of a run.
#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)] // one per run
pub enum Outcome {
    Case1(Case1State),
    Case2(Case2State),
}

#[derive(Clone, Debug)]
pub struct Run {
    pub header: Header,
    pub lines: Vec<String>,
    pub outcome: Outcome,
}

impl Run {
    /// The JSONL file contents.
    pub fn text(&self) -> String {
        let mut out = String::with_capacity(self.lines.iter().map(|l| l.len() + 1).sum());
        for line in &self.lines {
            out.push_str(line);
            out.push('\n');
        }
        out
    }

    pub fn points(&self) -> &[crate::group::Element] {
        match &self.outcome {
            Outcome::Case1(s) => s.points(),
            Outcome::Case2(s) => s.points(),
        }
    }
}

pub fn execute(config: &RunConfig) -> Result<Run, EngineError> {
    let (instance, budget) = config.validate()?;
    let mut header = Header {
        format: FORMAT_VERSION,
        instance: instance.name().to_string(),
        p: instance.p(),
        case: instance.case().number(),
        budget: budget.as_ref().map(|b| b.id.clone()),
        thin: config.thin,
        enumeration: instance.family().enumeration_name().to_string(),
        steps: config.steps,
        config_digest: config_digest(
            instance.name(),
            instance.p(),
            budget.as_ref().map(|b| b.id.as_str()),
            config.thin,
            config.steps,
        ),
        u0: None,
    };
    match budget {
        Some(budget) => {
            let (state, traces) = run_case1(&instance, budget, config.steps, config.thin)?;
            let e = instance.identity();
            header.u0 = Some(CellRecord::new(&e, &state.pairs()[0].u));
            let mut lines = vec![to_line(&header)];
            lines.extend(traces.iter().map(|t| to_line(&Case1Record::from_trace(t, &e))));
            Ok(Run {
                header,
                lines,
                outcome: Outcome::Case1(state),
            })
        }
        None => {
            let (state, traces) = run_case2(&instance, config.steps, config.thin)?;
            let mut lines = vec![to_line(&header)];
            lines.extend(traces.iter().map(|t| to_line(&Case2Record::from_trace(t))));
            Ok(Run {
                header,
                lines,
                outcome: Outcome::Case2(state),
            })
        }
    }
}
