//! JSONL run traces: one header line, then one record per step.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::case1::{StepTrace, ZEntry};
use crate::case2::BlockTrace;
use crate::geometry::{Cell, CellSize};
use crate::group::Element;

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellRecord {
    pub center: String,
    pub size: String,
}

impl CellRecord {
    pub fn new(center: &Element, size: &CellSize) -> Self {
        CellRecord {
            center: center.to_string(),
            size: size.to_string(),
        }
    }

    pub fn from_cell(cell: &Cell) -> Self {
        CellRecord::new(&cell.center, &cell.size)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Header {
    pub format: u32,
    pub instance: String,
    pub p: Option<u64>,
    pub case: u8,
    pub budget: Option<String>,
    pub thin: bool,
    #[serde(rename = "enum")]
    pub enumeration: String,
    pub steps: u64,
    pub config_digest: String,
    #[serde(rename = "U0", default, skip_serializing_if = "Option::is_none")]
    pub u0: Option<CellRecord>,
}

/// Digest of the fields that determine a run.
pub fn config_digest(
    instance: &str,
    p: Option<u64>,
    budget: Option<&str>,
    thin: bool,
    steps: u64,
) -> String {
    let canonical = format!(
        "instance={instance};p={};budget={};thin={thin};steps={steps}",
        p.map_or("-".to_string(), |p| p.to_string()),
        budget.unwrap_or("-"),
    );
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZRecord {
    pub z: String,
    #[serde(rename = "V")]
    pub v: CellRecord,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Measures {
    pub step: String,
    pub cumulative: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Case1Record {
    pub step: u64,
    pub case: u8,
    pub target_index: u64,
    pub target: String,
    pub x: String,
    pub y: String,
    #[serde(rename = "U")]
    pub u: CellRecord,
    pub z_new: Vec<ZRecord>,
    pub measures: Measures,
}

impl Case1Record {
    pub fn from_trace(t: &StepTrace, identity: &Element) -> Self {
        Case1Record {
            step: t.step,
            case: 1,
            target_index: t.target_index,
            target: t.target.to_string(),
            x: t.x.to_string(),
            y: t.y.to_string(),
            u: CellRecord::new(identity, &t.u),
            z_new: t.z_new.iter().map(ZRecord::from_entry).collect(),
            measures: Measures {
                step: t.step_measure.clone(),
                cumulative: t.cumulative.clone(),
            },
        }
    }
}

impl ZRecord {
    fn from_entry(e: &ZEntry) -> Self {
        ZRecord {
            z: e.z.to_string(),
            v: CellRecord::new(&e.z, &e.v),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Case2Record {
    pub step: u64,
    pub case: u8,
    pub g: String,
    pub x: String,
    pub gx: String,
}

impl Case2Record {
    pub fn from_trace(t: &BlockTrace) -> Self {
        Case2Record {
            step: t.step,
            case: 2,
            g: t.block.g.to_string(),
            x: t.block.x.to_string(),
            gx: t.block.gx.to_string(),
        }
    }
}

/// Serializes one record as a single line (no trailing newline).
pub fn to_line<T: Serialize>(record: &T) -> String {
    serde_json::to_string(record).expect("trace records always serialize")
}

/// A parsed trace file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Records {
    Case1(Vec<Case1Record>),
    Case2(Vec<Case2Record>),
}

impl Records {
    pub fn len(&self) -> usize {
        match self {
            Records::Case1(r) => r.len(),
            Records::Case2(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub header: Header,
    pub records: Records,
}

/// A trace that could not be read, with the stage its first bad line would
/// have described.
#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("line {line} (stage {stage}): {message}")]
pub struct TraceError {
    pub line: usize,
    pub stage: u64,
    pub message: String,
}

/// Stage number of the first record of a trace.
pub fn first_stage(case: u8) -> u64 {
    if case == 1 {
        1
    } else {
        0
    }
}

pub fn parse_trace(text: &str) -> Result<Trace, TraceError> {
    let mut lines = text.split_inclusive('\n');
    let fail = |line: usize, stage: u64, message: String| TraceError {
        line,
        stage,
        message,
    };
    let first = lines
        .next()
        .ok_or_else(|| fail(1, 0, "empty trace".into()))?;
    let header: Header = parse_line(first).map_err(|m| fail(1, 0, format!("header: {m}")))?;
    let start = first_stage(header.case);
    let mut records = match header.case {
        1 => Records::Case1(Vec::new()),
        2 => Records::Case2(Vec::new()),
        c => return Err(fail(1, 0, format!("unknown case {c}"))),
    };
    for (k, raw) in lines.enumerate() {
        let stage = start + k as u64;
        let lineno = k + 2;
        if raw.trim().is_empty() && k as u64 >= header.steps {
            continue;
        }
        match &mut records {
            Records::Case1(v) => v.push(parse_line(raw).map_err(|m| fail(lineno, stage, m))?),
            Records::Case2(v) => v.push(parse_line(raw).map_err(|m| fail(lineno, stage, m))?),
        }
    }
    Ok(Trace { header, records })
}

fn parse_line<T: for<'de> Deserialize<'de>>(raw: &str) -> Result<T, String> {
    let Some(body) = raw.strip_suffix('\n') else {
        return Err("record is not newline-terminated (truncated)".into());
    };
    serde_json::from_str(body).map_err(|e| e.to_string())
}
