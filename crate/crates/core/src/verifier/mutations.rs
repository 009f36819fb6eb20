//! Deliberate corruptions of a valid trace; the verifier must reject each.

use serde_json::Value;

use crate::group::{Element, Family};
use crate::instances::{make_instance, InstanceConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mutation {
    /// Move the center of a cell.
    Center,
    /// Enlarge a cell.
    Size,
    /// Change one digit of a recorded measure.
    Measure,
    /// Remove an entry from the z-list.
    DropZ,
    /// Swap two consecutive records.
    Reorder,
    /// Cut the file in the middle of a record.
    Truncate,
    /// Change a run parameter in the header.
    Header,
    /// Break the covering relation of a record.
    Coverage,
}

impl Mutation {
    pub const ALL: [Mutation; 8] = [
        Mutation::Center,
        Mutation::Size,
        Mutation::Measure,
        Mutation::DropZ,
        Mutation::Reorder,
        Mutation::Truncate,
        Mutation::Header,
        Mutation::Coverage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Mutation::Center => "center",
            Mutation::Size => "size",
            Mutation::Measure => "measure",
            Mutation::DropZ => "dropped-z",
            Mutation::Reorder => "reordered-record",
            Mutation::Truncate => "truncation",
            Mutation::Header => "header-tamper",
            Mutation::Coverage => "coverage-tamper",
        }
    }
}

/// A corrupted trace and the stage the corruption sits in.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mutated {
    pub text: String,
    pub stage: u64,
}

/// Applies `m` at the first suitable record at or after `stage`. Returns
/// `None` when the trace has no such record (for example size mutations on
/// a trace without cell sizes).
pub fn mutate(text: &str, m: Mutation, stage: u64) -> Option<Mutated> {
    let mut lines: Vec<String> = text.lines().map(str::to_string).collect();
    let mut header: Value = serde_json::from_str(lines.first()?).ok()?;
    let case = header["case"].as_u64()?;
    let start = if case == 1 { 1 } else { 0 };
    let instance = make_instance(&InstanceConfig::new(header["instance"].as_str()?, header["p"].as_u64())).ok()?;
    let family = instance.family();
    let line_of = |s: u64| (s - start + 1) as usize;
    let stage_of = |l: usize| l as u64 - 1 + start;
    let first = line_of(stage.max(start));

    let edit_record = |lines: &mut Vec<String>, pick: &dyn Fn(&Value) -> bool, edit: &dyn Fn(&mut Value) -> Option<()>| {
        for (l, line) in lines.iter_mut().enumerate().skip(first) {
            let mut rec: Value = serde_json::from_str(line).ok()?;
            if pick(&rec) {
                edit(&mut rec)?;
                *line = serde_json::to_string(&rec).ok()?;
                return Some(stage_of(l));
            }
        }
        None
    };
    let has_z = |r: &Value| r["z_new"].as_array().is_some_and(|z| !z.is_empty());
    let any = |_: &Value| true;

    let stage = match m {
        Mutation::Center if case == 1 => edit_record(&mut lines, &has_z, &|r| {
            let c = &mut r["z_new"][0]["V"]["center"];
            *c = Value::String(perturb(family, c.as_str()?));
            Some(())
        })?,
        Mutation::Center => edit_record(&mut lines, &any, &|r| {
            r["x"] = Value::String(perturb(family, r["x"].as_str()?));
            Some(())
        })?,
        Mutation::Size if case == 1 => edit_record(&mut lines, &has_z, &|r| {
            r["z_new"][0]["V"]["size"] = Value::String("level:0".into());
            Some(())
        })?,
        Mutation::Measure if case == 1 => edit_record(&mut lines, &any, &|r| {
            let s = r["measures"]["step"].as_str()?.to_string();
            r["measures"]["step"] = Value::String(bump_numerator(&s)?);
            Some(())
        })?,
        Mutation::DropZ if case == 1 => edit_record(&mut lines, &has_z, &|r| {
            r["z_new"].as_array_mut()?.pop();
            Some(())
        })?,
        Mutation::Size | Mutation::Measure | Mutation::DropZ => return None,
        Mutation::Reorder => {
            if first + 1 >= lines.len() {
                return None;
            }
            lines.swap(first, first + 1);
            stage_of(first)
        }
        Mutation::Truncate => {
            let line = lines.get(first)?.clone();
            lines.truncate(first);
            let mut out = lines.join("\n");
            out.push('\n');
            out.push_str(&line[..line.len() / 2]);
            return Some(Mutated {
                text: out,
                stage: stage_of(first),
            });
        }
        Mutation::Header => {
            let thin = header["thin"].as_bool()?;
            header["thin"] = Value::Bool(!thin);
            lines[0] = serde_json::to_string(&header).ok()?;
            0
        }
        Mutation::Coverage if case == 1 => edit_record(&mut lines, &any, &|r| {
            r["x"] = Value::String(perturb(family, r["x"].as_str()?));
            Some(())
        })?,
        Mutation::Coverage => edit_record(&mut lines, &|r| r["g"] != r["gx"] || r["x"] != r["gx"], &|r| {
            r["gx"] = Value::String(perturb(family, r["gx"].as_str()?));
            Some(())
        })?,
    };
    let mut out = lines.join("\n");
    out.push('\n');
    Some(Mutated { text: out, stage })
}

/// A different element near `s`: one more generator on the right.
fn perturb(family: Family, s: &str) -> String {
    let e = family.parse(s).expect("trace elements are canonical");
    let step: Element = family.element_at(1);
    family.compose(&e, &step).to_string()
}

/// `n/d` → `(n+1)/d`, keeping the string a valid ratio.
fn bump_numerator(s: &str) -> Option<String> {
    let (n, d) = s.split_once('/')?;
    let n: num_bigint::BigInt = n.parse().ok()?;
    Some(format!("{}/{d}", n + 1))
}
