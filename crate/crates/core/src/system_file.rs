//! JSON system descriptions.
//!
//! ```json
//! {
//!   "name": "rll-2",
//!   "labels": ["0", "1"],
//!   "constants": {"tau": 6.283185307179586},
//!   "runs": [
//!     {"kind": "explicit", "weights": ["1", "3/2", "pi", 2.5e0]},
//!     {"kind": "arithmetic", "first": "4", "step": "2"},
//!     {"kind": "geometric", "first": "8", "ratio": "2"}
//!   ]
//! }
//! ```
//!
//! Weights given as strings are exact (`"3"`, `"3/2"`, `"0.25"`, `"2*pi"`,
//! `"1 + 1/2*tau"`) unless they carry an exponent. JSON numbers are reals.
//! Several `runs` entries form a disjoint union.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::system::{ConstrainedSystem, Family, LabelSet, RunLengthSet};
use crate::weight::{Atom, Constants, Weight};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    description: Option<String>,
    labels: Vec<String>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    constants: BTreeMap<String, f64>,
    runs: Vec<RawRuns>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum RawRuns {
    Explicit { weights: Vec<Value> },
    Arithmetic { first: Value, step: Value },
    Geometric { first: Value, ratio: Value },
}

/// A parsed system together with its optional metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    pub name: Option<String>,
    pub description: Option<String>,
    pub system: ConstrainedSystem,
}

impl SystemSpec {
    pub fn new(system: ConstrainedSystem) -> Self {
        Self {
            name: None,
            description: None,
            system,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawSpec = serde_json::from_str(text)?;
        let mut constants = Constants::default();
        for (name, value) in &raw.constants {
            constants.define(name, *value)?;
        }
        let labels = LabelSet::new(&raw.labels)?;
        if raw.runs.is_empty() {
            return Err(Error::InvalidRunLengthSet("no runs given".into()));
        }
        let mut parts = raw
            .runs
            .iter()
            .map(|r| r.build(&constants))
            .collect::<Result<Vec<_>>>()?;
        let runs = if parts.len() == 1 {
            parts.pop().expect("one part")
        } else {
            RunLengthSet::union(parts)?
        };
        Ok(Self {
            name: raw.name,
            description: raw.description,
            system: ConstrainedSystem::new(runs, labels),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        let runs = self.system.runs();
        let parts: Vec<&RunLengthSet> = match runs.family() {
            Family::Union(ps) => ps.iter().collect(),
            _ => vec![runs],
        };
        let mut constants = BTreeMap::new();
        let raw_runs = parts
            .iter()
            .map(|p| RawRuns::from_family(p.family(), &mut constants))
            .collect();
        let raw = RawSpec {
            name: self.name.clone(),
            description: self.description.clone(),
            labels: self
                .system
                .labels()
                .labels()
                .iter()
                .map(|l| l.to_string())
                .collect(),
            constants,
            runs: raw_runs,
        };
        serde_json::to_string_pretty(&raw).expect("serializable")
    }
}

impl RawRuns {
    fn build(&self, constants: &Constants) -> Result<RunLengthSet> {
        match self {
            RawRuns::Explicit { weights } => RunLengthSet::explicit(
                weights
                    .iter()
                    .map(|w| weight_from_json(w, constants))
                    .collect::<Result<_>>()?,
            ),
            RawRuns::Arithmetic { first, step } => Ok(RunLengthSet::arithmetic(
                weight_from_json(first, constants)?,
                weight_from_json(step, constants)?,
            )),
            RawRuns::Geometric { first, ratio } => RunLengthSet::geometric(
                weight_from_json(first, constants)?,
                weight_from_json(ratio, constants)?,
            ),
        }
    }

    fn from_family(family: &Family, constants: &mut BTreeMap<String, f64>) -> Self {
        let mut w = |x: &Weight| weight_to_json(x, constants);
        match family {
            Family::Explicit(ws) => RawRuns::Explicit {
                weights: ws.iter().map(&mut w).collect(),
            },
            Family::Arithmetic { first, step } => RawRuns::Arithmetic {
                first: w(first),
                step: w(step),
            },
            Family::Geometric { first, ratio } => RawRuns::Geometric {
                first: w(first),
                ratio: w(ratio),
            },
            Family::Union(_) => unreachable!("unions are flat"),
        }
    }
}

fn weight_from_json(v: &Value, constants: &Constants) -> Result<Weight> {
    match v {
        Value::String(s) => Weight::parse(s, constants),
        Value::Number(n) => Weight::real(
            n.as_f64()
                .ok_or_else(|| Error::Parse(format!("bad number {n}")))?,
        ),
        other => Err(Error::Parse(format!("expected a weight, got {other}"))),
    }
}

fn weight_to_json(w: &Weight, constants: &mut BTreeMap<String, f64>) -> Value {
    match w.exact() {
        Some(form) => {
            let builtin = Constants::default();
            for (atom, _) in form.terms() {
                if let Atom::Const(sym) = atom {
                    if builtin.get(sym.name()).ok().as_ref() != Some(sym) {
                        constants.insert(sym.name().to_string(), sym.value());
                    }
                }
            }
            Value::String(w.to_string())
        }
        None => serde_json::Number::from_f64(w.value())
            .map(Value::Number)
            .expect("weights are finite"),
    }
}
