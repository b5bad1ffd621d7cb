//! Support blocks and a brute-force check of the input-process conditions.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::system::{ConstrainedSystem, Label, Run, RunString};

/// Witnesses kept per violation kind; counts are always complete.
pub const WITNESS_LIMIT: usize = 100;
pub const DEFAULT_TUPLE_CAP: usize = 1_000_000;

/// Every support block (anchor first, anchor never again, at least two runs)
/// of total weight at most `max_weight`, ordered by weight then lexicographically.
pub fn support_blocks(
    sys: &ConstrainedSystem,
    anchor: &str,
    max_weight: f64,
    cap: usize,
) -> Result<Vec<RunString>> {
    let anchor = sys.labels().get(anchor)?.clone();
    let others: Vec<Label> = sys
        .labels()
        .labels()
        .iter()
        .filter(|l| **l != anchor)
        .cloned()
        .collect();
    let lengths = sys.runs().members_up_to(max_weight);
    let mut out = Vec::new();
    let mut stack: Vec<(Vec<Run>, f64)> = lengths
        .iter()
        .map(|v| (vec![Run::new(anchor.clone(), v.clone())], v.value()))
        .collect();
    while let Some((runs, w)) = stack.pop() {
        let prev = &runs[runs.len() - 1].label;
        for label in others.iter().filter(|l| *l != prev) {
            for v in lengths.iter().take_while(|v| w + v.value() <= max_weight) {
                let mut next = runs.clone();
                next.push(Run::new(label.clone(), v.clone()));
                out.push(RunString::new(next.clone()).expect("labels alternate"));
                if out.len() > cap {
                    return Err(Error::SizeLimit {
                        what: "support blocks".into(),
                        limit: cap,
                    });
                }
                stack.push((next, w + v.value()));
            }
        }
    }
    out.sort_by(|a, b| {
        a.total_weight()
            .cmp(&b.total_weight())
            .then_with(|| a.to_string().cmp(&b.to_string()))
    });
    Ok(out)
}

/// A concatenation that leaves the system.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosureViolation {
    /// Indices into the candidate list.
    pub tuple: Vec<usize>,
    pub string: String,
    /// The first run whose label or length is not allowed.
    pub offending_run: String,
}

/// Two distinct tuples with the same concatenation.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Ambiguity {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
    pub string: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub depth: usize,
    pub candidates: usize,
    pub tuples_checked: usize,
    pub closure_violations: usize,
    pub ambiguities: usize,
    pub closure_witnesses: Vec<ClosureViolation>,
    pub ambiguity_witnesses: Vec<Ambiguity>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.closure_violations == 0 && self.ambiguities == 0
    }
}

/// Concatenates every tuple of 1 to `depth` candidates, checking that each
/// result belongs to `sys` and that no string arises from two different tuples.
pub fn validate_support(
    candidate: &[RunString],
    sys: &ConstrainedSystem,
    depth: usize,
    cap: usize,
) -> Result<ValidationReport> {
    if candidate.is_empty() {
        return Err(Error::InvalidRunString("empty candidate support".into()));
    }
    if depth < 2 {
        return Err(Error::Parse(format!(
            "depth must be at least 2, got {depth}"
        )));
    }
    let n = candidate.len();
    let mut total = 0usize;
    let mut level = 1usize;
    for _ in 0..depth {
        level = level
            .checked_mul(n)
            .filter(|&l| l <= cap)
            .ok_or(Error::SizeLimit {
                what: "candidate tuples".into(),
                limit: cap,
            })?;
        total += level;
        if total > cap {
            return Err(Error::SizeLimit {
                what: "candidate tuples".into(),
                limit: cap,
            });
        }
    }

    let mut report = ValidationReport {
        depth,
        candidates: n,
        tuples_checked: 0,
        closure_violations: 0,
        ambiguities: 0,
        closure_witnesses: Vec::new(),
        ambiguity_witnesses: Vec::new(),
    };
    let mut seen: HashMap<RunString, Vec<usize>> = HashMap::new();
    let mut frontier: Vec<(Vec<usize>, RunString)> = candidate
        .iter()
        .enumerate()
        .map(|(i, c)| (vec![i], c.clone()))
        .collect();
    for k in 1..=depth {
        for (tuple, string) in &frontier {
            report.tuples_checked += 1;
            check_member(sys, tuple, string, &mut report);
            match seen.get(string) {
                Some(first) => {
                    report.ambiguities += 1;
                    if report.ambiguity_witnesses.len() < WITNESS_LIMIT {
                        report.ambiguity_witnesses.push(Ambiguity {
                            first: first.clone(),
                            second: tuple.clone(),
                            string: string.to_string(),
                        });
                    }
                }
                None => {
                    seen.insert(string.clone(), tuple.clone());
                }
            }
        }
        if k == depth {
            break;
        }
        frontier = frontier
            .iter()
            .flat_map(|(tuple, string)| {
                candidate.iter().enumerate().map(move |(i, c)| {
                    let mut t = tuple.clone();
                    t.push(i);
                    (t, string.concat(c))
                })
            })
            .collect();
    }
    Ok(report)
}

fn check_member(
    sys: &ConstrainedSystem,
    tuple: &[usize],
    s: &RunString,
    report: &mut ValidationReport,
) {
    let bad = s
        .runs()
        .iter()
        .find(|r| !sys.labels().contains(&r.label) || !sys.runs().contains(&r.length));
    if let Some(r) = bad {
        report.closure_violations += 1;
        if report.closure_witnesses.len() < WITNESS_LIMIT {
            report.closure_witnesses.push(ClosureViolation {
                tuple: tuple.to_vec(),
                string: s.to_string(),
                offending_run: format!("{}:{}", r.label, r.length),
            });
        }
    }
}
