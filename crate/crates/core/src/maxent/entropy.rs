//! Entropy rates of the IID-block and Markov maxentropic processes.

use std::collections::BTreeMap;

use serde::Serialize;

use super::MaxentProcess;
use crate::capacity::{solve_capacity, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::genfun::{eval_gw, eval_gw_derivative, tail_after, TERM_CAP};
use crate::system::ConstrainedSystem;
use crate::weight::Weight;

/// Blocks of weight up to the truncation must carry at least this much mass.
pub const REQUIRED_MASS: f64 = 1.0 - 1e-6;
const MAX_STATES: usize = 2_000_000;

/// An entropy rate with a certified enclosure `[lower, upper]` accounting for truncation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateEstimate {
    pub rate: f64,
    pub lower: f64,
    pub upper: f64,
    /// Probability mass of the enumerated part of the support.
    pub covered_mass: f64,
}

/// Aggregate over a set of prefixes: total probability and `sum p (-ln p)`.
#[derive(Clone, Copy, Debug, Default)]
struct Aggregate {
    mass: f64,
    entropy: f64,
}

impl Aggregate {
    /// Applies a decision of total probability `prob` whose options contribute
    /// `sum_o p_o (-ln p_o) = info`.
    fn then(self, prob: f64, info: f64) -> Self {
        Aggregate {
            mass: self.mass * prob,
            entropy: self.entropy * prob + self.mass * info,
        }
    }

    fn absorb(&mut self, other: Aggregate) {
        self.mass += other.mass;
        self.entropy += other.entropy;
    }
}

fn plogp(p: f64) -> f64 {
    if p > 0.0 {
        -p * p.ln()
    } else {
        0.0
    }
}

/// `H(Y_1) / E[w(Y_1)]` summed over every support block of weight at most `truncation`.
///
/// Blocks are grouped by total weight and built run by run, so the
/// computation is linear in the number of distinct block weights rather
/// than in the number of blocks.
pub fn entropy_rate_iid(proc: &MaxentProcess, truncation: f64) -> Result<RateEstimate> {
    let c = proc.capacity();
    let m1 = proc.m1();
    let cp = proc.continue_prob();
    let lengths: Vec<(Weight, f64)> = proc
        .system()
        .runs()
        .members_up_to(truncation)
        .into_iter()
        .map(|w| {
            let q = proc.run_length_prob(&w);
            (w, q)
        })
        .collect();

    // open blocks (two or more runs) keyed by weight, awaiting the stop/continue decision
    let mut open: BTreeMap<Weight, Aggregate> = BTreeMap::new();
    for (v1, q1) in &lengths {
        let first = Aggregate {
            mass: 1.0,
            entropy: 0.0,
        }
        .then(*q1, plogp(*q1))
        .then(1.0, m1.ln());
        for (v2, q2) in lengths
            .iter()
            .take_while(|(v2, _)| v1.value() + v2.value() <= truncation)
        {
            open.entry(v1 + v2)
                .or_default()
                .absorb(first.then(*q2, plogp(*q2)));
        }
    }

    let stop_info = plogp(1.0 - cp);
    let continue_info = if cp > 0.0 {
        -cp * (cp / (m1 - 1.0)).ln()
    } else {
        0.0
    };
    let mut done = Aggregate::default();
    let mut mean_weight = 0.0;
    let mut processed = 0usize;
    while let Some((w, agg)) = open.pop_first() {
        processed += 1;
        if processed + open.len() > MAX_STATES {
            return Err(Error::SizeLimit {
                what: "distinct block weights".into(),
                limit: MAX_STATES,
            });
        }
        let finished = agg.then(1.0 - cp, stop_info);
        done.absorb(finished);
        mean_weight += finished.mass * w.value();
        if cp == 0.0 {
            continue;
        }
        let cont = agg.then(cp, continue_info);
        for (v, q) in lengths
            .iter()
            .take_while(|(v, _)| w.value() + v.value() <= truncation)
        {
            open.entry(&w + v)
                .or_default()
                .absorb(cont.then(*q, plogp(*q)));
        }
    }

    if done.mass < REQUIRED_MASS {
        return Err(Error::TruncationInsufficient {
            covered: done.mass,
            required: REQUIRED_MASS,
        });
    }
    let tail_weight = support_weight_tail(proc, truncation)?;
    // -ln p(y) = C w(y) on the support, so the entropy tail is C times the weight tail
    let tail_entropy = c * tail_weight;
    Ok(RateEstimate {
        rate: done.entropy / mean_weight,
        lower: done.entropy / (mean_weight + tail_weight),
        upper: (done.entropy + tail_entropy) / mean_weight,
        covered_mass: done.mass,
    })
}

/// Chernoff bound on `sum_{w(y) > T} w(y) exp(-w(y) C)`:
/// at most `exp(-theta T) |G_Y'(C - theta)|` for any admissible `theta > 0`.
fn support_weight_tail(proc: &MaxentProcess, truncation: f64) -> Result<f64> {
    let (s, g, dg) = chernoff_point(proc)?;
    let theta = proc.capacity() - s;
    let m = proc.system().m() as f64;
    let pole = m - 2.0;
    let dh = (m - 1.0) * g * (2.0 - pole * g) / (1.0 - pole * g).powi(2);
    Ok((-theta * truncation).exp() * dh * dg)
}

/// Finds `s = C - theta` where `G_Y` still converges comfortably; returns
/// `(s, upper bound on G_W(s), upper bound on |G_W'(s)|)`.
fn chernoff_point(proc: &MaxentProcess) -> Result<(f64, f64, f64)> {
    let c = proc.capacity();
    let runs = proc.system().runs();
    let pole = (proc.system().m() - 2) as f64;
    let mut theta = 0.5 * c;
    for _ in 0..60 {
        let s = c - theta;
        let g = eval_gw(runs, s, 1e-12)?.upper();
        if pole * g < 0.9 {
            let dg = -eval_gw_derivative(runs, s, 1e-12)?.value;
            return Ok((s, g, dg));
        }
        theta *= 0.5;
    }
    Err(Error::Diverges {
        s: c,
        detail: "no convergent point below the capacity for the support tail bound".into(),
    })
}

/// Smallest truncation weight whose Chernoff bound on the omitted support
/// mass is below `1 - required_mass`.
pub fn iid_truncation(proc: &MaxentProcess, required_mass: f64) -> Result<f64> {
    let (s, g, _) = chernoff_point(proc)?;
    let theta = proc.capacity() - s;
    let m = proc.system().m() as f64;
    let gy = (m - 1.0) * g * g / (1.0 - (m - 2.0) * g);
    let missing = (1.0 - required_mass).max(f64::MIN_POSITIVE);
    Ok(((gy / missing).ln() / theta).max(2.0 * proc.system().runs().min_weight().value()))
}

/// Entropy rate of the Markov process whose run lengths are IID `q` and
/// whose labels change uniformly among the other `m-1` labels at every run:
/// `(H(q) + ln(m-1)) / E_q[v]`.
pub fn markov_maxent_rate(sys: &ConstrainedSystem) -> Result<RateEstimate> {
    let cap = solve_capacity(sys, DEFAULT_TOL)?;
    if cap.degenerate || cap.capacity <= 0.0 {
        return Err(Error::Degenerate(
            "the Markov maxentropic process needs positive capacity".into(),
        ));
    }
    let c = cap.capacity;
    let m1 = (sys.m() - 1) as f64;
    let runs = sys.runs();
    let (mut entropy, mut mean, mut mass) = (0.0, 0.0, 0.0);
    let mut tail = None;
    for (i, w) in runs.members().enumerate() {
        let v = w.value();
        let q = m1 * (-v * c).exp();
        entropy += plogp(q);
        mean += v * q;
        mass += q;
        if runs.is_finite() {
            continue;
        }
        let t = tail_after(runs, v, c);
        if t.moment.is_finite() && m1 * t.moment <= 1e-16 * mean {
            tail = Some(t);
            break;
        }
        if i >= TERM_CAP {
            return Err(Error::IterationCap {
                tol: 1e-16,
                cap: TERM_CAP,
            });
        }
    }
    let (tail_mean, tail_entropy) = match tail {
        Some(t) => (m1 * t.moment, m1 * c * t.moment),
        None => (0.0, 0.0),
    };
    let label = m1.ln();
    Ok(RateEstimate {
        rate: (entropy + label) / mean,
        lower: (entropy + label) / (mean + tail_mean),
        upper: (entropy + tail_entropy + label) / mean,
        covered_mass: mass,
    })
}
