//! The maxentropic input process of `<W, L>`.
//!
//! Fix an anchor label `l0`. The support `Y` consists of strings whose first
//! run carries `l0` and whose later runs avoid it; each has at least two runs.
//! Concatenations of elements of `Y` are valid and unambiguous, so IID blocks
//! drawn from `p(y) = exp(-w(y) C)` form an input process. Because
//! `(m-1) G_W(C) = 1`, that PMF factors into independent decisions:
//!
//! * first run: label `l0`, length `v ~ q` with `q(v) = (m-1) exp(-v C)`;
//! * second run: label uniform over the `m-1` other labels, length `~ q`;
//! * then, with probability `(m-2)/(m-1)`, another run whose label is uniform
//!   over the `m-2` labels differing from `l0` and the previous label.

mod entropy;
mod sampler;
mod support;

pub use entropy::{
    entropy_rate_iid, iid_truncation, markov_maxent_rate, RateEstimate, REQUIRED_MASS,
};
pub use support::{
    support_blocks, validate_support, Ambiguity, ClosureViolation, ValidationReport,
    DEFAULT_TUPLE_CAP, WITNESS_LIMIT,
};

use rand::Rng;
use serde::Serialize;

use crate::capacity::{solve_capacity, CapacityResult, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::genfun::eval_gw;
use crate::system::{ConstrainedSystem, Label, Run, RunString};
use crate::weight::Weight;
use sampler::RunLengthSampler;

/// Tolerance on `sum q = 1`.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct MaxentProcess {
    system: ConstrainedSystem,
    capacity: CapacityResult,
    anchor: Label,
    others: Vec<Label>,
    continue_prob: f64,
    lengths: RunLengthSampler,
}

impl MaxentProcess {
    pub fn system(&self) -> &ConstrainedSystem {
        &self.system
    }

    pub fn capacity(&self) -> f64 {
        self.capacity.capacity
    }

    pub fn capacity_result(&self) -> &CapacityResult {
        &self.capacity
    }

    pub fn anchor(&self) -> &Label {
        &self.anchor
    }

    /// Probability that a block gains another run after its second.
    pub fn continue_prob(&self) -> f64 {
        self.continue_prob
    }

    fn m1(&self) -> f64 {
        (self.system.m() - 1) as f64
    }

    /// `q(v) = (m-1) exp(-v C)`.
    pub fn run_length_prob(&self, v: &Weight) -> f64 {
        self.m1() * (-v.value() * self.capacity()).exp()
    }

    fn ln_run_length_prob(&self, v: &Weight) -> f64 {
        self.m1().ln() - v.value() * self.capacity()
    }

    /// `p(y) = exp(-w(y) C)` for blocks of the support, 0 otherwise.
    pub fn block_prob(&self, block: &RunString) -> f64 {
        if !self.in_support(block) {
            return 0.0;
        }
        (-block.total_weight().value() * self.capacity()).exp()
    }

    /// Whether `block` lies in the support `Y`.
    pub fn in_support(&self, block: &RunString) -> bool {
        let runs = block.runs();
        runs.len() >= 2
            && runs[0].label == self.anchor
            && runs[1..].iter().all(|r| r.label != self.anchor)
            && self.system.is_member(block)
    }

    /// Draws one block of `Y`.
    pub fn sample_block<R: Rng + ?Sized>(&self, rng: &mut R) -> RunString {
        self.draw(rng).0
    }

    /// A block and the log of the probability of the decisions that produced it.
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> (RunString, f64) {
        let first = self.lengths.sample(rng);
        let mut log_prob = self.ln_run_length_prob(&first);
        let mut runs = vec![Run {
            label: self.anchor.clone(),
            length: first,
        }];

        let mut prev = rng.gen_range(0..self.others.len());
        let second = self.lengths.sample(rng);
        log_prob += self.ln_run_length_prob(&second) - self.m1().ln();
        runs.push(Run {
            label: self.others[prev].clone(),
            length: second,
        });

        let cp = self.continue_prob;
        while cp > 0.0 && rng.gen::<f64>() < cp {
            // uniform over the others except `prev`
            let mut next = rng.gen_range(0..self.others.len() - 1);
            if next >= prev {
                next += 1;
            }
            prev = next;
            let length = self.lengths.sample(rng);
            log_prob += (cp / (self.m1() - 1.0)).ln() + self.ln_run_length_prob(&length);
            runs.push(Run {
                label: self.others[prev].clone(),
                length,
            });
        }
        log_prob += (1.0 - cp).ln();
        (
            RunString::new(runs).expect("adjacent labels differ"),
            log_prob,
        )
    }

    /// Draws `n` IID blocks and their concatenation.
    pub fn sample_process<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<ProcessSample> {
        if n == 0 {
            return Err(Error::InvalidRunString("need at least one block".into()));
        }
        let mut blocks = Vec::with_capacity(n);
        let mut log_prob = 0.0;
        for _ in 0..n {
            let (b, lp) = self.draw(rng);
            log_prob += lp;
            blocks.push(b);
        }
        let mut concatenated = blocks[0].clone();
        for b in &blocks[1..] {
            concatenated = concatenated.concat(b);
        }
        let total_weight = concatenated.total_weight().value();
        Ok(ProcessSample {
            blocks,
            concatenated,
            total_weight,
            log_prob,
        })
    }

    /// Accumulates `(count, sum -log p, sum w)` over `n` sampled blocks.
    pub fn sample_rate<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> RateAccumulator {
        let mut acc = RateAccumulator::default();
        for _ in 0..n {
            let (b, lp) = self.draw(rng);
            acc.push(-lp, b.total_weight().value());
        }
        acc
    }
}

/// Builds the maxentropic process anchored at `anchor`.
pub fn build_maxent(sys: &ConstrainedSystem, anchor: &str) -> Result<MaxentProcess> {
    let capacity = solve_capacity(sys, DEFAULT_TOL)?;
    build_maxent_with_capacity(sys, anchor, capacity)
}

pub fn build_maxent_with_capacity(
    sys: &ConstrainedSystem,
    anchor: &str,
    capacity: CapacityResult,
) -> Result<MaxentProcess> {
    let anchor = sys.labels().get(anchor)?.clone();
    if capacity.degenerate || capacity.capacity <= 0.0 {
        return Err(Error::Degenerate(
            "the only process is the deterministic alternating string, with entropy rate 0".into(),
        ));
    }
    let c = capacity.capacity;
    let m1 = (sys.m() - 1) as f64;
    let g = eval_gw(sys.runs(), c, 1e-15)?;
    let sum = m1 * g.midpoint();
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::Normalization { sum });
    }
    let others = sys
        .labels()
        .labels()
        .iter()
        .filter(|l| **l != anchor)
        .cloned()
        .collect();
    Ok(MaxentProcess {
        system: sys.clone(),
        capacity,
        anchor,
        others,
        continue_prob: (m1 - 1.0) / m1,
        lengths: RunLengthSampler::new(sys.runs(), c)?,
    })
}

#[derive(Clone, Debug)]
pub struct ProcessSample {
    pub blocks: Vec<RunString>,
    pub concatenated: RunString,
    pub total_weight: f64,
    pub log_prob: f64,
}

/// Running sums for a Monte Carlo entropy-rate estimate. Workers with
/// independent random streams merge their accumulators by addition.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct RateAccumulator {
    pub count: u64,
    pub neg_log_prob: f64,
    pub weight: f64,
    sum_x2: f64,
    sum_w2: f64,
    sum_xw: f64,
    // Neumaier compensation for the two main sums
    comp_x: f64,
    comp_w: f64,
}

/// Monte Carlo rate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RateSummary {
    pub blocks: u64,
    pub rate: f64,
    /// Delta-method standard error of the ratio estimator.
    pub sampling_sigma: f64,
    /// Floating-point floor on the accuracy of the accumulated log-probabilities.
    pub rounding_sigma: f64,
}

impl RateSummary {
    pub fn sigma(&self) -> f64 {
        self.sampling_sigma.hypot(self.rounding_sigma)
    }
}

fn neumaier(sum: &mut f64, comp: &mut f64, x: f64) {
    let t = *sum + x;
    if sum.abs() >= x.abs() {
        *comp += (*sum - t) + x;
    } else {
        *comp += (x - t) + *sum;
    }
    *sum = t;
}

impl RateAccumulator {
    pub fn push(&mut self, neg_log_prob: f64, weight: f64) {
        self.count += 1;
        neumaier(&mut self.neg_log_prob, &mut self.comp_x, neg_log_prob);
        neumaier(&mut self.weight, &mut self.comp_w, weight);
        self.sum_x2 += neg_log_prob * neg_log_prob;
        self.sum_w2 += weight * weight;
        self.sum_xw += neg_log_prob * weight;
    }

    pub fn merge(&mut self, other: &RateAccumulator) {
        self.count += other.count;
        neumaier(&mut self.neg_log_prob, &mut self.comp_x, other.neg_log_prob);
        neumaier(&mut self.weight, &mut self.comp_w, other.weight);
        self.comp_x += other.comp_x;
        self.comp_w += other.comp_w;
        self.sum_x2 += other.sum_x2;
        self.sum_w2 += other.sum_w2;
        self.sum_xw += other.sum_xw;
    }

    pub fn summary(&self) -> RateSummary {
        let n = self.count as f64;
        let x = self.neg_log_prob + self.comp_x;
        let w = self.weight + self.comp_w;
        let rate = x / w;
        let mean_w = w / n;
        // Var(X - R W) from raw moments
        let var = (self.sum_x2 - 2.0 * rate * self.sum_xw + rate * rate * self.sum_w2) / n
            - (x / n - rate * mean_w).powi(2);
        let sampling_sigma = (var.max(0.0) / n).sqrt() / mean_w;
        RateSummary {
            blocks: self.count,
            rate,
            sampling_sigma,
            rounding_sigma: 64.0 * f64::EPSILON * rate,
        }
    }
}
