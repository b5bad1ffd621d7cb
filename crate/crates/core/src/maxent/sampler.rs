//! Rejection-free sampling of run lengths from `q(v) = (m-1) exp(-v C)`.

use rand::Rng;

use crate::error::Result;
use crate::genfun::{eval_gw, tail_after};
use crate::system::{arithmetic_member, Family, RunLengthSet};
use crate::weight::Weight;

/// Tables stop once the unlisted mass of a component falls below this.
const TABLE_TAIL: f64 = 1e-18;

#[derive(Clone, Debug)]
enum Part {
    /// Inverse CDF over listed members; members past the table are generated on demand.
    Table {
        set: RunLengthSet,
        weights: Vec<Weight>,
        cdf: Vec<f64>,
        total: f64,
    },
    /// `k ~ Geometric(1 - x)` with `x = exp(-step C)`, giving `first + k step`.
    Arithmetic {
        first: Weight,
        step: Weight,
        log_x: f64,
    },
}

#[derive(Clone, Debug)]
pub(crate) struct RunLengthSampler {
    capacity: f64,
    /// Cumulative mixture weights of the parts.
    mix: Vec<f64>,
    parts: Vec<Part>,
}

impl RunLengthSampler {
    pub(crate) fn new(runs: &RunLengthSet, capacity: f64) -> Result<Self> {
        let components: Vec<&RunLengthSet> = match runs.family() {
            Family::Union(parts) => parts.iter().collect(),
            _ => vec![runs],
        };
        let mut mix = Vec::with_capacity(components.len());
        let mut parts = Vec::with_capacity(components.len());
        let mut acc = 0.0;
        for comp in components {
            acc += eval_gw(comp, capacity, 1e-15)?.midpoint();
            mix.push(acc);
            parts.push(Part::new(comp, capacity));
        }
        for m in &mut mix {
            *m /= acc;
        }
        Ok(Self {
            capacity,
            mix,
            parts,
        })
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Weight {
        let part = if self.parts.len() == 1 {
            &self.parts[0]
        } else {
            let u: f64 = rng.gen();
            let idx = self.mix.partition_point(|&c| c <= u);
            &self.parts[idx.min(self.parts.len() - 1)]
        };
        part.sample(rng, self.capacity)
    }
}

impl Part {
    fn new(set: &RunLengthSet, capacity: f64) -> Self {
        if let Family::Arithmetic { first, step } = set.family() {
            return Part::Arithmetic {
                first: first.clone(),
                step: step.clone(),
                log_x: -step.value() * capacity,
            };
        }
        let mut weights = Vec::new();
        let mut cdf = Vec::new();
        let mut acc = 0.0;
        for w in set.members() {
            acc += (-w.value() * capacity).exp();
            cdf.push(acc);
            let v = w.value();
            weights.push(w);
            if set.is_finite() {
                continue;
            }
            if tail_after(set, v, capacity).mass <= TABLE_TAIL * acc {
                break;
            }
        }
        let total = acc
            + if set.is_finite() {
                0.0
            } else {
                tail_after(set, weights.last().expect("nonempty").value(), capacity).mass
            };
        Part::Table {
            set: set.clone(),
            weights,
            cdf,
            total,
        }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R, capacity: f64) -> Weight {
        match self {
            Part::Arithmetic { first, step, log_x } => {
                let u = 1.0 - rng.gen::<f64>();
                let k = (u.ln() / log_x).floor();
                arithmetic_member(first, step, k as u64)
            }
            Part::Table {
                set,
                weights,
                cdf,
                total,
            } => {
                let target = rng.gen::<f64>() * total;
                let idx = cdf.partition_point(|&c| c <= target);
                if idx < weights.len() {
                    return weights[idx].clone();
                }
                // beyond the table: continue the cumulative sum over later members
                let mut acc = *cdf.last().expect("nonempty");
                let mut last = weights.last().expect("nonempty").clone();
                for w in set.members().skip(weights.len()).take(10_000) {
                    acc += (-w.value() * capacity).exp();
                    last = w;
                    if acc > target {
                        break;
                    }
                }
                last
            }
        }
    }
}
