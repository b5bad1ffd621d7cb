//! Combinatorial capacity: the root of `(m-1) G_W(s) = 1`.
//!
//! `F(s) = (m-1) G_W(s) - 1` is continuous and strictly decreasing wherever
//! `G_W` converges. The root is bracketed, narrowed by bisection and then
//! polished with a few Newton steps that must stay inside the bracket.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::genfun::{eval_gw, eval_gw_derivative, SeriesValue};
use crate::system::ConstrainedSystem;

pub const DEFAULT_TOL: f64 = 1e-10;
const MAX_NEWTON_STEPS: usize = 5;
const MAX_BRACKET_STEPS: usize = 1100;

/// Capacity in nats per unit weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CapacityResult {
    pub capacity: f64,
    /// Final bracket `[lo, hi]` with `F(lo) > 0 >= F(hi)`.
    pub bracket: [f64; 2],
    /// `|(m-1) G_W(C) - 1|`.
    pub residual: f64,
    /// Bound the residual is guaranteed to respect: `|F'(C)| (hi - lo)` plus series error.
    pub residual_tolerance: f64,
    /// `m = 2` and `|W| = 1`: only the two alternating strings exist and the root is 0.
    pub degenerate: bool,
}

impl CapacityResult {
    pub fn bits(&self) -> f64 {
        self.capacity / std::f64::consts::LN_2
    }
}

struct Residual<'a> {
    sys: &'a ConstrainedSystem,
    series_tol: f64,
}

impl Residual<'_> {
    fn m1(&self) -> f64 {
        (self.sys.m() - 1) as f64
    }

    fn at(&self, s: f64) -> Result<SeriesValue> {
        let g = eval_gw(self.sys.runs(), s, self.series_tol)?;
        let m1 = self.m1();
        Ok(SeriesValue {
            value: m1 * g.value - 1.0,
            tail_bound: m1 * g.tail_bound,
            terms_used: g.terms_used,
        })
    }

    fn positive(&self, s: f64) -> Result<bool> {
        Ok(self.at(s)?.midpoint() > 0.0)
    }

    fn slope(&self, s: f64) -> Result<f64> {
        Ok(self.m1() * eval_gw_derivative(self.sys.runs(), s, self.series_tol)?.midpoint())
    }
}

/// Solves `(m-1) G_W(s) = 1` to bracket width `tol`.
pub fn solve_capacity(sys: &ConstrainedSystem, tol: f64) -> Result<CapacityResult> {
    if !(tol.is_finite() && tol > 0.0) {
        return Err(Error::NoBracket(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    let f = Residual {
        sys,
        series_tol: tol / 100.0,
    };
    let runs = sys.runs();

    let mut lo = match runs.len() {
        Some(n) => {
            // F(0) = (m-1)|W| - 1 is an integer
            if (sys.m() - 1) * n == 1 {
                return Ok(CapacityResult {
                    capacity: 0.0,
                    bracket: [0.0, 0.0],
                    residual: 0.0,
                    residual_tolerance: 0.0,
                    degenerate: true,
                });
            }
            0.0
        }
        None => {
            let mut lo = 1.0;
            let mut steps = 0;
            while !f.positive(lo)? {
                lo *= 0.5;
                steps += 1;
                if steps > MAX_BRACKET_STEPS || lo == 0.0 {
                    return Err(Error::NoBracket(format!(
                        "(m-1) G_W(s) stays below 1 down to s = {lo:e}"
                    )));
                }
            }
            lo
        }
    };

    let mut hi = lo.max(1.0);
    let mut steps = 0;
    while f.positive(hi)? {
        lo = hi;
        hi *= 2.0;
        steps += 1;
        if steps > MAX_BRACKET_STEPS || !hi.is_finite() {
            return Err(Error::NoBracket("(m-1) G_W(s) stays above 1".into()));
        }
    }

    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f.positive(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let mut c = 0.5 * (lo + hi);
    for _ in 0..MAX_NEWTON_STEPS {
        let value = f.at(c)?.midpoint();
        let slope = f.slope(c)?;
        if value == 0.0 || slope >= 0.0 {
            break;
        }
        let next = c - value / slope;
        if !(lo..=hi).contains(&next) || next == c {
            break;
        }
        c = next;
    }

    let residual = f.at(c)?;
    let slope = f.slope(c)?.abs();
    Ok(CapacityResult {
        capacity: c,
        bracket: [lo, hi],
        residual: residual.midpoint().abs(),
        residual_tolerance: slope * (hi - lo) + residual.tail_bound + f.m1() * f.series_tol,
        degenerate: false,
    })
}

/// `(m-1) G_W(c) - 1` with a certified sign: positive means `c` is below the
/// capacity, negative means above. Errors when the truncation interval
/// straddles zero.
pub fn capacity_residual_certificate(sys: &ConstrainedSystem, c: f64, tol: f64) -> Result<f64> {
    let f = Residual {
        sys,
        series_tol: tol,
    };
    let r = f.at(c)?;
    let (lo, hi) = (r.value, r.upper());
    if lo >= 0.0 {
        Ok(lo)
    } else if hi <= 0.0 {
        Ok(hi)
    } else {
        Err(Error::Indeterminate { c, lo, hi })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{LabelSet, RunLengthSet};
    use crate::weight::Weight;
    use std::f64::consts::LN_2;

    fn w(n: u64) -> Weight {
        Weight::integer(n)
    }

    fn sys(runs: RunLengthSet, m: usize) -> ConstrainedSystem {
        ConstrainedSystem::new(runs, LabelSet::numbered(m).unwrap())
    }

    fn golden_log() -> f64 {
        ((1.0 + 5f64.sqrt()) / 2.0).ln()
    }

    fn solve(s: &ConstrainedSystem) -> CapacityResult {
        solve_capacity(s, DEFAULT_TOL).unwrap()
    }

    #[test]
    fn closed_form_capacities() {
        let degenerate = solve(&sys(RunLengthSet::explicit(vec![w(1)]).unwrap(), 2));
        assert!(degenerate.degenerate);
        assert_eq!(degenerate.capacity, 0.0);

        let binary = solve(&sys(RunLengthSet::naturals(), 2));
        assert!((binary.capacity - LN_2).abs() < 1e-10);
        assert!(!binary.degenerate);

        let rll = solve(&sys(RunLengthSet::range(2).unwrap(), 2));
        assert!((rll.capacity - golden_log()).abs() < 1e-10);
        assert!((rll.capacity - 0.481_211_825_1).abs() < 1e-10);

        let ternary = solve(&sys(RunLengthSet::explicit(vec![w(1)]).unwrap(), 3));
        assert!((ternary.capacity - LN_2).abs() < 1e-10);
    }

    #[test]
    fn result_invariants() {
        let systems = [
            sys(RunLengthSet::range(2).unwrap(), 2),
            sys(RunLengthSet::naturals(), 4),
            sys(RunLengthSet::geometric(w(2), w(2)).unwrap(), 2),
            sys(RunLengthSet::explicit(vec![w(3), Weight::pi()]).unwrap(), 3),
        ];
        for s in &systems {
            let r = solve(s);
            assert!(r.bracket[1] - r.bracket[0] <= DEFAULT_TOL);
            assert!(r.bracket[0] <= r.capacity && r.capacity <= r.bracket[1]);
            assert!(r.residual <= r.residual_tolerance, "{s}: {r:?}");
            assert!(r.capacity > 0.0);
        }
    }

    #[test]
    fn asynchronous_binary_root() {
        let s = sys(RunLengthSet::geometric(w(2), w(2)).unwrap(), 2);
        let r = solve(&s);
        let g: f64 = (1..60).map(|k| (-(2f64.powi(k)) * r.capacity).exp()).sum();
        assert!((g - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sign_certificate_around_root() {
        let systems = [
            sys(RunLengthSet::range(2).unwrap(), 2),
            sys(RunLengthSet::geometric(w(2), w(2)).unwrap(), 2),
            sys(RunLengthSet::naturals(), 3),
        ];
        for s in &systems {
            let c = solve(s).capacity;
            let below = capacity_residual_certificate(s, c - 10.0 * DEFAULT_TOL, 1e-14).unwrap();
            let above = capacity_residual_certificate(s, c + 10.0 * DEFAULT_TOL, 1e-14).unwrap();
            assert!(below > 0.0 && above < 0.0, "{s}");
        }
    }

    #[test]
    fn residual_certificate_examples() {
        let degenerate = sys(RunLengthSet::explicit(vec![w(1)]).unwrap(), 2);
        assert_eq!(
            capacity_residual_certificate(&degenerate, 0.0, 1e-12).unwrap(),
            0.0
        );
        let binary = sys(RunLengthSet::naturals(), 2);
        assert!(
            capacity_residual_certificate(&binary, LN_2, 1e-12)
                .unwrap()
                .abs()
                < 1e-12
        );
        let rll = sys(RunLengthSet::range(2).unwrap(), 2);
        let r = capacity_residual_certificate(&rll, 0.4, 1e-12).unwrap();
        let expected = (-0.4f64).exp() + (-0.8f64).exp() - 1.0;
        assert!(r > 0.0 && (r - expected).abs() < 1e-15);
    }

    #[test]
    fn residual_certificate_indeterminate_with_loose_tolerance() {
        let s = sys(RunLengthSet::geometric(w(2), w(2)).unwrap(), 2);
        let c = solve(&s).capacity;
        assert!(matches!(
            capacity_residual_certificate(&s, c, 1e-3),
            Err(Error::Indeterminate { .. })
        ));
    }

    #[test]
    fn scaling_law() {
        let bases = [
            sys(RunLengthSet::range(3).unwrap(), 2),
            sys(RunLengthSet::naturals(), 3),
            sys(RunLengthSet::geometric(w(2), w(2)).unwrap(), 2),
        ];
        for base in &bases {
            let c = solve(base).capacity;
            for alpha in [w(2), Weight::ratio(1, 3).unwrap()] {
                let scaled =
                    ConstrainedSystem::new(base.runs().scaled(&alpha), base.labels().clone());
                let cs = solve(&scaled).capacity;
                assert!(
                    (cs - c / alpha.value()).abs() < 1e-9,
                    "{base} alpha {alpha}"
                );
            }
        }
    }

    #[test]
    fn monotone_in_label_count_and_weights() {
        let mut prev = 0.0;
        for m in 2..7 {
            let c = solve(&sys(RunLengthSet::range(3).unwrap(), m)).capacity;
            assert!(c > prev);
            prev = c;
        }
        let small = solve(&sys(RunLengthSet::explicit(vec![w(2), w(3)]).unwrap(), 2)).capacity;
        let larger = solve(&sys(
            RunLengthSet::explicit(vec![w(2), w(3), w(7)]).unwrap(),
            2,
        ))
        .capacity;
        assert!(larger > small);
    }

    #[test]
    fn rejects_bad_tolerance() {
        assert!(solve_capacity(&sys(RunLengthSet::naturals(), 2), 0.0).is_err());
    }
}
