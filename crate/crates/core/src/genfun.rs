//! Generating functions on the positive real axis with certified truncation bounds.
//!
//! `G_W(s) = sum_{v in W} exp(-v s)` is summed in closed form for explicit
//! and arithmetic families. Geometric families `{a xi^k}` are summed term by
//! term until the omitted tail, bounded by a dominating geometric series
//! (Bernoulli: `xi^j >= 1 + j (xi - 1)`), drops below the tolerance.
//!
//! The system and support generating functions are rational functions of
//! `G_W`, increasing on their domain, so their bounds follow from evaluating
//! at both ends of the interval `[g, g + tail]`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::system::{ConstrainedSystem, Family, RunLengthSet};

pub const DEFAULT_TOL: f64 = 1e-12;
/// Maximum number of explicitly summed terms per series.
pub const TERM_CAP: usize = 1_000_000;
/// Points with `(m-1) G_W(s) >= 1 - POLE_MARGIN` are treated as at or beyond the pole.
pub const POLE_MARGIN: f64 = 1e-12;

/// A truncated series: the exact sum lies in `[value, value + tail_bound]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_bound: f64,
    pub terms_used: usize,
}

impl SeriesValue {
    fn exact(value: f64, terms_used: usize) -> Self {
        Self {
            value,
            tail_bound: 0.0,
            terms_used,
        }
    }

    pub fn upper(&self) -> f64 {
        self.value + self.tail_bound
    }

    pub fn midpoint(&self) -> f64 {
        self.value + 0.5 * self.tail_bound
    }

    fn plus(self, other: SeriesValue) -> SeriesValue {
        SeriesValue {
            value: self.value + other.value,
            tail_bound: self.tail_bound + other.tail_bound,
            terms_used: self.terms_used + other.terms_used,
        }
    }
}

/// Bounds on the part of `sum exp(-v s)` and `sum v exp(-v s)` contributed by members above a cutoff.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailBound {
    pub mass: f64,
    pub moment: f64,
}

impl std::ops::Add for TailBound {
    type Output = TailBound;

    fn add(self, rhs: TailBound) -> TailBound {
        TailBound {
            mass: self.mass + rhs.mass,
            moment: self.moment + rhs.moment,
        }
    }
}

/// `G_W(s)`.
pub fn eval_gw(w: &RunLengthSet, s: f64, tol: f64) -> Result<SeriesValue> {
    eval_series(w, s, tol, Kind::Mass)
}

/// `G_W'(s) = -sum v exp(-v s)`. The returned value is the lower end of the
/// enclosing interval, so `[value, value + tail_bound]` still holds.
pub fn eval_gw_derivative(w: &RunLengthSet, s: f64, tol: f64) -> Result<SeriesValue> {
    let moment = eval_series(w, s, tol, Kind::Moment)?;
    Ok(SeriesValue {
        value: -moment.upper(),
        ..moment
    })
}

/// `G_<W,L>(s) = m g / (1 - (m-1) g)` with `g = G_W(s)`.
pub fn eval_system_gf(sys: &ConstrainedSystem, s: f64, tol: f64) -> Result<SeriesValue> {
    let m = sys.m() as f64;
    let pole = m - 1.0;
    propagate(
        sys.runs(),
        s,
        tol,
        pole,
        |g| m * g / (1.0 - pole * g),
        |g| m / (1.0 - pole * g).powi(2),
    )
}

/// `G_Y(s) = g (m-1) g / (1 - (m-2) g)`: blocks whose first run carries the
/// anchor label and whose later runs avoid it.
pub fn eval_support_gf(sys: &ConstrainedSystem, s: f64, tol: f64) -> Result<SeriesValue> {
    let m = sys.m() as f64;
    let pole = m - 2.0;
    propagate(
        sys.runs(),
        s,
        tol,
        pole,
        |g| g * (m - 1.0) * g / (1.0 - pole * g),
        |g| (m - 1.0) * g * (2.0 - pole * g) / (1.0 - pole * g).powi(2),
    )
}

/// Evaluates `f(G_W(s))` for an increasing `f` with a pole at `pole * g = 1`.
fn propagate(
    w: &RunLengthSet,
    s: f64,
    tol: f64,
    pole: f64,
    f: impl Fn(f64) -> f64,
    fprime: impl Fn(f64) -> f64,
) -> Result<SeriesValue> {
    check_tol(tol)?;
    let mut inner_tol = tol;
    // best certified enclosure so far, returned when rounding keeps `tol` out of reach
    let mut best: Option<SeriesValue> = None;
    for _ in 0..6 {
        let g = eval_gw(w, s, inner_tol)?;
        if pole * g.value >= 1.0 - POLE_MARGIN {
            return Err(Error::Diverges {
                s,
                detail: format!(
                    "at or beyond the abscissa: {pole} * G_W(s) = {} >= 1",
                    pole * g.value
                ),
            });
        }
        if pole * g.upper() >= 1.0 - POLE_MARGIN {
            inner_tol = (1.0 - pole * g.value) / pole.max(1.0) * 1e-3;
            continue;
        }
        let value = f(g.value);
        let tail = f(g.upper()) - value;
        let out = SeriesValue {
            value,
            tail_bound: tail.max(0.0),
            terms_used: g.terms_used,
        };
        if out.tail_bound <= tol || g.tail_bound == 0.0 {
            return Ok(out);
        }
        if best.is_none_or(|b| out.tail_bound < b.tail_bound) {
            best = Some(out);
        }
        inner_tol = 0.5 * tol / fprime(g.upper());
    }
    best.ok_or_else(|| Error::Diverges {
        s,
        detail: "too close to the abscissa to bound the truncation error".into(),
    })
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Mass,
    Moment,
}

fn check_tol(tol: f64) -> Result<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidWeight(format!(
            "tolerance must be positive, got {tol}"
        )))
    }
}

fn eval_series(w: &RunLengthSet, s: f64, tol: f64, kind: Kind) -> Result<SeriesValue> {
    check_tol(tol)?;
    if !s.is_finite() {
        return Err(Error::Diverges {
            s,
            detail: "argument is not finite".into(),
        });
    }
    if !w.is_finite() && s <= 0.0 {
        return Err(Error::Diverges {
            s,
            detail: "infinite run-length sets converge only for s > 0".into(),
        });
    }
    let out = component(w, s, tol, kind)?;
    if !out.value.is_finite() {
        return Err(Error::Diverges {
            s,
            detail: "terms overflow".into(),
        });
    }
    Ok(out)
}

fn term(v: f64, s: f64, kind: Kind) -> f64 {
    match kind {
        Kind::Mass => (-v * s).exp(),
        Kind::Moment => v * (-v * s).exp(),
    }
}

fn component(w: &RunLengthSet, s: f64, tol: f64, kind: Kind) -> Result<SeriesValue> {
    match w.family() {
        Family::Explicit(ws) => Ok(SeriesValue::exact(
            ws.iter().map(|v| term(v.value(), s, kind)).sum(),
            ws.len(),
        )),
        Family::Arithmetic { first, step } => {
            let t = arithmetic_tail(first.value(), step.value(), s);
            Ok(SeriesValue::exact(
                match kind {
                    Kind::Mass => t.mass,
                    Kind::Moment => t.moment,
                },
                0,
            ))
        }
        Family::Geometric { first, ratio } => {
            let (a, xi) = (first.value(), ratio.value());
            let mut sum = 0.0;
            let mut k = 0;
            loop {
                let v = a * xi.powi(k as i32);
                sum += term(v, s, kind);
                k += 1;
                let tail = geometric_tail(a * xi.powi(k as i32), xi, s);
                let tail = match kind {
                    Kind::Mass => tail.mass,
                    Kind::Moment => tail.moment,
                };
                if tail <= tol {
                    // plus the rounding of k floating-point additions
                    let rounding = k as f64 * f64::EPSILON * sum;
                    return Ok(SeriesValue {
                        value: sum,
                        tail_bound: tail + rounding,
                        terms_used: k,
                    });
                }
                if k >= TERM_CAP {
                    return Err(Error::IterationCap { tol, cap: TERM_CAP });
                }
            }
        }
        Family::Union(parts) => {
            let part_tol = tol / parts.len() as f64;
            parts
                .iter()
                .map(|p| component(p, s, part_tol, kind))
                .try_fold(SeriesValue::exact(0.0, 0), |acc, p| Ok(acc.plus(p?)))
        }
    }
}

/// Exact sums over `{v0 + k d : k >= 0}`.
fn arithmetic_tail(v0: f64, d: f64, s: f64) -> TailBound {
    let x = (-d * s).exp();
    let one_minus = -(-d * s).exp_m1();
    let lead = (-v0 * s).exp();
    TailBound {
        mass: lead / one_minus,
        moment: lead * (v0 / one_minus + d * x / (one_minus * one_minus)),
    }
}

/// Dominating bounds over `{A xi^j : j >= 0}` via `A xi^j >= A + j A (xi - 1)`.
/// The moment bound needs `v exp(-v s)` decreasing, i.e. `A s >= 1`.
fn geometric_tail(first_omitted: f64, xi: f64, s: f64) -> TailBound {
    let big_a = first_omitted;
    let big_b = big_a * (xi - 1.0);
    let r = (-s * big_b).exp();
    let one_minus = -(-s * big_b).exp_m1();
    let lead = (-s * big_a).exp();
    let mass = lead / one_minus;
    let moment = if s * big_a >= 1.0 {
        lead * (big_a / one_minus + big_b * r / (one_minus * one_minus))
    } else {
        f64::INFINITY
    };
    TailBound { mass, moment }
}

/// Bounds over all members strictly greater than `cutoff`, evaluated at `s > 0`
/// (any `s` for finite sets).
pub fn tail_after(w: &RunLengthSet, cutoff: f64, s: f64) -> TailBound {
    match w.family() {
        Family::Explicit(ws) => ws
            .iter()
            .filter(|v| v.value() > cutoff)
            .map(|v| TailBound {
                mass: term(v.value(), s, Kind::Mass),
                moment: term(v.value(), s, Kind::Moment),
            })
            .fold(
                TailBound {
                    mass: 0.0,
                    moment: 0.0,
                },
                |a, b| a + b,
            ),
        Family::Arithmetic { first, step } => {
            let (a, d) = (first.value(), step.value());
            let member = |k: f64| a + k * d;
            let mut k = if cutoff < a {
                0.0
            } else {
                ((cutoff - a) / d).floor() + 1.0
            };
            while k > 0.0 && member(k - 1.0) > cutoff {
                k -= 1.0;
            }
            while member(k) <= cutoff {
                k += 1.0;
            }
            arithmetic_tail(member(k), d, s)
        }
        Family::Geometric { first, ratio } => {
            let (a, xi) = (first.value(), ratio.value());
            let member = |k: i32| a * xi.powi(k);
            let mut k = if cutoff < a {
                0
            } else {
                ((cutoff / a).ln() / xi.ln()).floor() as i32 + 1
            };
            while k > 0 && member(k - 1) > cutoff {
                k -= 1;
            }
            while member(k) <= cutoff {
                k += 1;
            }
            geometric_tail(member(k), xi, s)
        }
        Family::Union(parts) => parts.iter().map(|p| tail_after(p, cutoff, s)).fold(
            TailBound {
                mass: 0.0,
                moment: 0.0,
            },
            |a, b| a + b,
        ),
    }
}
