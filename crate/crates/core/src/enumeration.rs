//! Exact string counts on a rational weight grid.
//!
//! With `T(n)` the number of run-length compositions of weight `n u`, each
//! weighted by `(m-1)^(runs-1)` label choices after the free first label,
//!
//! ```text
//! T(n) = [n u in W] + (m-1) * sum_{v in W, v < n u} T(n - v/u)
//! N(n) = m T(n)
//! ```
//!
//! All counts are arbitrary-precision integers.

use std::io::Write;

use num_bigint::BigUint;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::system::ConstrainedSystem;
use crate::weight::format_rational;

/// Grid points `u, 2u, ..., T u`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightGrid {
    unit: BigRational,
    max_index: usize,
}

impl WeightGrid {
    pub fn new(unit: BigRational, max_index: usize) -> Result<Self> {
        if !unit.is_positive() {
            return Err(Error::InvalidWeight(format!(
                "grid unit must be positive, got {unit}"
            )));
        }
        Ok(Self { unit, max_index })
    }

    /// Unit grid `1, 2, ..., max_index`.
    pub fn integers(max_index: usize) -> Self {
        Self {
            unit: BigRational::one(),
            max_index,
        }
    }

    /// The coarsest grid `1/lcm(denominators)` covering every weight of the
    /// system up to `max_weight`, with `max_index = floor(max_weight / unit)`.
    pub fn for_system(sys: &ConstrainedSystem, max_weight: &BigRational) -> Result<Self> {
        let bound = max_weight.to_f64().unwrap_or(f64::INFINITY);
        let mut den = num_bigint::BigInt::one();
        for w in sys
            .runs()
            .members()
            .take_while(|w| w.value() <= bound * (1.0 + 1e-12))
        {
            let r = w.as_rational().ok_or_else(|| Error::OffGrid {
                weight: w.to_string(),
                unit: "any rational grid".into(),
            })?;
            if &r <= max_weight {
                den = den.lcm(r.denom());
            }
        }
        let unit = BigRational::new(1.into(), den);
        let max_index = (max_weight / &unit)
            .floor()
            .to_integer()
            .to_usize()
            .ok_or_else(|| Error::SizeLimit {
                what: format!("grid for max weight {max_weight}"),
                limit: usize::MAX,
            })?;
        Self::new(unit, max_index)
    }

    pub fn unit(&self) -> &BigRational {
        &self.unit
    }

    pub fn max_index(&self) -> usize {
        self.max_index
    }

    pub fn weight(&self, n: usize) -> BigRational {
        &self.unit * BigRational::from_integer(n.into())
    }

    pub fn weight_f64(&self, n: usize) -> f64 {
        self.weight(n).to_f64().unwrap_or(f64::NAN)
    }
}

/// `N(n u)` and its running sums for `n = 1..=T`.
#[derive(Clone, Debug, PartialEq)]
pub struct CountTable {
    counts: Vec<BigUint>,
    cumulative: Vec<BigUint>,
}

impl CountTable {
    pub fn max_index(&self) -> usize {
        self.counts.len()
    }

    /// `N(n u)` for `1 <= n <= T`.
    pub fn count(&self, n: usize) -> &BigUint {
        &self.counts[n - 1]
    }

    /// `sum_{i <= n} N(i u)`; zero for `n = 0`.
    pub fn cumulative(&self, n: usize) -> BigUint {
        if n == 0 {
            BigUint::zero()
        } else {
            self.cumulative[n - 1].clone()
        }
    }

    pub fn counts(&self) -> &[BigUint] {
        &self.counts
    }
}

/// Grid indices of the members of `W` up to the grid's largest weight.
fn grid_indices(sys: &ConstrainedSystem, grid: &WeightGrid) -> Result<Vec<usize>> {
    let top = grid.weight(grid.max_index());
    let bound = top.to_f64().unwrap_or(f64::INFINITY) * (1.0 + 1e-12);
    let mut out = Vec::new();
    for w in sys.runs().members().take_while(|w| w.value() <= bound) {
        let off_grid = || Error::OffGrid {
            weight: w.to_string(),
            unit: format!("the grid of step {}", format_rational(grid.unit())),
        };
        let r = w.as_rational().ok_or_else(off_grid)?;
        if r > top {
            continue;
        }
        let q = &r / grid.unit();
        if !q.is_integer() {
            return Err(off_grid());
        }
        out.push(q.to_integer().to_usize().expect("index within grid"));
    }
    Ok(out)
}

/// Exact counts `N(n u)` of strings of each grid weight.
pub fn count_strings(sys: &ConstrainedSystem, grid: &WeightGrid) -> Result<CountTable> {
    let runs = grid_indices(sys, grid)?;
    let t_max = grid.max_index();
    let m = BigUint::from(sys.m());
    let m1 = BigUint::from(sys.m() - 1);
    let mut compositions: Vec<BigUint> = vec![BigUint::zero(); t_max + 1];
    let mut in_w = vec![false; t_max + 1];
    for &v in &runs {
        in_w[v] = true;
    }
    for n in 1..=t_max {
        let mut acc = BigUint::zero();
        for &v in runs.iter().take_while(|&&v| v < n) {
            acc += &compositions[n - v];
        }
        acc *= &m1;
        if in_w[n] {
            acc += 1u32;
        }
        compositions[n] = acc;
    }
    let counts: Vec<BigUint> = compositions[1..].iter().map(|t| t * &m).collect();
    let mut cumulative = Vec::with_capacity(counts.len());
    let mut running = BigUint::zero();
    for c in &counts {
        running += c;
        cumulative.push(running.clone());
    }
    Ok(CountTable { counts, cumulative })
}

/// Natural logarithm of a big integer, accurate for numbers far beyond `f64` range.
pub fn ln_big(x: &BigUint) -> f64 {
    let bits = x.bits();
    if bits <= 1000 {
        return x.to_f64().unwrap_or(f64::INFINITY).ln();
    }
    let shift = bits - 64;
    let top: BigUint = x >> shift;
    top.to_f64().expect("64-bit value").ln() + shift as f64 * std::f64::consts::LN_2
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Estimate {
    pub index: usize,
    pub weight: f64,
    pub estimate: f64,
}

/// `ln(sum_{i <= k} N(v_i)) / v_k` at every grid point carrying strings.
pub fn estimate_capacity_from_counts(table: &CountTable, grid: &WeightGrid) -> Vec<Estimate> {
    (1..=table.max_index())
        .filter(|&n| !table.count(n).is_zero())
        .map(|n| {
            let weight = grid.weight_f64(n);
            Estimate {
                index: n,
                weight,
                estimate: ln_big(&table.cumulative(n)) / weight,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowRow {
    pub index: usize,
    pub weight: f64,
    /// Strings with weight in `(T - delta, T]`.
    pub count: BigUint,
    /// `ln N_delta(T) / T`, absent when the window is empty.
    pub estimate: Option<f64>,
}

/// Windowed counts `N_delta(T) = |{a : w(a) <= T, T - w(a) < delta}|` at every grid point.
pub fn count_delta_window(
    sys: &ConstrainedSystem,
    grid: &WeightGrid,
    delta: &BigRational,
) -> Result<Vec<WindowRow>> {
    if delta < grid.unit() {
        return Err(Error::InvalidWeight(format!(
            "window {delta} is narrower than the grid unit {}",
            grid.unit()
        )));
    }
    let table = count_strings(sys, grid)?;
    // grid offsets j with j u < delta
    let width = (delta / grid.unit())
        .ceil()
        .to_integer()
        .to_usize()
        .unwrap_or(usize::MAX);
    Ok((1..=table.max_index())
        .map(|t| {
            let first = t.saturating_sub(width) + 1;
            let count = table.cumulative(t) - table.cumulative(first - 1);
            let weight = grid.weight_f64(t);
            let estimate = (!count.is_zero()).then(|| ln_big(&count) / weight);
            WindowRow {
                index: t,
                weight,
                count,
                estimate,
            }
        })
        .collect())
}

/// CSV with columns `weight,count,cumulative,estimate`; the estimate is empty where `N = 0`.
pub fn write_csv<W: Write>(table: &CountTable, grid: &WeightGrid, out: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record(["weight", "count", "cumulative", "estimate"])?;
    for n in 1..=table.max_index() {
        let count = table.count(n);
        let cumulative = table.cumulative(n);
        let estimate = if count.is_zero() {
            String::new()
        } else {
            format!("{}", ln_big(&cumulative) / grid.weight_f64(n))
        };
        wtr.write_record([
            format_rational(&grid.weight(n)),
            count.to_string(),
            cumulative.to_string(),
            estimate,
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{LabelSet, RunLengthSet};
    use crate::weight::Weight;

    fn sys(runs: RunLengthSet, m: usize) -> ConstrainedSystem {
        ConstrainedSystem::new(runs, LabelSet::numbered(m).unwrap())
    }

    fn counts(table: &CountTable) -> Vec<u64> {
        table.counts().iter().map(|c| c.to_u64().unwrap()).collect()
    }

    #[test]
    fn rll_counts() {
        let t = count_strings(
            &sys(RunLengthSet::range(2).unwrap(), 2),
            &WeightGrid::integers(5),
        )
        .unwrap();
        assert_eq!(counts(&t), vec![2, 4, 6, 10, 16]);
        assert_eq!(t.cumulative(5).to_u64(), Some(38));
    }

    #[test]
    fn alternating_and_unconstrained_counts() {
        let alt = count_strings(
            &sys(RunLengthSet::explicit(vec![Weight::integer(1)]).unwrap(), 2),
            &WeightGrid::integers(30),
        )
        .unwrap();
        assert!(counts(&alt).iter().all(|&c| c == 2));

        let free =
            count_strings(&sys(RunLengthSet::naturals(), 2), &WeightGrid::integers(40)).unwrap();
        for n in 1..=40 {
            assert_eq!(free.count(n), &(BigUint::one() << n));
        }
    }

    #[test]
    fn off_grid_weight_is_named() {
        let s = sys(
            RunLengthSet::explicit(vec![Weight::integer(1), Weight::pi()]).unwrap(),
            2,
        );
        match count_strings(&s, &WeightGrid::integers(10)) {
            Err(Error::OffGrid { weight, .. }) => assert_eq!(weight, "pi"),
            other => panic!("expected grid error, got {other:?}"),
        }
        let half = sys(
            RunLengthSet::explicit(vec![Weight::integer(1), Weight::ratio(3, 2).unwrap()]).unwrap(),
            2,
        );
        assert!(count_strings(&half, &WeightGrid::integers(10)).is_err());
        let grid = WeightGrid::for_system(&half, &BigRational::from_integer(10.into())).unwrap();
        assert_eq!(grid.unit(), &BigRational::new(1.into(), 2.into()));
        assert_eq!(grid.max_index(), 20);
        let t = count_strings(&half, &grid).unwrap();
        // weight 3 = 1+1+1 (2 strings), 3/2+3/2 (2 strings)
        assert_eq!(t.count(6).to_u64(), Some(4));
    }

    #[test]
    fn weights_beyond_grid_are_ignored() {
        let s = sys(
            RunLengthSet::explicit(vec![Weight::integer(1), Weight::pi()]).unwrap(),
            2,
        );
        let t = count_strings(&s, &WeightGrid::integers(3)).unwrap();
        assert!(counts(&t).iter().all(|&c| c == 2));
    }

    #[test]
    fn estimates() {
        let rll = sys(RunLengthSet::range(2).unwrap(), 2);
        let grid = WeightGrid::integers(60);
        let est = estimate_capacity_from_counts(&count_strings(&rll, &grid).unwrap(), &grid);
        let golden = ((1.0 + 5f64.sqrt()) / 2.0).ln();
        let last = est.last().unwrap();
        assert_eq!(last.weight, 60.0);
        // subexponential prefactor keeps the estimate 0.022 above the limit at weight 60
        assert!((last.estimate - golden).abs() < 0.025);

        let alt = sys(RunLengthSet::explicit(vec![Weight::integer(1)]).unwrap(), 2);
        let est = estimate_capacity_from_counts(&count_strings(&alt, &grid).unwrap(), &grid);
        for e in &est {
            let k = e.weight;
            assert!((e.estimate - (2.0 * k).ln() / k).abs() < 1e-12);
        }

        let free = sys(RunLengthSet::naturals(), 2);
        let grid = WeightGrid::integers(40);
        let est = estimate_capacity_from_counts(&count_strings(&free, &grid).unwrap(), &grid);
        let expected = (2f64.powi(41) - 2.0).ln() / 40.0;
        assert!((est[39].estimate - expected).abs() < 1e-12);
        assert!((est[39].estimate - std::f64::consts::LN_2).abs() < 0.03);
    }

    #[test]
    fn sparse_systems_skip_empty_grid_points() {
        let evens = sys(
            RunLengthSet::arithmetic(Weight::integer(2), Weight::integer(2)),
            2,
        );
        let grid = WeightGrid::integers(10);
        let est = estimate_capacity_from_counts(&count_strings(&evens, &grid).unwrap(), &grid);
        assert_eq!(
            est.iter().map(|e| e.index).collect::<Vec<_>>(),
            vec![2, 4, 6, 8, 10]
        );
    }

    #[test]
    fn delta_windows() {
        let rll = sys(RunLengthSet::range(2).unwrap(), 2);
        let grid = WeightGrid::integers(5);
        let one = BigRational::one();
        let rows = count_delta_window(&rll, &grid, &one).unwrap();
        assert_eq!(rows[2].count.to_u64(), Some(6));
        let two = BigRational::from_integer(2.into());
        let rows = count_delta_window(&rll, &grid, &two).unwrap();
        assert_eq!(rows[2].count.to_u64(), Some(10));
        let wide = BigRational::from_integer(100.into());
        let rows = count_delta_window(&rll, &grid, &wide).unwrap();
        assert_eq!(rows[4].count.to_u64(), Some(38));
        let half = BigRational::new(1.into(), 2.into());
        assert!(count_delta_window(&rll, &grid, &half).is_err());
        let frac = BigRational::new(3.into(), 2.into());
        let rows = count_delta_window(&rll, &grid, &frac).unwrap();
        assert_eq!(rows[2].count.to_u64(), Some(10));
    }

    #[test]
    fn ln_big_handles_huge_numbers() {
        let x = BigUint::one() << 5000u32;
        assert!((ln_big(&x) - 5000.0 * std::f64::consts::LN_2).abs() < 1e-9);
        let y = BigUint::from(12345u32);
        assert!((ln_big(&y) - 12345f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn csv_rows() {
        let rll = sys(RunLengthSet::range(2).unwrap(), 2);
        let grid = WeightGrid::integers(3);
        let mut buf = Vec::new();
        write_csv(&count_strings(&rll, &grid).unwrap(), &grid, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "weight,count,cumulative,estimate");
        assert!(lines[1].starts_with("1,2,2,"));
        assert!(lines[3].starts_with("3,6,12,"));
    }
}
