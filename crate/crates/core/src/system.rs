//! Run-length sets, label alphabets, constrained systems and the strings they admit.

use std::fmt;
use std::sync::Arc;

use num_integer::Integer;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::weight::{approx_eq, is_nonnegative_integer, Weight};

/// Geometric and symbolic disjointness checks enumerate members up to this
/// multiple of the larger of the two smallest weights.
const DISJOINTNESS_SPAN: f64 = 1e6;
const DISJOINTNESS_MEMBER_CAP: usize = 100_000;

/// The shape of a run-length set.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    /// A finite, strictly increasing list.
    Explicit(Vec<Weight>),
    /// `{first + k*step : k >= 0}`.
    Arithmetic { first: Weight, step: Weight },
    /// `{first * ratio^k : k >= 0}` with `ratio > 1`.
    Geometric { first: Weight, ratio: Weight },
    /// Pairwise disjoint union of non-union families.
    Union(Vec<RunLengthSet>),
}

/// A nonempty countable set of positive run lengths with a smallest element.
#[derive(Clone, Debug, PartialEq)]
pub struct RunLengthSet {
    family: Family,
}

impl RunLengthSet {
    /// Builds a finite set. Input order does not matter; duplicates are rejected.
    pub fn explicit(mut weights: Vec<Weight>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidRunLengthSet("explicit set is empty".into()));
        }
        weights.sort();
        for pair in weights.windows(2) {
            if pair[0].matches(&pair[1]) {
                return Err(Error::InvalidRunLengthSet(format!(
                    "duplicate weight {}",
                    pair[0]
                )));
            }
        }
        Ok(Self {
            family: Family::Explicit(weights),
        })
    }

    /// `{1, 2, ..., k}` as an explicit set.
    pub fn range(k: u64) -> Result<Self> {
        Self::explicit((1..=k).map(Weight::integer).collect())
    }

    pub fn arithmetic(first: Weight, step: Weight) -> Self {
        Self {
            family: Family::Arithmetic { first, step },
        }
    }

    /// The positive integers.
    pub fn naturals() -> Self {
        Self::arithmetic(Weight::integer(1), Weight::integer(1))
    }

    pub fn geometric(first: Weight, ratio: Weight) -> Result<Self> {
        if ratio.value() <= 1.0 {
            return Err(Error::InvalidRunLengthSet(format!(
                "geometric ratio must exceed 1, got {ratio}"
            )));
        }
        Ok(Self {
            family: Family::Geometric { first, ratio },
        })
    }

    /// Disjoint union. Nested unions are flattened; overlapping components are an error.
    pub fn union(parts: Vec<RunLengthSet>) -> Result<Self> {
        let mut flat = Vec::new();
        for part in parts {
            match part.family {
                Family::Union(inner) => flat.extend(inner),
                _ => flat.push(part),
            }
        }
        match flat.len() {
            0 => Err(Error::InvalidRunLengthSet("union of no sets".into())),
            1 => Ok(flat.pop().expect("one part")),
            _ => {
                for i in 0..flat.len() {
                    for j in i + 1..flat.len() {
                        if let Some(w) = overlap(&flat[i], &flat[j]) {
                            return Err(Error::Overlap(w));
                        }
                    }
                }
                Ok(Self {
                    family: Family::Union(flat),
                })
            }
        }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn is_finite(&self) -> bool {
        match &self.family {
            Family::Explicit(_) => true,
            Family::Arithmetic { .. } | Family::Geometric { .. } => false,
            Family::Union(parts) => parts.iter().all(RunLengthSet::is_finite),
        }
    }

    /// Number of members, `None` for infinite sets.
    pub fn len(&self) -> Option<usize> {
        match &self.family {
            Family::Explicit(ws) => Some(ws.len()),
            Family::Arithmetic { .. } | Family::Geometric { .. } => None,
            Family::Union(parts) => parts.iter().map(RunLengthSet::len).sum(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min_weight(&self) -> &Weight {
        match &self.family {
            Family::Explicit(ws) => &ws[0],
            Family::Arithmetic { first, .. } | Family::Geometric { first, .. } => first,
            Family::Union(parts) => parts
                .iter()
                .map(RunLengthSet::min_weight)
                .min()
                .expect("nonempty union"),
        }
    }

    /// Abscissa of convergence of `sum exp(-v s)`: `-inf` for finite sets, `0` otherwise.
    pub fn abscissa(&self) -> f64 {
        if self.is_finite() {
            f64::NEG_INFINITY
        } else {
            0.0
        }
    }

    /// Members in increasing order. Infinite for infinite sets.
    pub fn members(&self) -> Box<dyn Iterator<Item = Weight> + '_> {
        match &self.family {
            Family::Explicit(ws) => Box::new(ws.iter().cloned()),
            Family::Arithmetic { first, step } => {
                Box::new((0u64..).map(move |k| arithmetic_member(first, step, k)))
            }
            Family::Geometric { first, ratio } => {
                let mut current = Some(first.clone());
                let mut k = 0i32;
                Box::new(std::iter::from_fn(move || {
                    let out = current.take()?;
                    k += 1;
                    current = Some(if ratio.as_rational().is_some() && out.is_exact() {
                        out.scaled_by(ratio)
                    } else {
                        Weight::real(first.value() * ratio.value().powi(k)).ok()?
                    });
                    Some(out)
                }))
            }
            Family::Union(parts) => {
                let mut iters: Vec<_> = parts.iter().map(|p| p.members().peekable()).collect();
                Box::new(std::iter::from_fn(move || {
                    let (idx, _) = iters
                        .iter_mut()
                        .enumerate()
                        .filter_map(|(i, it)| it.peek().map(|w| (i, w.value())))
                        .min_by(|a, b| a.1.total_cmp(&b.1))?;
                    iters[idx].next()
                }))
            }
        }
    }

    /// Members with value at most `bound`.
    pub fn members_up_to(&self, bound: f64) -> Vec<Weight> {
        self.members().take_while(|w| w.value() <= bound).collect()
    }

    /// Membership test. Exact for exact weights in explicit and arithmetic
    /// families; geometric families with irrational parameters compare
    /// `log_ratio(x / first)` to an integer within `1e-12`.
    pub fn contains(&self, x: &Weight) -> bool {
        match &self.family {
            Family::Explicit(ws) => ws.iter().any(|w| w.matches(x)),
            Family::Arithmetic { first, step } => {
                if let (Some(xf), Some(af), Some(df)) = (x.exact(), first.exact(), step.exact()) {
                    let diff = xf.sub(af);
                    if diff.is_zero() {
                        return true;
                    }
                    return diff
                        .ratio_to(df)
                        .is_some_and(|k| is_nonnegative_integer(&k));
                }
                let t = (x.value() - first.value()) / step.value();
                let k = t.round();
                k >= 0.0 && approx_eq(first.value() + k * step.value(), x.value())
            }
            Family::Geometric { first, ratio } => {
                if x.is_exact() && first.is_exact() && ratio.as_rational().is_some() {
                    let limit = x.value() * (1.0 + 1e-9);
                    return self
                        .members()
                        .take_while(|w| w.value() <= limit)
                        .any(|w| w.matches(x));
                }
                let t = (x.value() / first.value()).ln() / ratio.value().ln();
                let k = t.round();
                k >= 0.0 && (t - k).abs() <= 1e-12
            }
            Family::Union(parts) => parts.iter().any(|p| p.contains(x)),
        }
    }

    /// Every weight multiplied by `alpha`.
    pub fn scaled(&self, alpha: &Weight) -> RunLengthSet {
        let family = match &self.family {
            Family::Explicit(ws) => {
                Family::Explicit(ws.iter().map(|w| w.scaled_by(alpha)).collect())
            }
            Family::Arithmetic { first, step } => Family::Arithmetic {
                first: first.scaled_by(alpha),
                step: step.scaled_by(alpha),
            },
            Family::Geometric { first, ratio } => Family::Geometric {
                first: first.scaled_by(alpha),
                ratio: ratio.clone(),
            },
            Family::Union(parts) => Family::Union(parts.iter().map(|p| p.scaled(alpha)).collect()),
        };
        RunLengthSet { family }
    }
}

pub(crate) fn arithmetic_member(first: &Weight, step: &Weight, k: u64) -> Weight {
    match step.times_integer(k) {
        None => first.clone(),
        Some(offset) if first.is_exact() && offset.is_exact() => first + &offset,
        Some(_) => Weight::real(first.value() + k as f64 * step.value()).expect("positive"),
    }
}

impl fmt::Display for RunLengthSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            Family::Explicit(ws) => {
                write!(f, "{{")?;
                for (i, w) in ws.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{w}")?;
                }
                write!(f, "}}")
            }
            Family::Arithmetic { first, step } => write!(f, "{{{first} + k*{step}}}"),
            Family::Geometric { first, ratio } => write!(f, "{{{first} * ({ratio})^k}}"),
            Family::Union(parts) => {
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, " ∪ ")?;
                    }
                    write!(f, "{p}")?;
                }
                Ok(())
            }
        }
    }
}

/// Returns a witness weight if the two (non-union) sets share a member.
fn overlap(a: &RunLengthSet, b: &RunLengthSet) -> Option<String> {
    use Family::*;
    match (&a.family, &b.family) {
        (Explicit(ws), _) => ws.iter().find(|w| b.contains(w)).map(ToString::to_string),
        (_, Explicit(_)) => overlap(b, a),
        (
            Arithmetic {
                first: a1,
                step: d1,
            },
            Arithmetic {
                first: a2,
                step: d2,
            },
        ) => match [a1, d1, a2, d2].map(Weight::as_rational) {
            [Some(a1), Some(d1), Some(a2), Some(d2)] => arithmetic_overlap(&a1, &d1, &a2, &d2),
            _ => prefix_overlap(a, b),
        },
        (Geometric { .. }, _) => prefix_overlap(a, b),
        _ => prefix_overlap(b, a),
    }
}

/// Enumerates `a` up to the disjointness bound and tests membership in `b`.
fn prefix_overlap(a: &RunLengthSet, b: &RunLengthSet) -> Option<String> {
    let bound = DISJOINTNESS_SPAN * a.min_weight().value().max(b.min_weight().value());
    a.members()
        .take(DISJOINTNESS_MEMBER_CAP)
        .take_while(|w| w.value() <= bound)
        .find(|w| b.contains(w))
        .map(|w| w.to_string())
}

/// Two rational progressions `a1 + k d1`, `a2 + k d2` meet iff, on the common
/// grid, `gcd(d1, d2)` divides `a2 - a1`.
fn arithmetic_overlap(
    a1: &BigRational,
    d1: &BigRational,
    a2: &BigRational,
    d2: &BigRational,
) -> Option<String> {
    let den = [a1, d1, a2, d2]
        .iter()
        .fold(num_bigint::BigInt::from(1), |acc, r| acc.lcm(r.denom()));
    let scale = |r: &BigRational| (r * BigRational::from_integer(den.clone())).to_integer();
    let (a1i, d1i, a2i, d2i) = (scale(a1), scale(d1), scale(a2), scale(d2));
    let g = d1i.gcd(&d2i);
    if !(&a2i - &a1i).is_multiple_of(&g) {
        return None;
    }
    // smallest common member: walk the sparser progression from the larger start
    let (start, step, other_a, other_d) = if d1i >= d2i {
        (a1i, d1i, a2i, d2i)
    } else {
        (a2i, d2i, a1i, d1i)
    };
    let mut x = start;
    for _ in 0..DISJOINTNESS_MEMBER_CAP * 10 {
        if x >= other_a && (&x - &other_a).is_multiple_of(&other_d) {
            let w = BigRational::new(x, den);
            return Some(crate::weight::format_rational(&w));
        }
        x += &step;
    }
    Some("a common member of two arithmetic progressions".into())
}

/// Label names. Cheap to clone.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(Arc<str>);

impl Label {
    pub fn new(name: &str) -> Self {
        Label(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl From<&str> for Label {
    fn from(s: &str) -> Self {
        Label::new(s)
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// A finite alphabet of at least two distinct labels.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelSet {
    labels: Vec<Label>,
}

impl LabelSet {
    pub fn new<S: AsRef<str>>(names: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<Label> = names.into_iter().map(|n| Label::new(n.as_ref())).collect();
        if labels.len() < 2 {
            return Err(Error::InvalidLabels(format!(
                "need at least 2 labels, got {}",
                labels.len()
            )));
        }
        for (i, l) in labels.iter().enumerate() {
            if l.as_str().is_empty() || l.as_str().contains([':', ' ', '\t']) {
                return Err(Error::InvalidLabels(format!(
                    "bad label name {:?}",
                    l.as_str()
                )));
            }
            if labels[..i].contains(l) {
                return Err(Error::InvalidLabels(format!("duplicate label {l}")));
            }
        }
        Ok(Self { labels })
    }

    /// Labels `0, 1, ..., m-1`.
    pub fn numbered(m: usize) -> Result<Self> {
        Self::new((0..m).map(|i| i.to_string()))
    }

    pub fn m(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn contains(&self, label: &Label) -> bool {
        self.labels.contains(label)
    }

    pub fn get(&self, name: &str) -> Result<&Label> {
        self.labels
            .iter()
            .find(|l| l.as_str() == name)
            .ok_or_else(|| Error::UnknownLabel(name.to_string()))
    }
}

/// The general run-length set `<W, L>`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConstrainedSystem {
    runs: RunLengthSet,
    labels: LabelSet,
}

impl ConstrainedSystem {
    pub fn new(runs: RunLengthSet, labels: LabelSet) -> Self {
        Self { runs, labels }
    }

    /// `W = {1..kmax}` over binary labels.
    pub fn rll(kmax: u64) -> Result<Self> {
        Ok(Self::new(
            RunLengthSet::range(kmax)?,
            LabelSet::numbered(2)?,
        ))
    }

    /// The asynchronous channel: `W = {xi^k : k >= 1}` over `m` labels.
    pub fn asynchronous(xi: Weight, m: usize) -> Result<Self> {
        Ok(Self::new(
            RunLengthSet::geometric(xi.clone(), xi)?,
            LabelSet::numbered(m)?,
        ))
    }

    pub fn runs(&self) -> &RunLengthSet {
        &self.runs
    }

    pub fn labels(&self) -> &LabelSet {
        &self.labels
    }

    pub fn m(&self) -> usize {
        self.labels.m()
    }

    /// Whether `s` is a string of this system: every run length in `W` and every label in `L`.
    pub fn is_member(&self, s: &RunString) -> bool {
        s.runs()
            .iter()
            .all(|r| self.labels.contains(&r.label) && self.runs.contains(&r.length))
    }
}

impl fmt::Display for ConstrainedSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{}, {{", self.runs)?;
        for (i, l) in self.labels.labels().iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{l}")?;
        }
        write!(f, "}}>")
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Run {
    pub label: Label,
    pub length: Weight,
}

impl Run {
    pub fn new(label: impl Into<Label>, length: Weight) -> Self {
        Self {
            label: label.into(),
            length,
        }
    }
}

/// A nonempty sequence of runs in which adjacent runs carry distinct labels.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RunString {
    runs: Vec<Run>,
}

impl RunString {
    pub fn new(runs: Vec<Run>) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::InvalidRunString("no runs".into()));
        }
        if let Some(pair) = runs.windows(2).find(|p| p[0].label == p[1].label) {
            return Err(Error::InvalidRunString(format!(
                "adjacent runs share label {}",
                pair[0].label
            )));
        }
        Ok(Self { runs })
    }

    pub fn single(label: impl Into<Label>, length: Weight) -> Self {
        Self {
            runs: vec![Run::new(label, length)],
        }
    }

    pub fn runs(&self) -> &[Run] {
        &self.runs
    }

    pub fn first_label(&self) -> &Label {
        &self.runs[0].label
    }

    pub fn last_label(&self) -> &Label {
        &self.runs[self.runs.len() - 1].label
    }

    pub fn total_weight(&self) -> Weight {
        let mut iter = self.runs.iter();
        let first = iter.next().expect("nonempty").length.clone();
        iter.fold(first, |acc, r| &acc + &r.length)
    }

    /// Concatenation of the underlying label streams: when the boundary labels
    /// agree the two boundary runs merge into one run.
    pub fn concat(&self, other: &RunString) -> RunString {
        let mut runs = self.runs.clone();
        let mut rest = other.runs.iter();
        if self.last_label() == other.first_label() {
            let head = rest.next().expect("nonempty");
            let last = runs.last_mut().expect("nonempty");
            last.length = &last.length + &head.length;
        }
        runs.extend(rest.cloned());
        RunString { runs }
    }
}

impl fmt::Display for RunString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.runs.iter().enumerate() {
            if i > 0 {
                write!(f, " ")?;
            }
            write!(f, "{}:{}", r.label, r.length)?;
        }
        Ok(())
    }
}
