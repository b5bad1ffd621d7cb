//! Positive run lengths with an optional exact form.
//!
//! A [`Weight`] always carries its real value. When the weight is known
//! exactly it also carries a [`LinearForm`]: a rational linear combination of
//! `1` and named irrational constants such as `pi`. The real value is derived
//! from the exact form, never stored independently of it.
//!
//! Named constants are treated as linearly independent over the rationals
//! (and independent of `1`), so `2*pi` and `6` are distinct exact weights.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::Add;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// A named irrational constant with its real value.
#[derive(Clone, Debug)]
pub struct Symbol {
    name: Arc<str>,
    value: f64,
}

impl Symbol {
    pub fn new(name: &str, value: f64) -> Result<Self> {
        if !is_identifier(name) {
            return Err(Error::Parse(format!("invalid constant name {name:?}")));
        }
        if !value.is_finite() || value <= 0.0 {
            return Err(Error::InvalidWeight(format!(
                "constant {name} must have a positive finite value, got {value}"
            )));
        }
        Ok(Self {
            name: name.into(),
            value,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self) -> f64 {
        self.value
    }
}

impl PartialEq for Symbol {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Symbol {}

impl PartialOrd for Symbol {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Symbol {
    fn cmp(&self, other: &Self) -> Ordering {
        self.name
            .cmp(&other.name)
            .then_with(|| self.value.total_cmp(&other.value))
    }
}

impl Hash for Symbol {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.name.hash(state);
        self.value.to_bits().hash(state);
    }
}

/// Basis element of a [`LinearForm`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Atom {
    One,
    Const(Symbol),
}

impl Atom {
    fn value(&self) -> f64 {
        match self {
            Atom::One => 1.0,
            Atom::Const(s) => s.value,
        }
    }
}

/// Rational linear combination of `1` and named constants. No zero coefficients are stored.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LinearForm {
    terms: BTreeMap<Atom, BigRational>,
}

impl LinearForm {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn rational(r: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !r.is_zero() {
            terms.insert(Atom::One, r);
        }
        Self { terms }
    }

    pub fn symbol(sym: Symbol, coeff: BigRational) -> Self {
        let mut terms = BTreeMap::new();
        if !coeff.is_zero() {
            terms.insert(Atom::Const(sym), coeff);
        }
        Self { terms }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Atom, &BigRational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, atom: &Atom) -> Option<&BigRational> {
        self.terms.get(atom)
    }

    /// The rational value, if the form has no symbolic part.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&Atom::One).cloned(),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(atom, c)| rational_to_f64(c) * atom.value())
            .sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        for (atom, c) in &other.terms {
            let entry = terms.entry(atom.clone()).or_insert_with(BigRational::zero);
            *entry += c;
            if entry.is_zero() {
                terms.remove(atom);
            }
        }
        Self { terms }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-BigRational::one()))
    }

    pub fn scale(&self, k: &BigRational) -> Self {
        if k.is_zero() {
            return Self::zero();
        }
        Self {
            terms: self.terms.iter().map(|(a, c)| (a.clone(), c * k)).collect(),
        }
    }

    /// Returns `k` with `self == k * other`, if such a rational exists.
    pub fn ratio_to(&self, other: &Self) -> Option<BigRational> {
        let (atom, c) = other.terms.iter().next()?;
        let k = match self.terms.get(atom) {
            Some(v) => v / c,
            None => BigRational::zero(),
        };
        (other.scale(&k) == *self).then_some(k)
    }
}

impl fmt::Display for LinearForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (atom, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            match atom {
                Atom::One => write!(f, "{c}")?,
                Atom::Const(s) if c.is_one() => write!(f, "{}", s.name)?,
                Atom::Const(s) => write!(f, "{c}*{}", s.name)?,
            }
        }
        Ok(())
    }
}

/// A strictly positive run length.
#[derive(Clone, Debug)]
pub struct Weight {
    value: f64,
    exact: Option<LinearForm>,
}

impl Weight {
    pub fn integer(n: u64) -> Self {
        Self::from_rational(BigRational::from_integer(n.into())).expect("nonzero integer weight")
    }

    pub fn ratio(p: u64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(Error::InvalidWeight(format!(
                "{p}/0 has a zero denominator"
            )));
        }
        Self::from_rational(BigRational::new(p.into(), q.into()))
    }

    pub fn from_rational(r: BigRational) -> Result<Self> {
        Self::from_form(LinearForm::rational(r))
    }

    pub fn from_form(form: LinearForm) -> Result<Self> {
        let value = form.to_f64();
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidWeight(format!(
                "{form} is not a positive weight"
            )));
        }
        Ok(Self {
            value,
            exact: Some(form),
        })
    }

    /// A named constant such as `pi`, carried symbolically.
    pub fn constant(sym: Symbol) -> Self {
        let value = sym.value;
        Self {
            value,
            exact: Some(LinearForm::symbol(sym, BigRational::one())),
        }
    }

    pub fn pi() -> Self {
        Self::constant(Symbol::new("pi", std::f64::consts::PI).expect("pi"))
    }

    /// A weight known only by its floating-point value.
    pub fn real(value: f64) -> Result<Self> {
        if !(value.is_finite() && value > 0.0) {
            return Err(Error::InvalidWeight(format!(
                "{value} is not a positive weight"
            )));
        }
        Ok(Self { value, exact: None })
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn exact(&self) -> Option<&LinearForm> {
        self.exact.as_ref()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn as_rational(&self) -> Option<BigRational> {
        self.exact.as_ref().and_then(LinearForm::as_rational)
    }

    /// Product with a positive scalar; exact when `self` is exact and `k` rational.
    pub fn scaled_by(&self, k: &Weight) -> Weight {
        match (&self.exact, k.as_rational()) {
            (Some(form), Some(r)) => {
                Weight::from_form(form.scale(&r)).expect("product of positive weights")
            }
            _ => Weight {
                value: self.value * k.value,
                exact: None,
            },
        }
    }

    pub fn times_integer(&self, k: u64) -> Option<Weight> {
        if k == 0 {
            return None;
        }
        Some(match &self.exact {
            Some(form) => Weight::from_form(form.scale(&BigRational::from_integer(k.into())))
                .expect("positive multiple"),
            None => Weight {
                value: self.value * k as f64,
                exact: None,
            },
        })
    }

    /// Equality used for membership: exact comparison when both sides are
    /// exact, otherwise a relative tolerance of `1e-12` on the real values.
    pub fn matches(&self, other: &Weight) -> bool {
        match (&self.exact, &other.exact) {
            (Some(a), Some(b)) => a == b,
            _ => approx_eq(self.value, other.value),
        }
    }

    /// Parses `3`, `1/2`, `2.5`, `pi`, `2*pi`, `1 + 1/3*pi` or a real literal
    /// with an exponent such as `1.4142135623730951e0`.
    pub fn parse(text: &str, constants: &Constants) -> Result<Weight> {
        let text = text.trim();
        if text.is_empty() {
            return Err(Error::Parse("empty weight".into()));
        }
        if looks_real(text) {
            let v: f64 = text
                .parse()
                .map_err(|_| Error::Parse(format!("bad real literal {text:?}")))?;
            return Weight::real(v);
        }
        let mut form = LinearForm::zero();
        for term in text.split('+') {
            let term = term.trim();
            let (coeff, name) = match term.split_once('*') {
                Some((c, n)) => (parse_rational(c.trim())?, Some(n.trim())),
                None if term.starts_with(|c: char| c.is_ascii_digit() || c == '.') => {
                    (parse_rational(term)?, None)
                }
                None => (BigRational::one(), Some(term)),
            };
            let piece = match name {
                None => LinearForm::rational(coeff),
                Some(n) => LinearForm::symbol(constants.get(n)?, coeff),
            };
            form = form.add(&piece);
        }
        Weight::from_form(form)
    }
}

impl PartialEq for Weight {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Weight {}

impl PartialOrd for Weight {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Weight {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.exact, &other.exact) {
            (Some(a), Some(b)) if a == b => Ordering::Equal,
            _ => {
                self.value
                    .total_cmp(&other.value)
                    .then_with(|| match (&self.exact, &other.exact) {
                        (Some(a), Some(b)) => a.cmp(b),
                        (Some(_), None) => Ordering::Less,
                        (None, Some(_)) => Ordering::Greater,
                        (None, None) => Ordering::Equal,
                    })
            }
        }
    }
}

impl Hash for Weight {
    fn hash<H: Hasher>(&self, state: &mut H) {
        match &self.exact {
            Some(form) => form.hash(state),
            None => self.value.to_bits().hash(state),
        }
    }
}

impl Add for &Weight {
    type Output = Weight;

    fn add(self, rhs: &Weight) -> Weight {
        match (&self.exact, &rhs.exact) {
            (Some(a), Some(b)) => Weight::from_form(a.add(b)).expect("sum of positive weights"),
            _ => Weight {
                value: self.value + rhs.value,
                exact: None,
            },
        }
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.exact {
            Some(form) => write!(f, "{form}"),
            None => write!(f, "{}", format_real(self.value)),
        }
    }
}

/// 17 significant digits in exponent notation, which round-trips any `f64`.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

pub(crate) fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0)
}

fn looks_real(text: &str) -> bool {
    text.starts_with(|c: char| c.is_ascii_digit() || c == '.' || c == '-')
        && text.contains(['e', 'E'])
        && !text.contains(['*', '+', '/'])
}

fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Parses `7`, `3/4` or an exact decimal such as `0.125`.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let bad = || Error::Parse(format!("bad rational {text:?}"));
    if let Some((p, q)) = text.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((int, frac)) = text.split_once('.') {
        if !frac.chars().all(|c| c.is_ascii_digit()) || frac.is_empty() && int.is_empty() {
            return Err(bad());
        }
        let digits = format!("{int}{frac}");
        let num: BigInt = digits.parse().map_err(|_| bad())?;
        let den = num_traits::pow(BigInt::from(10u32), frac.len());
        return Ok(BigRational::new(num, den));
    }
    let n: BigInt = text.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(n))
}

/// Formats a rational as `p` or `p/q`.
pub fn format_rational(r: &BigRational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Registry of named constants available to the parser. `pi` and `e` are built in.
#[derive(Clone, Debug)]
pub struct Constants {
    symbols: BTreeMap<String, Symbol>,
}

impl Default for Constants {
    fn default() -> Self {
        let mut symbols = BTreeMap::new();
        for (name, value) in [("pi", std::f64::consts::PI), ("e", std::f64::consts::E)] {
            symbols.insert(name.to_string(), Symbol::new(name, value).expect("builtin"));
        }
        Self { symbols }
    }
}

impl Constants {
    pub fn define(&mut self, name: &str, value: f64) -> Result<()> {
        let sym = Symbol::new(name, value)?;
        self.symbols.insert(name.to_string(), sym);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<Symbol> {
        self.symbols
            .get(name)
            .cloned()
            .ok_or_else(|| Error::Parse(format!("unknown constant {name:?}")))
    }

    /// Constants that are not built in, for serialization.
    pub fn user_defined(&self) -> impl Iterator<Item = &Symbol> {
        let builtin = Constants::default();
        self.symbols
            .values()
            .filter(move |s| builtin.symbols.get(s.name()) != Some(s))
    }
}

/// Conversion that stays accurate when numerator and denominator both exceed `f64` range.
pub fn rational_to_f64(r: &BigRational) -> f64 {
    let (n, d) = (r.numer(), r.denom());
    let (nb, db) = (n.bits(), d.bits());
    if nb <= 1000 && db <= 1000 {
        return n.to_f64().unwrap_or(f64::NAN) / d.to_f64().unwrap_or(f64::NAN);
    }
    let ns = nb.saturating_sub(64);
    let ds = db.saturating_sub(64);
    let nt = (n >> ns).to_f64().unwrap_or(f64::NAN);
    let dt = (d >> ds).to_f64().unwrap_or(f64::NAN);
    let exp = ns as i64 - ds as i64;
    let scale = exp.clamp(-2000, 2000) as i32;
    // split the power so intermediate factors stay finite
    nt / dt * 2f64.powi(scale / 2) * 2f64.powi(scale - scale / 2)
}

pub(crate) fn is_nonnegative_integer(r: &BigRational) -> bool {
    r.is_integer() && !r.is_negative()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pi_sum_is_exact_and_distinct_from_rationals() {
        let two_pi = &Weight::pi() + &Weight::pi();
        assert_eq!(two_pi.to_string(), "2*pi");
        assert!((two_pi.value() - 2.0 * std::f64::consts::PI).abs() < 1e-15);
        assert!(!two_pi.matches(&Weight::integer(6)));
        assert!(!two_pi.matches(&Weight::pi()));
    }

    #[test]
    fn parse_forms() {
        let c = Constants::default();
        assert_eq!(
            Weight::parse("3/6", &c).unwrap(),
            Weight::ratio(1, 2).unwrap()
        );
        assert_eq!(
            Weight::parse("0.25", &c).unwrap(),
            Weight::ratio(1, 4).unwrap()
        );
        assert_eq!(
            Weight::parse("pi + pi", &c).unwrap(),
            Weight::parse("2*pi", &c).unwrap()
        );
        let w = Weight::parse("1 + 1/2*pi", &c).unwrap();
        assert_eq!(Weight::parse(&w.to_string(), &c).unwrap(), w);
        let r = Weight::parse("1.4142135623730951e0", &c).unwrap();
        assert!(!r.is_exact());
        assert_eq!(r.value(), std::f64::consts::SQRT_2);
        assert!(Weight::parse("tau", &c).is_err());
        assert!(Weight::parse("0", &c).is_err());
        assert!(Weight::parse("1 + -2", &c).is_err());
    }

    #[test]
    fn real_display_round_trips() {
        let w = Weight::real(0.1 + 0.2).unwrap();
        let back = Weight::parse(&w.to_string(), &Constants::default()).unwrap();
        assert_eq!(back.value(), w.value());
    }

    #[test]
    fn huge_rationals_convert() {
        let big: BigInt = num_traits::pow(BigInt::from(3), 1000) * BigInt::from(7);
        let den = num_traits::pow(BigInt::from(2), 1580);
        let r = BigRational::new(big.clone(), den.clone());
        let expected = (1000.0 * 3f64.ln() + 7f64.ln() - 1580.0 * 2f64.ln()).exp();
        assert!(((rational_to_f64(&r) - expected) / expected).abs() < 1e-12);
        assert!((rational_to_f64(&BigRational::new(den, big)) * expected - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_nonpositive() {
        assert!(Weight::real(0.0).is_err());
        assert!(Weight::real(f64::NAN).is_err());
        assert!(Weight::ratio(0, 3).is_err());
        assert!(Weight::ratio(1, 0).is_err());
    }

    #[test]
    fn ratio_to_finds_rational_multiples() {
        let pi = Weight::pi();
        let three_pi = pi.times_integer(3).unwrap();
        let k = three_pi
            .exact()
            .unwrap()
            .ratio_to(pi.exact().unwrap())
            .unwrap();
        assert_eq!(k, BigRational::from_integer(3.into()));
        assert!(Weight::integer(3)
            .exact()
            .unwrap()
            .ratio_to(pi.exact().unwrap())
            .is_none());
    }
}
