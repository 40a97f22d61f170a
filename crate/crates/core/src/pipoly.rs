//! Exact polynomials whose coefficients are rational multiples of powers of π.
//!
//! Weil–Petersson volume polynomials `V_{g,n}(x)` live here. They are read
//! from a JSON volume table (see [`VolumeTable::from_json`]) and validated
//! structurally; nothing in this module derives them.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::OnceLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// π to 50 decimal places. Coefficients are rounded to `f64` only after
/// multiplying by this, so the constant never dominates evaluation error.
const PI_DIGITS: &str = "3.14159265358979323846264338327950288419716939937510";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PolyError {
    #[error("variable count mismatch: left operand has {left}, right operand has {right}")]
    VarCountMismatch { left: usize, right: usize },
    #[error("evaluation point has {got} coordinates, polynomial has {expected} variables")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("multi-index {alpha:?} has length {got}, expected {expected}")]
    BadMultiIndex {
        alpha: Vec<u32>,
        expected: usize,
        got: usize,
    },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TableError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("entry ({g},{n}): odd exponent in monomial {alpha:?}")]
    OddExponent { g: u32, n: u32, alpha: Vec<u32> },
    #[error("entry ({g},{n}): monomial {alpha:?} has degree {degree}, bound is {bound}")]
    DegreeOverflow {
        g: u32,
        n: u32,
        alpha: Vec<u32>,
        degree: u32,
        bound: u32,
    },
    #[error("duplicate entry ({g},{n})")]
    Duplicate { g: u32, n: u32 },
    #[error("entry ({g},{n}): monomial {alpha:?} has {got} exponents, expected {n}")]
    ArityMismatch {
        g: u32,
        n: u32,
        alpha: Vec<u32>,
        got: usize,
    },
    #[error("entry ({g},{n}): unstable signature")]
    Unstable { g: u32, n: u32 },
    #[error("entry (0,2): the cylinder is a distinguished sentinel and cannot be stored")]
    CylinderStored,
    #[error("entry ({g},{n}): zero denominator in term {alpha:?}")]
    ZeroDenominator { g: u32, n: u32, alpha: Vec<u32> },
    #[error("invalid integer literal {0:?}")]
    BadInteger(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LookupError {
    #[error("unstable signature ({g},{n}): 2g-2+n must be positive")]
    UnstableSignature { g: u32, n: u32 },
}

fn pi_rational() -> &'static BigRational {
    static PI: OnceLock<BigRational> = OnceLock::new();
    PI.get_or_init(|| {
        let digits: String = PI_DIGITS.chars().filter(|c| *c != '.').collect();
        let frac_len = PI_DIGITS.len() - PI_DIGITS.find('.').unwrap() - 1;
        let num: BigInt = digits.parse().unwrap();
        let den = num_traits::pow(BigInt::from(10u32), frac_len);
        BigRational::new(num, den)
    })
}

/// A coefficient `(num/den)·π^pi_power`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PiRational {
    value: BigRational,
    pi_power: u32,
}

impl PiRational {
    pub fn new(value: BigRational, pi_power: u32) -> Self {
        let pi_power = if value.is_zero() { 0 } else { pi_power };
        Self { value, pi_power }
    }

    pub fn from_ints(num: i64, den: i64, pi_power: u32) -> Self {
        Self::new(BigRational::new(num.into(), den.into()), pi_power)
    }

    pub fn zero() -> Self {
        Self::new(BigRational::zero(), 0)
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn numerator(&self) -> &BigInt {
        self.value.numer()
    }

    pub fn denominator(&self) -> &BigInt {
        self.value.denom()
    }

    pub fn rational(&self) -> &BigRational {
        &self.value
    }

    pub fn pi_power(&self) -> u32 {
        self.pi_power
    }

    /// Value as `f64`, rounded once after exact multiplication by a 50-digit π.
    pub fn to_f64(&self) -> f64 {
        let pi_pow = num_traits::pow(pi_rational().clone(), self.pi_power as usize);
        (&self.value * pi_pow).to_f64().unwrap_or(f64::NAN)
    }
}

impl fmt::Display for PiRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)?;
        match self.pi_power {
            0 => Ok(()),
            1 => write!(f, "·π"),
            m => write!(f, "·π^{m}"),
        }
    }
}

/// Key of a stored term: exponents of `x_1..x_n` and the power of π.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial {
    pub alpha: Vec<u32>,
    pub pi_power: u32,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.alpha.iter().sum()
    }
}

/// Polynomial in `num_vars` real variables with coefficients in `Q[π]`.
///
/// Terms are keyed by `(α, m)`, so `x² + π²x²` keeps two entries; zero
/// coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PiPolynomial {
    num_vars: usize,
    terms: BTreeMap<Monomial, BigRational>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CombineOp {
    Add,
    Mul,
}

impl PiPolynomial {
    pub fn zero(num_vars: usize) -> Self {
        Self {
            num_vars,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(num_vars: usize) -> Self {
        Self::constant(num_vars, PiRational::from_ints(1, 1, 0))
    }

    pub fn constant(num_vars: usize, c: PiRational) -> Self {
        let mut p = Self::zero(num_vars);
        p.push(vec![0; num_vars], c.pi_power, c.value);
        p
    }

    /// Single term `c·x^α`.
    pub fn monomial(alpha: Vec<u32>, c: PiRational) -> Self {
        let mut p = Self::zero(alpha.len());
        p.push(alpha, c.pi_power, c.value);
        p
    }

    /// Builds a polynomial from `(α, coefficient)` pairs, summing repeats.
    pub fn from_terms(
        num_vars: usize,
        terms: impl IntoIterator<Item = (Vec<u32>, PiRational)>,
    ) -> Result<Self, PolyError> {
        let mut p = Self::zero(num_vars);
        for (alpha, c) in terms {
            if alpha.len() != num_vars {
                return Err(PolyError::BadMultiIndex {
                    got: alpha.len(),
                    alpha,
                    expected: num_vars,
                });
            }
            p.push(alpha, c.pi_power, c.value);
        }
        Ok(p)
    }

    fn push(&mut self, alpha: Vec<u32>, pi_power: u32, value: BigRational) {
        if value.is_zero() {
            return;
        }
        let key = Monomial { alpha, pi_power };
        let slot = self.terms.entry(key.clone()).or_insert_with(BigRational::zero);
        *slot += value;
        if slot.is_zero() {
            self.terms.remove(&key);
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Terms in canonical order (lexicographic in `α`, then π power).
    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, PiRational)> + '_ {
        self.terms
            .iter()
            .map(|(m, v)| (m, PiRational::new(v.clone(), m.pi_power)))
    }

    /// Total degree in the `x_i`; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(Monomial::degree).max()
    }

    pub fn has_only_even_exponents(&self) -> bool {
        self.terms.keys().all(|m| m.alpha.iter().all(|e| e % 2 == 0))
    }

    pub fn neg(&self) -> Self {
        Self {
            num_vars: self.num_vars,
            terms: self.terms.iter().map(|(k, v)| (k.clone(), -v)).collect(),
        }
    }

    fn check_vars(&self, other: &Self) -> Result<(), PolyError> {
        if self.num_vars != other.num_vars {
            return Err(PolyError::VarCountMismatch {
                left: self.num_vars,
                right: other.num_vars,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_vars(other)?;
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.push(k.alpha.clone(), k.pi_power, v.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, PolyError> {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Result<Self, PolyError> {
        self.check_vars(other)?;
        let mut out = Self::zero(self.num_vars);
        for (ka, va) in &self.terms {
            for (kb, vb) in &other.terms {
                let alpha = ka.alpha.iter().zip(&kb.alpha).map(|(a, b)| a + b).collect();
                out.push(alpha, ka.pi_power + kb.pi_power, va * vb);
            }
        }
        Ok(out)
    }

    pub fn combine(&self, other: &Self, op: CombineOp) -> Result<Self, PolyError> {
        match op {
            CombineOp::Add => self.add(other),
            CombineOp::Mul => self.mul(other),
        }
    }

    /// Re-indexes this polynomial into `total_vars` variables, sending local
    /// variable `i` to global variable `var_map[i]`.
    pub fn embed(&self, total_vars: usize, var_map: &[usize]) -> Result<Self, PolyError> {
        if var_map.len() != self.num_vars {
            return Err(PolyError::VarCountMismatch {
                left: self.num_vars,
                right: var_map.len(),
            });
        }
        let mut out = Self::zero(total_vars);
        for (k, v) in &self.terms {
            let mut alpha = vec![0u32; total_vars];
            for (i, &e) in k.alpha.iter().enumerate() {
                alpha[var_map[i]] += e;
            }
            out.push(alpha, k.pi_power, v.clone());
        }
        Ok(out)
    }

    /// Floating evaluation at `x`.
    pub fn eval(&self, x: &[f64]) -> Result<f64, PolyError> {
        self.compile().eval(x)
    }

    /// Rounds every coefficient to `f64` once, for repeated evaluation.
    pub fn compile(&self) -> CompiledPoly {
        CompiledPoly {
            num_vars: self.num_vars,
            terms: self
                .terms
                .iter()
                .map(|(k, v)| (k.alpha.clone(), PiRational::new(v.clone(), k.pi_power).to_f64()))
                .collect(),
        }
    }
}

impl fmt::Display for PiPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (k, v)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "({})", PiRational::new(v.clone(), k.pi_power))?;
            for (j, e) in k.alpha.iter().enumerate() {
                match e {
                    0 => {}
                    1 => write!(f, "·x{}", j + 1)?,
                    e => write!(f, "·x{}^{e}", j + 1)?,
                }
            }
        }
        Ok(())
    }
}

/// A [`PiPolynomial`] with coefficients rounded to `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledPoly {
    num_vars: usize,
    terms: Vec<(Vec<u32>, f64)>,
}

impl CompiledPoly {
    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, PolyError> {
        if x.len() != self.num_vars {
            return Err(PolyError::DimensionMismatch {
                expected: self.num_vars,
                got: x.len(),
            });
        }
        Ok(self.eval_unchecked(x))
    }

    /// Evaluation without the dimension check, for hot quadrature loops.
    pub fn eval_unchecked(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(alpha, c)| alpha.iter().zip(x).fold(*c, |acc, (&e, &xi)| acc * xi.powi(e as i32)))
            .sum()
    }

    /// Sum of absolute term values at `x`; the natural scale for rounding
    /// error in [`CompiledPoly::eval`].
    pub fn eval_abs(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(alpha, c)| {
                alpha
                    .iter()
                    .zip(x)
                    .fold(c.abs(), |acc, (&e, &xi)| acc * xi.abs().powi(e as i32))
            })
            .sum()
    }

    /// Treats the polynomial as a function of `s_i = x_i²` (all exponents
    /// must be even) and returns its value and its partial derivative in
    /// `s_var`. `s` may be negative, which is how `x_i = 2πi` is reached.
    pub fn eval_in_squares(&self, s: &[f64], s_var: usize) -> (f64, f64) {
        let mut value = 0.0;
        let mut deriv = 0.0;
        for (alpha, c) in &self.terms {
            let mut term = *c;
            let mut dterm = *c;
            for (i, (&e, &si)) in alpha.iter().zip(s).enumerate() {
                let half = (e / 2) as i32;
                term *= si.powi(half);
                if i == s_var {
                    dterm *= if half == 0 {
                        0.0
                    } else {
                        half as f64 * si.powi(half - 1)
                    };
                } else {
                    dterm *= si.powi(half);
                }
            }
            value += term;
            deriv += dterm;
        }
        (value, deriv)
    }
}

/// `V_{g,n}` entries keyed by signature.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct VolumeTable {
    entries: BTreeMap<(u32, u32), TableEntry>,
    lints: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TableEntry {
    pub poly: PiPolynomial,
    pub source: String,
}

/// Result of [`VolumeTable::lookup`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lookup<'a> {
    Polynomial(&'a PiPolynomial),
    /// `V_{0,2}(x, y) = δ(x − y)/x`, never a polynomial.
    Cylinder,
    Absent,
}

#[derive(Serialize, Deserialize)]
struct TermDoc {
    alpha: Vec<u32>,
    pi_power: u32,
    num: serde_json::Number,
    den: serde_json::Number,
}

#[derive(Serialize, Deserialize)]
struct EntryDoc {
    g: u32,
    n: u32,
    terms: Vec<TermDoc>,
    #[serde(default)]
    source: String,
}

fn parse_bigint(n: &serde_json::Number) -> Result<BigInt, TableError> {
    let s = n.to_string();
    s.parse::<BigInt>().map_err(|_| TableError::BadInteger(s))
}

fn number(x: &BigInt) -> serde_json::Number {
    x.to_string().parse().expect("integer literal is valid JSON")
}

impl VolumeTable {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts after validating every table invariant.
    pub fn insert(&mut self, g: u32, n: u32, poly: PiPolynomial, source: impl Into<String>) -> Result<(), TableError> {
        if (g, n) == (0, 2) {
            return Err(TableError::CylinderStored);
        }
        if 2 * g + n <= 2 {
            return Err(TableError::Unstable { g, n });
        }
        if self.entries.contains_key(&(g, n)) {
            return Err(TableError::Duplicate { g, n });
        }
        let bound = 2 * (3 * g + n - 3);
        for (m, _) in poly.terms() {
            if m.alpha.len() != n as usize {
                return Err(TableError::ArityMismatch {
                    g,
                    n,
                    alpha: m.alpha.clone(),
                    got: m.alpha.len(),
                });
            }
            if m.alpha.iter().any(|e| e % 2 != 0) {
                return Err(TableError::OddExponent {
                    g,
                    n,
                    alpha: m.alpha.clone(),
                });
            }
            let degree = m.degree();
            if degree > bound {
                return Err(TableError::DegreeOverflow {
                    g,
                    n,
                    alpha: m.alpha.clone(),
                    degree,
                    bound,
                });
            }
            if m.pi_power + degree != bound {
                let lint = format!(
                    "entry ({g},{n}): term {:?} carries π^{} but the grading predicts π^{}",
                    m.alpha,
                    m.pi_power,
                    bound - degree
                );
                log::warn!("{lint}");
                self.lints.push(lint);
            }
        }
        if poly.num_vars() != n as usize {
            return Err(TableError::ArityMismatch {
                g,
                n,
                alpha: vec![],
                got: poly.num_vars(),
            });
        }
        self.entries.insert(
            (g, n),
            TableEntry {
                poly,
                source: source.into(),
            },
        );
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn signatures(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.entries.keys().copied()
    }

    pub fn entry(&self, g: u32, n: u32) -> Option<&TableEntry> {
        self.entries.get(&(g, n))
    }

    /// Warnings raised by the π-grading lint while loading.
    pub fn lints(&self) -> &[String] {
        &self.lints
    }

    pub fn lookup(&self, g: u32, n: u32) -> Result<Lookup<'_>, LookupError> {
        if (g, n) == (0, 2) {
            return Ok(Lookup::Cylinder);
        }
        if 2 * g + n <= 2 {
            return Err(LookupError::UnstableSignature { g, n });
        }
        Ok(match self.entries.get(&(g, n)) {
            Some(e) => Lookup::Polynomial(&e.poly),
            None => Lookup::Absent,
        })
    }

    pub fn from_json(text: &str) -> Result<Self, TableError> {
        let docs: Vec<EntryDoc> = serde_json::from_str(text).map_err(|e| TableError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let mut table = Self::new();
        for doc in docs {
            let (g, n) = (doc.g, doc.n);
            let mut terms = Vec::with_capacity(doc.terms.len());
            for t in doc.terms {
                let num = parse_bigint(&t.num)?;
                let den = parse_bigint(&t.den)?;
                if den.is_zero() {
                    return Err(TableError::ZeroDenominator { g, n, alpha: t.alpha });
                }
                if t.alpha.len() != n as usize {
                    return Err(TableError::ArityMismatch {
                        g,
                        n,
                        got: t.alpha.len(),
                        alpha: t.alpha,
                    });
                }
                terms.push((t.alpha, PiRational::new(BigRational::new(num, den), t.pi_power)));
            }
            let poly = PiPolynomial::from_terms(n as usize, terms).expect("arity checked above");
            table.insert(g, n, poly, doc.source)?;
        }
        Ok(table)
    }

    /// Canonical JSON: entries sorted by `(g, n)`, terms by `α`.
    pub fn to_json(&self) -> String {
        let docs: Vec<EntryDoc> = self
            .entries
            .iter()
            .map(|(&(g, n), e)| EntryDoc {
                g,
                n,
                terms: e
                    .poly
                    .terms()
                    .map(|(m, c)| TermDoc {
                        alpha: m.alpha.clone(),
                        pi_power: m.pi_power,
                        num: number(c.numerator()),
                        den: number(c.denominator()),
                    })
                    .collect(),
                source: e.source.clone(),
            })
            .collect();
        serde_json::to_string_pretty(&docs).expect("table serializes")
    }
}

/// The table shipped with this crate: `V_{g,n}` for `n ≤ 3` up to `g = 8`
/// (`n = 1`), `g = 7` (`n = 2`), `g = 6` (`n = 3`), plus `V_{0,4}`, `V_{0,5}`.
pub fn bundled_table() -> &'static VolumeTable {
    static TABLE: OnceLock<VolumeTable> = OnceLock::new();
    TABLE.get_or_init(|| VolumeTable::from_json(include_str!("../data/volumes.json")).expect("bundled table is valid"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn x2_plus_4pi2() -> PiPolynomial {
        PiPolynomial::from_terms(
            1,
            [
                (vec![2], PiRational::from_ints(1, 1, 0)),
                (vec![0], PiRational::from_ints(4, 1, 2)),
            ],
        )
        .unwrap()
    }

    #[test]
    fn identities() {
        let p = x2_plus_4pi2();
        assert_eq!(p.add(&PiPolynomial::zero(1)).unwrap(), p);
        assert_eq!(p.mul(&PiPolynomial::one(1)).unwrap(), p);
    }

    #[test]
    fn rational_normalization() {
        let c = PiRational::from_ints(6, -4, 3);
        assert_eq!(c.numerator(), &BigInt::from(-3));
        assert_eq!(c.denominator(), &BigInt::from(2));
        let z = PiRational::from_ints(0, 7, 5);
        assert_eq!(z.pi_power(), 0);
        assert_eq!(z.denominator(), &BigInt::from(1));
    }

    #[test]
    fn eval_against_high_precision() {
        // x1^2 * pi^2 at x1 = 2 -> 4 pi^2
        let a = PiPolynomial::monomial(vec![2], PiRational::from_ints(1, 1, 0));
        let b = PiPolynomial::constant(1, PiRational::from_ints(1, 1, 2));
        let v = a.mul(&b).unwrap().eval(&[2.0]).unwrap();
        assert!((v - 39.478_417_604_357_43).abs() < 1e-12);
        let v = x2_plus_4pi2().eval(&[2.0]).unwrap();
        assert!((v - 43.478_417_604_357_43).abs() < 1e-12);
        assert_eq!(PiPolynomial::one(3).eval(&[0.3, 1.0, 7.0]).unwrap(), 1.0);
    }

    #[test]
    fn mismatches_are_reported() {
        let err = PiPolynomial::one(2).add(&PiPolynomial::one(3)).unwrap_err();
        assert_eq!(err, PolyError::VarCountMismatch { left: 2, right: 3 });
        assert!(matches!(
            PiPolynomial::one(2).eval(&[1.0]),
            Err(PolyError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn lookup_rules() {
        let t = bundled_table();
        assert_eq!(t.lookup(0, 3).unwrap(), Lookup::Polynomial(&PiPolynomial::one(3)));
        assert_eq!(t.lookup(0, 2).unwrap(), Lookup::Cylinder);
        assert_eq!(
            t.lookup(0, 1).unwrap_err(),
            LookupError::UnstableSignature { g: 0, n: 1 }
        );
        assert_eq!(t.lookup(40, 1).unwrap(), Lookup::Absent);
    }

    #[test]
    fn bundled_low_genus_closed_forms() {
        let t = bundled_table();
        let v11 = t.entry(1, 1).unwrap().poly.compile();
        for x in [0.0, 1.0, 3.5] {
            let want = (x * x + 4.0 * std::f64::consts::PI.powi(2)) / 48.0;
            assert!((v11.eval(&[x]).unwrap() - want).abs() < 1e-14);
        }
        // V_{1,2} = (4π²+a+b)(12π²+a+b)/192 with a = x², b = y²
        let v12 = t.entry(1, 2).unwrap().poly.compile();
        let pi2 = std::f64::consts::PI.powi(2);
        for (x, y) in [(0.5, 2.0), (3.0, 1.0)] {
            let s = x * x + y * y;
            let want = (4.0 * pi2 + s) * (12.0 * pi2 + s) / 192.0;
            assert!((v12.eval(&[x, y]).unwrap() / want - 1.0).abs() < 1e-14);
        }
        // V_{2,1}(0) = 29 π^8 / 192
        let v21 = t.entry(2, 1).unwrap().poly.compile();
        let want = 29.0 * std::f64::consts::PI.powi(8) / 192.0;
        assert!((v21.eval(&[0.0]).unwrap() / want - 1.0).abs() < 1e-14);
        assert!(t.lints().is_empty());
    }

    #[test]
    fn load_single_entry() {
        let text = r#"[{"g":0,"n":3,"terms":[{"alpha":[0,0,0],"pi_power":0,"num":1,"den":1}],"source":"point"}]"#;
        let t = VolumeTable::from_json(text).unwrap();
        assert_eq!(t.len(), 1);
    }

    #[test]
    fn load_rejections() {
        let odd = r#"[{"g":1,"n":1,"terms":[{"alpha":[3],"pi_power":0,"num":1,"den":1}],"source":""}]"#;
        let err = VolumeTable::from_json(odd).unwrap_err();
        assert!(matches!(err, TableError::OddExponent { g: 1, n: 1, .. }));
        assert!(err.to_string().contains("odd exponent"));

        let deg = r#"[{"g":1,"n":1,"terms":[{"alpha":[4],"pi_power":0,"num":1,"den":1}],"source":""}]"#;
        assert!(matches!(
            VolumeTable::from_json(deg).unwrap_err(),
            TableError::DegreeOverflow {
                degree: 4,
                bound: 2,
                ..
            }
        ));

        let dup = r#"[{"g":0,"n":3,"terms":[],"source":""},{"g":0,"n":3,"terms":[],"source":""}]"#;
        assert_eq!(
            VolumeTable::from_json(dup).unwrap_err(),
            TableError::Duplicate { g: 0, n: 3 }
        );

        let cyl = r#"[{"g":0,"n":2,"terms":[],"source":""}]"#;
        assert_eq!(VolumeTable::from_json(cyl).unwrap_err(), TableError::CylinderStored);

        let bad = "[{\"g\":0,\n \"n\":3,,}]";
        match VolumeTable::from_json(bad).unwrap_err() {
            TableError::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn grading_violation_is_a_lint_not_an_error() {
        let text = r#"[{"g":1,"n":1,"terms":[{"alpha":[0],"pi_power":0,"num":1,"den":1}],"source":""}]"#;
        let t = VolumeTable::from_json(text).unwrap();
        assert_eq!(t.lints().len(), 1);
    }

    #[test]
    fn bundled_round_trip() {
        let t = bundled_table();
        let again = VolumeTable::from_json(&t.to_json()).unwrap();
        assert_eq!(&again, t);
        assert_eq!(again.to_json(), t.to_json());
    }

    fn small_poly(n: usize) -> impl Strategy<Value = PiPolynomial> {
        prop::collection::vec((prop::collection::vec(0u32..3, n), -20i64..20, 1i64..12, 0u32..3), 0..5).prop_map(
            move |ts| {
                PiPolynomial::from_terms(
                    n,
                    ts.into_iter()
                        .map(|(a, num, den, m)| (a, PiRational::from_ints(num, den, m))),
                )
                .unwrap()
            },
        )
    }

    proptest! {
        #[test]
        fn add_then_sub_is_exact(p in small_poly(2), q in small_poly(2)) {
            prop_assert_eq!(p.add(&q).unwrap().sub(&q).unwrap(), p);
        }

        #[test]
        fn eval_is_multiplicative(p in small_poly(2), q in small_poly(2),
                                  x in 0.0f64..3.0, y in 0.0f64..3.0) {
            let pq = p.mul(&q).unwrap().eval(&[x, y]).unwrap();
            let prod = p.eval(&[x, y]).unwrap() * q.eval(&[x, y]).unwrap();
            let scale = p.compile().eval_abs(&[x, y]) * q.compile().eval_abs(&[x, y]);
            prop_assert!((pq - prod).abs() <= 1e-12 * scale);
        }

        #[test]
        fn eval_is_additive(p in small_poly(2), q in small_poly(2),
                            x in 0.0f64..3.0, y in 0.0f64..3.0) {
            let s = p.add(&q).unwrap().eval(&[x, y]).unwrap();
            let parts = p.eval(&[x, y]).unwrap() + q.eval(&[x, y]).unwrap();
            let scale = p.compile().eval_abs(&[x, y]) + q.compile().eval_abs(&[x, y]);
            prop_assert!((s - parts).abs() <= 1e-14 * scale);
        }

        #[test]
        fn injected_odd_exponents_are_rejected(e in 0u32..3, slot in 0usize..2) {
            let mut alpha = vec![2u32, 0];
            alpha[slot] = 2 * e + 1;
            let text = format!(
                r#"[{{"g":1,"n":2,"terms":[{{"alpha":{:?},"pi_power":0,"num":1,"den":3}}],"source":""}}]"#,
                alpha
            );
            let rejected = matches!(VolumeTable::from_json(&text), Err(TableError::OddExponent { .. }));
            prop_assert!(rejected);
        }

        #[test]
        fn injected_degree_overflow_is_rejected(extra in 1u32..4) {
            // bound for (1,2) is 4
            let text = format!(
                r#"[{{"g":1,"n":2,"terms":[{{"alpha":[{},0],"pi_power":0,"num":1,"den":3}}],"source":""}}]"#,
                4 + 2 * extra
            );
            let rejected = matches!(VolumeTable::from_json(&text), Err(TableError::DegreeOverflow { .. }));
            prop_assert!(rejected);
        }
    }
}
