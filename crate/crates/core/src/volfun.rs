//! Volume functions of local types.
//!
//! For a filling signature `S` and ambient genus `g` we enumerate the ways
//! `S` embeds in a closed genus-`g` surface ([`enumerate_realizations`]),
//! assemble `Φ_g^S(x) = x_1⋯x_n Σ_R Π V_{g_i,n_i}(x_{I_i})`
//! ([`phi_s`]) and integrate it over length level sets. Cylinder blocks
//! `V_{0,2}(x, y) = δ(x − y)/x` are kept symbolic as Dirac pairs and
//! integrated on their own lower-dimensional level sets.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::FillingSignature;
use crate::hypgeom::{acosh_stable, half};
use crate::pipoly::{CompiledPoly, Lookup, PiPolynomial, VolumeTable};
use crate::quad::{self, QuadResult};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VolError {
    #[error("volume table lacks entries {0:?}")]
    MissingEntries(Vec<(u32, u32)>),
    #[error("ambient genus must be at least 2, got {0}")]
    GenusTooSmall(u32),
    #[error("level set is empty: M(ℓ) = {bound} ≤ 1 at ℓ = {ell}")]
    EmptyDomain { ell: f64, bound: f64 },
    #[error("ℓ must be positive and finite, got {0}")]
    BadLength(f64),
    #[error("need at least {needed} genera for orders {k_min}..={k_max}, got {got}")]
    TooFewGenera {
        needed: usize,
        got: usize,
        k_min: i32,
        k_max: i32,
    },
    #[error("sample for g = {g} has {got} values, grid has {expected}")]
    GridMismatch { g: u32, expected: usize, got: usize },
    #[error("design matrix is ill-conditioned (condition number {0:.3e})")]
    IllConditioned(f64),
    #[error("the form {form:?} needs Φ symmetric in x1 and x2")]
    NotSymmetric { form: PopForm },
    #[error("symmetry factor n(T) must be positive")]
    BadSymmetryFactor,
}

/// One complementary piece: boundary labels `indices` (1-based, increasing)
/// on a surface of genus `genus`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Block {
    pub indices: Vec<usize>,
    pub genus: u32,
}

impl Block {
    pub fn n(&self) -> u32 {
        self.indices.len() as u32
    }

    pub fn is_cylinder(&self) -> bool {
        self.genus == 0 && self.indices.len() == 2
    }

    /// `2g − 2 + n`; zero for a cylinder.
    pub fn euler_abs(&self) -> i64 {
        2 * self.genus as i64 - 2 + self.indices.len() as i64
    }

    fn vars(&self) -> String {
        self.indices
            .iter()
            .map(|i| format!("x{i}"))
            .collect::<Vec<_>>()
            .join(",")
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_cylinder() {
            write!(f, "delta({})", self.vars())
        } else {
            write!(f, "V_{{{},{}}}({})", self.genus, self.n(), self.vars())
        }
    }
}

/// Blocks ordered by their smallest label.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Realization {
    pub blocks: Vec<Block>,
}

impl Realization {
    pub fn q(&self) -> usize {
        self.blocks.len()
    }

    pub fn dirac_pairs(&self) -> Vec<(usize, usize)> {
        self.blocks
            .iter()
            .filter(|b| b.is_cylinder())
            .map(|b| (b.indices[0], b.indices[1]))
            .collect()
    }
}

impl fmt::Display for Realization {
    /// Factors joined by `*`, e.g. `V_{1,2}(x1,x2)*V_{2,1}(x3)`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.blocks.iter().map(|b| b.to_string()).collect();
        f.write_str(&parts.join("*"))
    }
}

fn is_allowed(genus: u32, n: usize) -> bool {
    2 * genus as i64 - 2 + n as i64 > 0 || (genus == 0 && n == 2)
}

/// All set partitions of `{1..n}` with blocks ordered by minimum.
fn set_partitions(n: usize) -> Vec<Vec<Vec<usize>>> {
    fn go(k: usize, n: usize, cur: &mut Vec<Vec<usize>>, out: &mut Vec<Vec<Vec<usize>>>) {
        if k > n {
            out.push(cur.clone());
            return;
        }
        for b in 0..cur.len() {
            cur[b].push(k);
            go(k + 1, n, cur, out);
            cur[b].pop();
        }
        cur.push(vec![k]);
        go(k + 1, n, cur, out);
        cur.pop();
    }
    let mut out = Vec::new();
    go(1, n, &mut Vec::new(), &mut out);
    out
}

/// `R_g(S)`: partitions of the boundary labels of `S` with genera such that
/// every piece is stable or a cylinder and the Euler characteristics add up
/// to that of a closed genus-`g` surface.
pub fn enumerate_realizations(sig: FillingSignature, g: u32) -> Vec<Realization> {
    let budget = (2 * g as i64 - 2) - sig.euler_abs();
    let mut out = Vec::new();
    if budget < 0 {
        return out;
    }
    for partition in set_partitions(sig.n as usize) {
        let mut genera = vec![0u32; partition.len()];
        assign_genera(&partition, 0, budget, &mut genera, &mut out);
    }
    out.sort();
    out
}

fn assign_genera(
    partition: &[Vec<usize>],
    i: usize,
    remaining: i64,
    genera: &mut Vec<u32>,
    out: &mut Vec<Realization>,
) {
    if i == partition.len() {
        if remaining == 0 {
            out.push(Realization {
                blocks: partition
                    .iter()
                    .zip(genera.iter())
                    .map(|(ix, &genus)| Block {
                        indices: ix.clone(),
                        genus,
                    })
                    .collect(),
            });
        }
        return;
    }
    let n = partition[i].len() as i64;
    let mut genus = 0u32;
    loop {
        let e = 2 * genus as i64 - 2 + n;
        if e > remaining {
            break;
        }
        if is_allowed(genus, n as usize) {
            genera[i] = genus;
            assign_genera(partition, i + 1, remaining - e, genera, out);
        }
        genus += 1;
    }
}

/// One realization's contribution: `x_1⋯x_n · Π δ-pairs · poly(x)`.
#[derive(Clone, Debug)]
pub struct PhiTerm {
    pub realization: Realization,
    pub dirac_pairs: Vec<(usize, usize)>,
    /// Product of the non-cylinder volumes, as a polynomial in all `n_S` variables.
    pub poly: PiPolynomial,
}

/// `Φ_g^S` as a symbolic sum over realizations.
#[derive(Clone, Debug)]
pub struct PhiExpression {
    pub sig: FillingSignature,
    pub g: u32,
    pub terms: Vec<PhiTerm>,
}

/// Terms sharing the same Dirac pairs, with their polynomials summed.
#[derive(Clone, Debug)]
pub struct PhiGroup {
    pub dirac_pairs: Vec<(usize, usize)>,
    pub poly: CompiledPoly,
    n: usize,
}

impl PhiGroup {
    /// Value with the prefactor `x_1⋯x_n` divided by `x_i` for every pair
    /// `(i, i′)`, i.e. the weight multiplying `Π δ(x_i − x_{i′})`. The
    /// caller supplies `x` with `x_i = x_{i′}`.
    pub fn eval_reduced(&self, x: &[f64]) -> f64 {
        let mut pre = 1.0;
        for (k, xk) in x.iter().enumerate().take(self.n) {
            if !self.dirac_pairs.iter().any(|&(i, _)| i == k + 1) {
                pre *= xk;
            }
        }
        pre * self.poly.eval_unchecked(x)
    }
}

impl PhiExpression {
    pub fn n(&self) -> usize {
        self.sig.n as usize
    }

    /// Term strings, one per realization, in enumeration order.
    pub fn rendered_terms(&self) -> Vec<String> {
        self.terms.iter().map(|t| t.realization.to_string()).collect()
    }

    pub fn groups(&self) -> Vec<PhiGroup> {
        let mut by_pairs: Vec<(Vec<(usize, usize)>, PiPolynomial)> = Vec::new();
        for t in &self.terms {
            match by_pairs.iter_mut().find(|(p, _)| *p == t.dirac_pairs) {
                Some((_, poly)) => *poly = poly.add(&t.poly).expect("same arity"),
                None => by_pairs.push((t.dirac_pairs.clone(), t.poly.clone())),
            }
        }
        by_pairs.sort_by(|a, b| a.0.cmp(&b.0));
        by_pairs
            .into_iter()
            .map(|(dirac_pairs, poly)| PhiGroup {
                dirac_pairs,
                poly: poly.compile(),
                n: self.n(),
            })
            .collect()
    }

    /// The Dirac-free part `x_1⋯x_n Σ poly(x)` at `x`.
    pub fn eval_regular(&self, x: &[f64]) -> f64 {
        self.groups()
            .iter()
            .filter(|g| g.dirac_pairs.is_empty())
            .map(|g| g.eval_reduced(x))
            .sum()
    }
}

fn table_poly<'a>(table: &'a VolumeTable, g: u32, n: u32, missing: &mut Vec<(u32, u32)>) -> Option<&'a PiPolynomial> {
    match table.lookup(g, n) {
        Ok(Lookup::Polynomial(p)) => Some(p),
        _ => {
            if !missing.contains(&(g, n)) {
                missing.push((g, n));
            }
            None
        }
    }
}

/// Builds `Φ_g^S` from the table.
pub fn phi_s(table: &VolumeTable, sig: FillingSignature, g: u32) -> Result<PhiExpression, VolError> {
    if g < 2 {
        return Err(VolError::GenusTooSmall(g));
    }
    let n = sig.n as usize;
    let mut missing = Vec::new();
    let mut terms = Vec::new();
    for realization in enumerate_realizations(sig, g) {
        let mut poly = PiPolynomial::one(n);
        for b in realization.blocks.iter().filter(|b| !b.is_cylinder()) {
            if let Some(v) = table_poly(table, b.genus, b.n(), &mut missing) {
                let map: Vec<usize> = b.indices.iter().map(|i| i - 1).collect();
                let embedded = v.embed(n, &map).expect("arity matches block size");
                poly = poly.mul(&embedded).expect("same arity");
            }
        }
        terms.push(PhiTerm {
            dirac_pairs: realization.dirac_pairs(),
            realization,
            poly,
        });
    }
    if !missing.is_empty() {
        missing.sort();
        return Err(VolError::MissingEntries(missing));
    }
    Ok(PhiExpression { sig, g, terms })
}

fn check_length(ell: f64) -> Result<(), VolError> {
    if ell > 0.0 && ell.is_finite() {
        Ok(())
    } else {
        Err(VolError::BadLength(ell))
    }
}

/// `ℓ V_{g−1,2}(ℓ,ℓ) + ℓ Σ_{i=1}^{g−1} V_{i,1}(ℓ) V_{g−i,1}(ℓ)`.
pub fn v_simple(table: &VolumeTable, g: u32, ell: f64) -> Result<f64, VolError> {
    if g < 2 {
        return Err(VolError::GenusTooSmall(g));
    }
    check_length(ell)?;
    let mut missing = Vec::new();
    let connected = table_poly(table, g - 1, 2, &mut missing).map(|p| p.compile());
    let ones: Vec<Option<CompiledPoly>> = (1..g)
        .map(|i| table_poly(table, i, 1, &mut missing).map(|p| p.compile()))
        .collect();
    if !missing.is_empty() {
        missing.sort();
        return Err(VolError::MissingEntries(missing));
    }
    let v1 = |i: u32| ones[i as usize - 1].as_ref().expect("checked").eval_unchecked(&[ell]);
    let mut sum = connected.expect("checked").eval_unchecked(&[ell, ell]);
    for i in 1..g {
        sum += v1(i) * v1(g - i);
    }
    Ok(ell * sum)
}

/// The same quantity through `Φ_g` for the cylinder signature: the level set
/// `x_1 = x_2 = ℓ` of `∬ Φ(x) δ(x_1 − x_2)/x_1` leaves `Φ(ℓ, ℓ)/ℓ`.
pub fn v_simple_via_phi(phi: &PhiExpression, ell: f64) -> Result<f64, VolError> {
    check_length(ell)?;
    Ok(phi.eval_regular(&[ell, ell]) / ell)
}

/// Closed volume `V_g` from the dilaton relation
/// `∂V_{g,1}/∂x (2πi) = 2πi (2g − 2) V_g`, written in `s = x²`.
pub fn closed_volume(table: &VolumeTable, g: u32) -> Result<f64, VolError> {
    if g < 2 {
        return Err(VolError::GenusTooSmall(g));
    }
    let mut missing = Vec::new();
    let p = table_poly(table, g, 1, &mut missing).ok_or(VolError::MissingEntries(missing))?;
    let s = -4.0 * std::f64::consts::PI.powi(2);
    let (_, ds) = p.compile().eval_in_squares(&[s], 0);
    Ok(2.0 * ds / (2.0 * g as f64 - 2.0))
}

/// Which parametrization of the figure-eight level set to integrate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PopForm {
    /// Integrate over `(x1, x2)`, solve for `x3`.
    Primary,
    /// Integrate over `(x2, x3)`, solve for `x1`.
    Alternate,
    /// Primary form on `x1 ≤ x2`, doubled.
    HalfDomain,
}

/// Level set `cosh(ℓ/2) = 2cosh(x1/2)cosh(x2/2) + cosh(x3/2)`.
#[derive(Clone, Copy, Debug)]
struct EightLevel {
    big_c: f64,
    sinh_half_ell: f64,
    /// `M(ℓ) = (cosh(ℓ/2) − 1)/2`
    m: f64,
}

impl EightLevel {
    fn new(ell: f64) -> Result<Self, VolError> {
        check_length(ell)?;
        let big_c = half(ell).cosh();
        let m = 0.5 * (big_c - 1.0);
        if m <= 1.0 {
            return Err(VolError::EmptyDomain { ell, bound: m });
        }
        Ok(Self {
            big_c,
            sinh_half_ell: half(ell).sinh(),
            m,
        })
    }
}

/// `(x, sinh(x/2))` for `cosh(x/2) = 1 + u`, accurate for small `u ≥ 0`.
fn from_cosh_excess(u: f64) -> (f64, f64) {
    let u = u.max(0.0);
    (2.0 * acosh_stable(1.0 + u), (u * (u + 2.0)).sqrt())
}

fn ch(x: f64) -> f64 {
    half(x).cosh()
}

/// `V_g^{P}(ℓ)` for the figure-eight: level-set integral of `Φ_g^{(0,3)}`
/// divided by the symmetry factor `n_t`. `tol` is relative.
pub fn v_pop_type(phi: &PhiExpression, ell: f64, n_t: u32, form: PopForm, tol: f64) -> Result<QuadResult, VolError> {
    if n_t == 0 {
        return Err(VolError::BadSymmetryFactor);
    }
    let lv = EightLevel::new(ell)?;
    let groups = phi.groups();
    if form == PopForm::HalfDomain && !symmetric_in_12(&groups) {
        return Err(VolError::NotSymmetric { form });
    }
    // a coarse pass fixes the absolute tolerance on the integrand scale
    let scale = groups
        .iter()
        .map(|g| group_integral(g, &lv, form, f64::INFINITY).value.abs())
        .sum::<f64>()
        .max(f64::MIN_POSITIVE);
    let abs_tol = tol * scale;
    let mut total = QuadResult { value: 0.0, err: 0.0 };
    for g in &groups {
        total = total + group_integral(g, &lv, form, abs_tol / groups.len() as f64);
    }
    Ok(total * (1.0 / n_t as f64))
}

fn symmetric_in_12(groups: &[PhiGroup]) -> bool {
    let probe = [(0.7, 2.3, 1.1), (3.1, 0.4, 2.2)];
    groups.iter().filter(|g| g.dirac_pairs.is_empty()).all(|g| {
        probe.iter().all(|&(a, b, c)| {
            let u = g.eval_reduced(&[a, b, c]);
            let v = g.eval_reduced(&[b, a, c]);
            (u - v).abs() <= 1e-12 * u.abs().max(v.abs())
        })
    })
}

fn group_integral(g: &PhiGroup, lv: &EightLevel, form: PopForm, tol: f64) -> QuadResult {
    match (g.dirac_pairs.as_slice(), form) {
        ([], PopForm::Primary) => regular_primary(g, lv, tol),
        ([], PopForm::HalfDomain) => regular_half(g, lv, tol),
        ([], PopForm::Alternate) => regular_alternate(g, lv, tol),
        ([pair], PopForm::Alternate) => dirac_alternate(g, *pair, lv, tol),
        ([pair], _) => dirac_primary(g, *pair, lv, tol),
        _ => unreachable!("a pair of pants has at most one cylinder block"),
    }
}

fn regular_primary(g: &PhiGroup, lv: &EightLevel, tol: f64) -> QuadResult {
    let x1_max = 2.0 * acosh_stable(lv.m);
    quad::integrate_sqrt_end(
        |x1| {
            let c1 = ch(x1);
            let x2_max = 2.0 * acosh_stable(lv.m / c1);
            quad::integrate_sqrt_end(|x2| primary_integrand(g, lv, x1, c1, x2), x2_max, tol).value
        },
        x1_max,
        tol,
    )
}

fn regular_half(g: &PhiGroup, lv: &EightLevel, tol: f64) -> QuadResult {
    let x_diag = 2.0 * acosh_stable(lv.m.sqrt());
    quad::integrate_sqrt_end(
        |x1| {
            let c1 = ch(x1);
            let x2_max = 2.0 * acosh_stable(lv.m / c1);
            quad::integrate_sqrt_upper(|x2| primary_integrand(g, lv, x1, c1, x2), x1, x2_max, tol).value
        },
        x_diag,
        tol,
    ) * 2.0
}

/// `Φ(x1, x2, x3) · sinh(ℓ/2) / sinh(x3/2)` with `x3` solved on the level set.
fn primary_integrand(g: &PhiGroup, lv: &EightLevel, x1: f64, c1: f64, x2: f64) -> f64 {
    // cosh(x3/2) − 1 = 2(M − c1 c2)
    let (x3, s3) = from_cosh_excess(2.0 * (lv.m - c1 * ch(x2)));
    if s3 == 0.0 {
        return 0.0;
    }
    g.eval_reduced(&[x1, x2, x3]) * lv.sinh_half_ell / s3
}

fn regular_alternate(g: &PhiGroup, lv: &EightLevel, tol: f64) -> QuadResult {
    let x2_max = 2.0 * acosh_stable(lv.m);
    quad::integrate_sqrt_end(
        |x2| {
            let c2 = ch(x2);
            let x3_max = 2.0 * acosh_stable(lv.big_c - 2.0 * c2);
            quad::integrate_sqrt_end(
                |x3| {
                    // cosh(x1/2) − 1 = (C − cosh(x3/2) − 2c2) / (2c2)
                    let (x1, s1) = from_cosh_excess((lv.big_c - ch(x3) - 2.0 * c2) / (2.0 * c2));
                    if s1 == 0.0 {
                        return 0.0;
                    }
                    g.eval_reduced(&[x1, x2, x3]) * lv.sinh_half_ell / (2.0 * c2 * s1)
                },
                x3_max,
                tol,
            )
            .value
        },
        x2_max,
        tol,
    )
}

fn dirac_primary(g: &PhiGroup, pair: (usize, usize), lv: &EightLevel, tol: f64) -> QuadResult {
    match pair {
        (1, 2) => {
            // x1 = x2 = t, solve x3
            let t_max = 2.0 * acosh_stable(lv.m.sqrt());
            quad::integrate_sqrt_end(
                |t| {
                    let c = ch(t);
                    let (x3, s3) = from_cosh_excess(2.0 * (lv.m - c * c));
                    if s3 == 0.0 {
                        return 0.0;
                    }
                    g.eval_reduced(&[t, t, x3]) * lv.sinh_half_ell / s3
                },
                t_max,
                tol,
            )
        }
        (i, 3) => {
            // x_i = x3 = t, solve the remaining x_k from 2c(t)c_k + c(t) = C
            let k = 3 - i;
            let t_max = 2.0 * acosh_stable(lv.big_c / 3.0);
            quad::integrate_sqrt_end(
                |t| {
                    let c = ch(t);
                    let (xk, sk) = from_cosh_excess(0.5 * (lv.big_c / c - 3.0));
                    if sk == 0.0 {
                        return 0.0;
                    }
                    let mut x = [t; 3];
                    x[k - 1] = xk;
                    g.eval_reduced(&x) * lv.sinh_half_ell / (2.0 * c * sk)
                },
                t_max,
                tol,
            )
        }
        _ => unreachable!("pairs are ordered"),
    }
}

fn dirac_alternate(g: &PhiGroup, pair: (usize, usize), lv: &EightLevel, tol: f64) -> QuadResult {
    match pair {
        (1, 2) => {
            // parametrize by x3; 2cosh²(t/2) = C − cosh(x3/2)
            let x3_max = 2.0 * acosh_stable(lv.big_c - 2.0);
            quad::integrate_sqrt_end(
                |x3| {
                    let c = (0.5 * (lv.big_c - ch(x3))).sqrt();
                    let (t, s) = from_cosh_excess((0.5 * (lv.big_c - ch(x3) - 2.0)) / (c + 1.0));
                    if s == 0.0 {
                        return 0.0;
                    }
                    g.eval_reduced(&[t, t, x3]) * lv.sinh_half_ell / (4.0 * c * s)
                },
                x3_max,
                tol,
            )
        }
        (i, 3) => {
            // parametrize by the free x_k; cosh(t/2)(2c_k + 1) = C
            let k = 3 - i;
            let xk_max = 2.0 * acosh_stable(lv.m);
            quad::integrate_sqrt_end(
                |xk| {
                    let d = 2.0 * ch(xk) + 1.0;
                    let (t, s) = from_cosh_excess((lv.big_c - d) / d);
                    if s == 0.0 {
                        return 0.0;
                    }
                    let mut x = [t; 3];
                    x[k - 1] = xk;
                    g.eval_reduced(&x) * lv.sinh_half_ell / (d * s)
                },
                xk_max,
                tol,
            )
        }
        _ => unreachable!("pairs are ordered"),
    }
}

/// Least-squares fit of `Σ_{k=k_min}^{k_max} f_k(ℓ) g^{−k}` per grid point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpansionFit {
    pub k_min: i32,
    pub k_max: i32,
    pub ell: Vec<f64>,
    pub genera: Vec<u32>,
    /// `coefficients[k − k_min][j] = f_k(ell[j])`
    pub coefficients: Vec<Vec<f64>>,
    /// Root-mean-square residual per grid point.
    pub residuals: Vec<f64>,
    pub residual: f64,
    pub condition_number: f64,
}

/// Above this condition number the fit is refused.
pub const MAX_CONDITION: f64 = 1e13;

pub fn expansion_fit(
    samples: &[(u32, Vec<f64>)],
    ell: &[f64],
    k_max: i32,
    k_min: i32,
) -> Result<ExpansionFit, VolError> {
    let orders = (k_max - k_min + 1).max(0) as usize;
    let needed = orders + 1;
    if samples.len() < needed || orders == 0 {
        return Err(VolError::TooFewGenera {
            needed,
            got: samples.len(),
            k_min,
            k_max,
        });
    }
    for (g, vals) in samples {
        if vals.len() != ell.len() {
            return Err(VolError::GridMismatch {
                g: *g,
                expected: ell.len(),
                got: vals.len(),
            });
        }
    }
    // columns scaled to unit max so the condition number reflects the model
    let raw = DMatrix::from_fn(samples.len(), orders, |i, k| {
        (samples[i].0 as f64).powi(-(k_min + k as i32))
    });
    let col_scale: Vec<f64> = (0..orders)
        .map(|k| raw.column(k).amax().max(f64::MIN_POSITIVE))
        .collect();
    let a = DMatrix::from_fn(samples.len(), orders, |i, k| raw[(i, k)] / col_scale[k]);
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let smin = svd.singular_values.min();
    let condition_number = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if condition_number > MAX_CONDITION {
        return Err(VolError::IllConditioned(condition_number));
    }
    let mut coefficients = vec![vec![0.0; ell.len()]; orders];
    let mut residuals = Vec::with_capacity(ell.len());
    for j in 0..ell.len() {
        let b = DVector::from_iterator(samples.len(), samples.iter().map(|(_, v)| v[j]));
        let sol = svd.solve(&b, 0.0).expect("u and v were computed");
        let r = &a * &sol - &b;
        residuals.push((r.norm_squared() / samples.len() as f64).sqrt());
        for k in 0..orders {
            coefficients[k][j] = sol[k] / col_scale[k];
        }
    }
    Ok(ExpansionFit {
        k_min,
        k_max,
        ell: ell.to_vec(),
        genera: samples.iter().map(|s| s.0).collect(),
        coefficients,
        residual: residuals.iter().cloned().fold(0.0, f64::max),
        residuals,
        condition_number,
    })
}

/// Row of a volume-function curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub ell: f64,
    pub value: f64,
    pub err_estimate: f64,
    pub g: u32,
    #[serde(rename = "type")]
    pub kind: String,
}

pub fn curve_csv(rows: &[CurveRow]) -> String {
    let mut s = String::from("ell,value,err_estimate,g,type\n");
    for r in rows {
        s.push_str(&format!(
            "{},{:e},{:e},{},{}\n",
            r.ell, r.value, r.err_estimate, r.g, r.kind
        ));
    }
    s
}
