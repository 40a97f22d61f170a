//! Friedman–Ramanujan functions: an exact principal part `p(ℓ)e^ℓ` plus a
//! remainder sampled on a uniform grid starting at zero.
//!
//! The operators `P = ∫_0^x` and `L = Id − P` act on the principal part in
//! closed form and on the remainder by the composite trapezoid rule.

pub mod expr;
pub mod pseudo;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quad::RootError;

pub use expr::{Expr, ParseError};
pub use pseudo::{
    class_e_check, comparison_l0, pseudo_convolve, ClassEEntry, ClassEReport, PseudoConvSpec, PseudoSample,
};

pub const DEFAULT_STEP: f64 = 1e-3;
pub const DEFAULT_L_MAX: f64 = 40.0;
pub const MIN_L_MAX: f64 = 10.0;
/// Windowed growth regressions start here.
pub const GROWTH_FROM: f64 = 5.0;
/// Largest slope of the normalized envelope still counted as membership.
pub const GROWTH_TOL: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrError {
    #[error("grid step must be positive and finite, got {0}")]
    BadStep(f64),
    #[error("grid must reach at least {MIN_L_MAX}, reaches {0}")]
    ShortGrid(f64),
    #[error("principal part has degree {degree} but the declared K is {k}")]
    PrincipalDegree { degree: usize, k: usize },
    #[error("grids differ: step {0} vs {1}, {2} vs {3} samples")]
    GridMismatch(f64, f64, usize, usize),
    #[error("non-finite remainder sample at index {0}")]
    NonFinite(usize),
    #[error("argument {x} lies outside the grid [0, {l_max}]")]
    OutsideGrid { x: f64, l_max: f64 },
    #[error("expected {expected} functions or variables, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("cutoff a must be positive, got {0}")]
    BadCutoff(f64),
    #[error("dh/dx1 = {value:e} at {at:?} is not bounded away from zero")]
    DegenerateLevel { value: f64, at: Vec<f64> },
    #[error("level root at l = {ell} failed on bracket [{lo}, {hi}]: {source}")]
    Root {
        ell: f64,
        lo: f64,
        hi: f64,
        #[source]
        source: RootError,
    },
    #[error("level set {{h = {0}}} is empty")]
    EmptyLevelSet(f64),
    #[error("{what} is not finite at {at:?}")]
    NonFiniteCallable { what: &'static str, at: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FRFunction {
    /// Ascending coefficients of `p`.
    pub principal: Vec<f64>,
    /// `r(kh)` for `k = 0..len`.
    pub remainder: Vec<f64>,
    pub step: f64,
    pub k: usize,
    pub n: usize,
}

impl FRFunction {
    pub fn new(principal: Vec<f64>, remainder: Vec<f64>, step: f64, k: usize, n: usize) -> Result<Self, FrError> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(FrError::BadStep(step));
        }
        let l_max = remainder.len().saturating_sub(1) as f64 * step;
        if remainder.is_empty() || l_max < MIN_L_MAX - 1e-9 {
            return Err(FrError::ShortGrid(l_max));
        }
        if let Some(i) = remainder.iter().position(|v| !v.is_finite()) {
            return Err(FrError::NonFinite(i));
        }
        let principal = trim(principal);
        if !principal.is_empty() && principal.len() > k {
            return Err(FrError::PrincipalDegree {
                degree: principal.len() - 1,
                k,
            });
        }
        Ok(Self {
            principal,
            remainder,
            step,
            k,
            n,
        })
    }

    pub fn sample<F: Fn(f64) -> f64>(
        principal: Vec<f64>,
        remainder: F,
        step: f64,
        l_max: f64,
        k: usize,
        n: usize,
    ) -> Result<Self, FrError> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(FrError::BadStep(step));
        }
        let len = grid_len(step, l_max);
        let rem = (0..len).map(|i| remainder(i as f64 * step)).collect();
        Self::new(principal, rem, step, k, n)
    }

    /// Splits full samples `f(kh)` into principal and remainder by fitting a
    /// degree `K − 1` polynomial to `f e^{−ℓ}` on the top quarter of the grid.
    /// The fit need not be exact: any polynomial error is annihilated by `L^K`.
    pub fn from_samples(values: Vec<f64>, step: f64, k: usize, n: usize) -> Result<Self, FrError> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(FrError::BadStep(step));
        }
        if k == 0 || values.len() < 4 * k {
            return Self::new(Vec::new(), values, step, k, n);
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(FrError::NonFinite(i));
        }
        let l_max = (values.len() - 1) as f64 * step;
        let start = values.len() * 3 / 4;
        let rows = values.len() - start;
        let mut a = DMatrix::<f64>::zeros(rows, k);
        let mut b = DVector::<f64>::zeros(rows);
        for (row, i) in (start..values.len()).enumerate() {
            let ell = i as f64 * step;
            let t = ell / l_max;
            let mut tp = 1.0;
            for j in 0..k {
                a[(row, j)] = tp;
                tp *= t;
            }
            b[row] = values[i] * (-ell).exp();
        }
        let sol = a
            .svd(true, true)
            .solve(&b, 1e-14)
            .map_err(|_| FrError::NonFinite(start))?;
        // back from t = ℓ/ℓ_max to ℓ
        let principal: Vec<f64> = (0..k).map(|j| sol[j] / l_max.powi(j as i32)).collect();
        let remainder = values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let ell = i as f64 * step;
                v - poly_eval(&principal, ell) * ell.exp()
            })
            .collect();
        Self::new(principal, remainder, step, k, n)
    }

    pub fn zero(step: f64, l_max: f64) -> Result<Self, FrError> {
        Self::sample(Vec::new(), |_| 0.0, step, l_max, 0, 0)
    }

    pub fn len(&self) -> usize {
        self.remainder.len()
    }

    pub fn is_empty(&self) -> bool {
        self.remainder.is_empty()
    }

    pub fn l_max(&self) -> f64 {
        (self.len() - 1) as f64 * self.step
    }

    pub fn grid_point(&self, i: usize) -> f64 {
        i as f64 * self.step
    }

    pub fn with_declared(mut self, k: usize, n: usize) -> Result<Self, FrError> {
        if !self.principal.is_empty() && self.principal.len() > k {
            return Err(FrError::PrincipalDegree {
                degree: self.principal.len() - 1,
                k,
            });
        }
        self.k = k;
        self.n = n;
        Ok(self)
    }

    pub fn principal_at(&self, ell: f64) -> f64 {
        poly_eval(&self.principal, ell)
    }

    /// Four-point Lagrange interpolation of the remainder.
    pub fn remainder_at(&self, x: f64) -> Result<f64, FrError> {
        let l_max = self.l_max();
        if !(x >= -1e-12 && x <= l_max * (1.0 + 1e-12)) {
            return Err(FrError::OutsideGrid { x, l_max });
        }
        let u = (x / self.step).max(0.0);
        let last = self.len() - 1;
        let i = (u.floor() as usize).min(last);
        let frac = u - i as f64;
        if frac == 0.0 {
            return Ok(self.remainder[i]);
        }
        let base = i.saturating_sub(1).min(last.saturating_sub(3));
        let t = u - base as f64;
        let r = &self.remainder;
        let (y0, y1, y2, y3) = (r[base], r[base + 1], r[base + 2], r[base + 3]);
        Ok(
            -y0 * (t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0 + y1 * t * (t - 2.0) * (t - 3.0) / 2.0
                - y2 * t * (t - 1.0) * (t - 3.0) / 2.0
                + y3 * t * (t - 1.0) * (t - 2.0) / 6.0,
        )
    }

    pub fn eval(&self, x: f64) -> Result<f64, FrError> {
        Ok(self.principal_at(x) * x.exp() + self.remainder_at(x)?)
    }

    /// Full values on the grid.
    pub fn values(&self) -> Vec<f64> {
        self.remainder
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let ell = self.grid_point(i);
                self.principal_at(ell) * ell.exp() + r
            })
            .collect()
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.principal = trim(out.principal.iter().map(|v| v * c).collect());
        out.remainder.iter_mut().for_each(|v| *v *= c);
        out
    }

    pub fn add(&self, other: &Self) -> Result<Self, FrError> {
        same_grid(self, other)?;
        Ok(Self {
            principal: poly_add(&self.principal, &other.principal),
            remainder: self
                .remainder
                .iter()
                .zip(&other.remainder)
                .map(|(a, b)| a + b)
                .collect(),
            step: self.step,
            k: self.k.max(other.k),
            n: self.n.max(other.n),
        })
    }
}

fn grid_len(step: f64, l_max: f64) -> usize {
    (l_max / step).round().max(0.0) as usize + 1
}

fn same_grid(a: &FRFunction, b: &FRFunction) -> Result<(), FrError> {
    let close = (a.step - b.step).abs() <= 1e-12 * a.step.abs().max(b.step.abs());
    if !close || a.len() != b.len() {
        return Err(FrError::GridMismatch(a.step, b.step, a.len(), b.len()));
    }
    Ok(())
}

fn trim(mut p: Vec<f64>) -> Vec<f64> {
    while p.last() == Some(&0.0) {
        p.pop();
    }
    p
}

pub fn poly_eval(p: &[f64], x: f64) -> f64 {
    p.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn poly_derivative(p: &[f64]) -> Vec<f64> {
    p.iter().enumerate().skip(1).map(|(i, c)| i as f64 * c).collect()
}

fn poly_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len().max(b.len())];
    for (i, c) in a.iter().enumerate() {
        out[i] += c;
    }
    for (i, c) in b.iter().enumerate() {
        out[i] += c;
    }
    trim(out)
}

/// `∫ p e^x = q e^x` with `q = Σ_k (−1)^k p^(k)`; also returns `p − q`
/// accumulated from the derivatives alone so that constants cancel exactly.
fn antiderivative_parts(p: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut q = p.to_vec();
    let mut diff = Vec::new();
    let mut d = poly_derivative(p);
    let mut sign = 1.0;
    while !d.is_empty() {
        // q gets (−1)^k p^(k), p − q gets −(−1)^k p^(k)
        let neg: Vec<f64> = d.iter().map(|c| -sign * c).collect();
        q = poly_add(&q, &neg);
        let pos: Vec<f64> = d.iter().map(|c| sign * c).collect();
        diff = poly_add(&diff, &pos);
        sign = -sign;
        d = poly_derivative(&d);
    }
    (trim(q), trim(diff))
}

fn cumtrapz(r: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(r.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in r.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Second-order one-sided slopes at the ends, central inside.
fn slope(r: &[f64], i: usize, h: f64) -> f64 {
    let n = r.len();
    if n < 3 {
        return 0.0;
    }
    if i == 0 {
        (-3.0 * r[0] + 4.0 * r[1] - r[2]) / (2.0 * h)
    } else if i == n - 1 {
        (3.0 * r[n - 1] - 4.0 * r[n - 2] + r[n - 3]) / (2.0 * h)
    } else {
        (r[i + 1] - r[i - 1]) / (2.0 * h)
    }
}

/// `∫_x^{ℓmax}` by the trapezoid rule with the endpoint slope correction,
/// accumulated from the right.
fn rev_cumtrapz(r: &[f64], h: f64) -> Vec<f64> {
    let n = r.len();
    let mut out = vec![0.0; n];
    for i in (0..n.saturating_sub(1)).rev() {
        out[i] = out[i + 1] + 0.5 * h * (r[i] + r[i + 1]);
    }
    if n >= 3 {
        let end = slope(r, n - 1, h);
        for (i, o) in out.iter_mut().enumerate().take(n - 1) {
            *o -= h * h / 12.0 * (end - slope(r, i, h));
        }
    }
    out
}

pub fn apply_p(f: &FRFunction) -> FRFunction {
    let (q, _) = antiderivative_parts(&f.principal);
    let q0 = q.first().copied().unwrap_or(0.0);
    let remainder = cumtrapz(&f.remainder, f.step).into_iter().map(|v| v - q0).collect();
    FRFunction {
        principal: q,
        remainder,
        step: f.step,
        k: f.k,
        n: f.n,
    }
}

pub fn apply_l(f: &FRFunction) -> FRFunction {
    let (q, diff) = antiderivative_parts(&f.principal);
    let q0 = q.first().copied().unwrap_or(0.0);
    let integral = cumtrapz(&f.remainder, f.step);
    let remainder = f.remainder.iter().zip(integral).map(|(r, i)| r - i + q0).collect();
    FRFunction {
        principal: diff,
        remainder,
        step: f.step,
        k: f.k,
        n: f.n,
    }
}

pub fn apply_l_pow(f: &FRFunction, k: usize) -> FRFunction {
    (0..k).fold(f.clone(), |g, _| apply_l(&g))
}

fn envelope(ell: f64, n: usize) -> f64 {
    (ell + 1.0).powi(n as i32 - 1) * (0.5 * ell).exp()
}

fn principal_norm(f: &FRFunction, k: usize) -> Option<f64> {
    if f.principal.len() > k {
        return None;
    }
    Some(f.principal.iter().fold(0.0f64, |m, c| m.max(c.abs())))
}

/// `‖p‖∞ + sup |r(ℓ)| / ((ℓ+1)^{N−1} e^{ℓ/2})` over the grid, or infinity
/// when `deg p ≥ K`.
pub fn fr_norm(f: &FRFunction, k: usize, n: usize) -> f64 {
    let Some(pn) = principal_norm(f, k) else {
        return f64::INFINITY;
    };
    let sup = f
        .remainder
        .iter()
        .enumerate()
        .map(|(i, r)| r.abs() / envelope(f.grid_point(i), n))
        .fold(0.0f64, f64::max);
    pn + sup
}

/// As `fr_norm` with `|r|` replaced by its running integral `∫_0^ℓ |r|`.
pub fn weak_fr_norm(f: &FRFunction, k: usize, n: usize) -> f64 {
    let Some(pn) = principal_norm(f, k) else {
        return f64::INFINITY;
    };
    let abs: Vec<f64> = f.remainder.iter().map(|r| r.abs()).collect();
    let sup = cumtrapz(&abs, f.step)
        .iter()
        .enumerate()
        .map(|(i, v)| v / envelope(f.grid_point(i), n))
        .fold(0.0f64, f64::max);
    pn + sup
}

/// `∫_0^ℓ p(s)e^s r(ℓ−s) ds`, split into a polynomial times `e^ℓ` and a
/// remainder. With `p(ℓ−u) = Σ_j p^(j)(ℓ)(−u)^j/j!` only the moments
/// `∫ u^j e^{−u} r(u)` are needed; their full values go to the principal
/// part and their tails beyond `ℓ` to the remainder.
fn cross_term(p: &[f64], r: &[f64], h: f64) -> (Vec<f64>, Vec<f64>) {
    let mut principal = Vec::new();
    let mut remainder = vec![0.0; r.len()];
    if p.is_empty() || r.iter().all(|v| *v == 0.0) {
        return (principal, remainder);
    }
    let mut deriv = p.to_vec();
    let mut fact = 1.0;
    for j in 0..p.len() {
        if j > 0 {
            fact *= j as f64;
            deriv = poly_derivative(&deriv);
        }
        let g: Vec<f64> = r
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let u = i as f64 * h;
                u.powi(j as i32) * (-u).exp() * v
            })
            .collect();
        let tail = rev_cumtrapz(&g, h);
        let moment = tail[0];
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        let c = sign / fact;
        principal = poly_add(&principal, &deriv.iter().map(|d| d * c * moment).collect::<Vec<_>>());
        for (i, out) in remainder.iter_mut().enumerate() {
            let ell = i as f64 * h;
            *out -= ell.exp() * c * poly_eval(&deriv, ell) * tail[i];
        }
    }
    (principal, remainder)
}

/// Trapezoid convolution of two sampled remainders with the endpoint slope
/// correction, which makes it fourth order.
fn remainder_convolution(a: &[f64], b: &[f64], h: f64) -> Vec<f64> {
    if a.iter().all(|v| *v == 0.0) || b.iter().all(|v| *v == 0.0) {
        return vec![0.0; a.len()];
    }
    (0..a.len())
        .into_par_iter()
        .map(|k| {
            if k == 0 {
                return 0.0;
            }
            let s: f64 = (0..=k).map(|i| a[i] * b[k - i]).sum();
            let trap = h * (s - 0.5 * (a[0] * b[k] + a[k] * b[0]));
            if k < 2 {
                return trap;
            }
            let f = |i: usize| a[i] * b[k - i];
            let start = (-3.0 * f(0) + 4.0 * f(1) - f(2)) / (2.0 * h);
            let end = (3.0 * f(k) - 4.0 * f(k - 1) + f(k - 2)) / (2.0 * h);
            trap - h * h / 12.0 * (end - start)
        })
        .collect()
}

pub fn convolve(f1: &FRFunction, f2: &FRFunction) -> Result<FRFunction, FrError> {
    same_grid(f1, f2)?;
    let h = f1.step;
    // x^a e^x * x^b e^x = a! b! / (a+b+1)! x^{a+b+1} e^x
    let mut principal = vec![0.0; f1.principal.len() + f2.principal.len()];
    for (a, ca) in f1.principal.iter().enumerate() {
        for (b, cb) in f2.principal.iter().enumerate() {
            principal[a + b + 1] += ca * cb / binomial_like(a, b);
        }
    }
    let (p12, r12) = cross_term(&f1.principal, &f2.remainder, h);
    let (p21, r21) = cross_term(&f2.principal, &f1.remainder, h);
    let rr = remainder_convolution(&f1.remainder, &f2.remainder, h);
    let principal = poly_add(&poly_add(&principal, &p12), &p21);
    let remainder = (0..f1.len()).map(|i| r12[i] + r21[i] + rr[i]).collect();
    Ok(FRFunction {
        principal,
        remainder,
        step: h,
        k: f1.k + f2.k,
        n: f1.n + f2.n,
    })
}

/// `(a+b+1)! / (a! b!)`.
fn binomial_like(a: usize, b: usize) -> f64 {
    let mut v = (a + b + 1) as f64;
    for i in 1..=b {
        v *= (a + i) as f64 / i as f64;
    }
    v
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CharFrReport {
    pub k: usize,
    pub n: usize,
    pub step: f64,
    pub l_max: f64,
    /// Principal part left after applying `L^K`; empty on success.
    pub residual_principal: Vec<f64>,
    pub norm: f64,
    pub weak_norm: f64,
    /// Slope of `log(max |L^K f| / ((ℓ+1)^{N−1}e^{ℓ/2}))` over unit windows
    /// from `GROWTH_FROM` to the end of the grid.
    pub growth_slope: f64,
    /// The same slope over the upper half of the grid, free of transients.
    pub tail_slope: f64,
    pub member: bool,
}

/// `f ∈ F^{K,N}` exactly when `L^K f ∈ R^N`.
pub fn check_char_fr(f: &FRFunction, k: usize, n: usize) -> CharFrReport {
    let g = apply_l_pow(f, k);
    let norm = fr_norm(&g, 0, n);
    let weak_norm = weak_fr_norm(&g, 0, n);
    let values = g.values();
    let growth = growth_slope(&values, g.step, n, GROWTH_FROM);
    let tail_slope = growth_slope(&values, g.step, n, (0.5 * f.l_max()).max(GROWTH_FROM));
    CharFrReport {
        k,
        n,
        step: f.step,
        l_max: f.l_max(),
        residual_principal: g.principal.clone(),
        norm,
        weak_norm,
        growth_slope: growth,
        tail_slope,
        member: norm.is_finite() && tail_slope <= GROWTH_TOL,
    }
}

/// Least-squares slope of the log of the windowed envelope maximum.
/// Identically zero input gives `−∞`.
pub fn growth_slope(values: &[f64], step: f64, n: usize, from: f64) -> f64 {
    let mut pts: Vec<(f64, f64)> = Vec::new();
    let mut any_window = false;
    let mut lo = from;
    let l_max = (values.len().saturating_sub(1)) as f64 * step;
    while lo + 1.0 <= l_max + 1e-9 {
        let i0 = (lo / step).round() as usize;
        let i1 = (((lo + 1.0) / step).round() as usize).min(values.len() - 1);
        let m = (i0..=i1)
            .map(|i| values[i].abs() / envelope(i as f64 * step, n))
            .fold(0.0f64, f64::max);
        any_window = true;
        if m > 0.0 && m.is_finite() {
            pts.push((lo + 0.5, m.ln()));
        }
        lo += 1.0;
    }
    if pts.len() < 2 {
        return if any_window && pts.is_empty() {
            f64::NEG_INFINITY
        } else {
            f64::NAN
        };
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}
