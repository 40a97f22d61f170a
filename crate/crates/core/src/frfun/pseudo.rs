//! Pseudo-convolutions over level sets `{x ∈ R≥0^n : h(x) = ℓ}`, comparison
//! constants and the exponential-decay classes of level functions.

use std::cell::RefCell;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::{expr::Expr, FRFunction, FrError, ParseError};
use crate::quad::{find_root, integrate, QuadResult};

pub type Callable = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Side of the sample box `[a, a + BOX]^n` used by the empirical checks.
pub const BOX: f64 = 30.0;
/// Smallest `∂h/∂x₁` accepted on a level set.
pub const MIN_LEVEL_SLOPE: f64 = 1e-8;
const ROOT_XTOL: f64 = 1e-12;

#[derive(Clone)]
pub struct PseudoConvSpec {
    pub n: usize,
    pub level: Callable,
    pub weight: Callable,
    pub a: f64,
}

impl fmt::Debug for PseudoConvSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PseudoConvSpec")
            .field("n", &self.n)
            .field("a", &self.a)
            .finish_non_exhaustive()
    }
}

impl PseudoConvSpec {
    pub fn new(n: usize, level: Callable, weight: Callable, a: f64) -> Result<Self, FrError> {
        if n == 0 {
            return Err(FrError::Arity { expected: 1, got: 0 });
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(FrError::BadCutoff(a));
        }
        Ok(Self { n, level, weight, a })
    }

    pub fn from_exprs(n: usize, level: &str, weight: &str, a: f64) -> Result<Self, PseudoSpecError> {
        let h = Expr::parse(level).map_err(|e| PseudoSpecError::Parse("level", e))?;
        let phi = Expr::parse(weight).map_err(|e| PseudoSpecError::Parse("weight", e))?;
        for e in [&h, &phi] {
            if e.arity() > n {
                return Err(FrError::Arity {
                    expected: n,
                    got: e.arity(),
                }
                .into());
            }
        }
        Ok(Self::new(
            n,
            Arc::new(move |x| h.eval(x)),
            Arc::new(move |x| phi.eval(x)),
            a,
        )?)
    }

    /// `h = Σx`, `φ ≡ 1`: the ordinary convolution.
    pub fn coordinate_sum(n: usize, a: f64) -> Result<Self, FrError> {
        Self::new(n, Arc::new(|x| x.iter().sum()), Arc::new(|_| 1.0), a)
    }

    pub fn scaled_weight(&self, c: f64) -> Self {
        let w = self.weight.clone();
        Self {
            weight: Arc::new(move |x| c * w(x)),
            ..self.clone()
        }
    }

    fn h(&self, x: &[f64]) -> Result<f64, FrError> {
        let v = (self.level)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(FrError::NonFiniteCallable {
                what: "level function",
                at: x.to_vec(),
            })
        }
    }

    /// Central difference in `x₁`, one-sided near the boundary.
    fn dh_dx1(&self, x: &mut [f64]) -> Result<f64, FrError> {
        let x1 = x[0];
        let s = 1e-5 * x1.abs().max(1.0);
        let at = |v: f64, x: &mut [f64]| {
            x[0] = v;
            self.h(x)
        };
        let d = if x1 >= s {
            (at(x1 + s, x)? - at(x1 - s, x)?) / (2.0 * s)
        } else {
            (-3.0 * at(x1, x)? + 4.0 * at(x1 + s, x)? - at(x1 + 2.0 * s, x)?) / (2.0 * s)
        };
        x[0] = x1;
        Ok(d)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PseudoSpecError {
    #[error("cannot parse {0} expression: {1}")]
    Parse(&'static str, ParseError),
    #[error(transparent)]
    Spec(#[from] FrError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PseudoSample {
    pub ell: f64,
    pub value: f64,
    pub err: f64,
}

/// Largest `t ≥ 0` with `h(0, …, 0, t, tail) ≤ ℓ` in coordinate `idx`, or
/// `None` when already `h > ℓ` at `t = 0`. Requires `h` increasing in `t`.
fn upper_limit(spec: &PseudoConvSpec, ell: f64, idx: usize, x: &mut [f64]) -> Result<Option<f64>, FrError> {
    x[..=idx].iter_mut().for_each(|v| *v = 0.0);
    let base = spec.h(x)?;
    if base > ell {
        return Ok(None);
    }
    if base == ell {
        return Ok(Some(0.0));
    }
    let mut hi = (ell - base).max(1.0);
    for _ in 0..64 {
        x[idx] = hi;
        if spec.h(x)? >= ell {
            break;
        }
        hi *= 2.0;
    }
    let mut err = None;
    let root = {
        let mut g = |t: f64| {
            x[idx] = t;
            match spec.h(x) {
                Ok(v) => v - ell,
                Err(e) => {
                    err.get_or_insert(e);
                    f64::NAN
                }
            }
        };
        find_root(&mut g, 0.0, hi, ROOT_XTOL * hi.max(1.0))
    };
    if let Some(e) = err {
        return Err(e);
    }
    let t = root.map_err(|source| FrError::Root {
        ell,
        lo: 0.0,
        hi,
        source,
    })?;
    x[idx] = t;
    Ok(Some(t))
}

struct Ctx<'a> {
    fs: &'a [FRFunction],
    spec: &'a PseudoConvSpec,
    ell: f64,
    tol_rel: f64,
}

impl Ctx<'_> {
    /// Integrand once `x₂ … x_n` are fixed: solve for `x₁` and weight by
    /// `∂x₁/∂ℓ = 1/∂₁h`.
    fn point(&self, x: &mut [f64]) -> Result<f64, FrError> {
        let Some(x1) = upper_limit(self.spec, self.ell, 0, x)? else {
            return Ok(0.0);
        };
        x[0] = x1;
        let dh = self.spec.dh_dx1(x)?;
        if dh.is_nan() || dh.abs() < MIN_LEVEL_SLOPE {
            return Err(FrError::DegenerateLevel {
                value: dh,
                at: x.to_vec(),
            });
        }
        let phi = (self.spec.weight)(x);
        if !phi.is_finite() {
            return Err(FrError::NonFiniteCallable {
                what: "weight",
                at: x.to_vec(),
            });
        }
        let mut prod = phi / dh.abs();
        for (f, xi) in self.fs.iter().zip(x.iter()) {
            prod *= f.eval(*xi)?;
        }
        Ok(prod)
    }

    /// Integrates over coordinate `idx` and all lower ones except `x₁`.
    fn level(&self, idx: usize, x: &mut [f64]) -> Result<QuadResult, FrError> {
        if idx == 0 {
            let v = self.point(x)?;
            return Ok(QuadResult { value: v, err: 0.0 });
        }
        let tail = x.to_vec();
        let Some(upper) = upper_limit(self.spec, self.ell, idx, x)? else {
            return Ok(QuadResult { value: 0.0, err: 0.0 });
        };
        let err = RefCell::new(None);
        let inner = |t: f64| {
            let mut y = tail.clone();
            y[idx] = t;
            match self.level(idx - 1, &mut y) {
                Ok(q) => q.value,
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    0.0
                }
            }
        };
        let coarse = integrate(&inner, 0.0, upper, f64::INFINITY);
        let tol = (self.tol_rel * coarse.value.abs()).max(f64::MIN_POSITIVE);
        let q = integrate(&inner, 0.0, upper, tol);
        match err.into_inner() {
            Some(e) => Err(e),
            None => Ok(q),
        }
    }
}

/// `∫_{h(x) = ℓ} φ(x) Π f_i(x_i) dx/dℓ` for each `ℓ`, parallel over `ℓ`.
pub fn pseudo_convolve(
    fs: &[FRFunction],
    spec: &PseudoConvSpec,
    ells: &[f64],
    tol_rel: f64,
) -> Result<Vec<PseudoSample>, FrError> {
    if fs.len() != spec.n {
        return Err(FrError::Arity {
            expected: spec.n,
            got: fs.len(),
        });
    }
    ells.par_iter()
        .map(|&ell| {
            let ctx = Ctx { fs, spec, ell, tol_rel };
            let mut x = vec![0.0; spec.n];
            if spec.h(&x)? > ell {
                return Err(FrError::EmptyLevelSet(ell));
            }
            let q = if spec.n == 1 {
                let v = ctx.point(&mut x)?;
                QuadResult { value: v, err: 0.0 }
            } else {
                ctx.level(spec.n - 1, &mut x)?
            };
            Ok(PseudoSample {
                ell,
                value: q.value,
                err: q.err,
            })
        })
        .collect()
}

/// Halton point `i` in `[a, a + side]^n`.
fn halton(i: usize, n: usize, a: f64, side: f64) -> Vec<f64> {
    const PRIMES: [usize; 9] = [2, 3, 5, 7, 11, 13, 17, 19, 23];
    (0..n)
        .map(|d| {
            let b = PRIMES[d % PRIMES.len()];
            let (mut f, mut r, mut k) = (1.0, 0.0, i + 1);
            while k > 0 {
                f /= b as f64;
                r += f * (k % b) as f64;
                k /= b;
            }
            a + side * r
        })
        .collect()
}

/// Corners of the sample box followed by `samples` Halton points.
fn sample_points(n: usize, a: f64, samples: usize) -> Vec<Vec<f64>> {
    let mut pts: Vec<Vec<f64>> = (0..1usize << n.min(12))
        .map(|mask| (0..n).map(|d| if mask >> d & 1 == 1 { a + BOX } else { a }).collect())
        .collect();
    pts.extend((0..samples).map(|i| halton(i, n, a, BOX)));
    pts
}

/// Empirical `l₀ = sup (Σx − h(x))` over `[a, a + BOX]^n`, clamped at zero.
pub fn comparison_l0(spec: &PseudoConvSpec, samples: usize) -> Result<f64, FrError> {
    let mut sup = 0.0f64;
    for x in sample_points(spec.n, spec.a, samples) {
        let d = x.iter().sum::<f64>() - spec.h(&x)?;
        sup = sup.max(d);
    }
    Ok(sup)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassEEntry {
    pub alpha: Vec<u8>,
    pub sup: f64,
    pub at: Vec<f64>,
    /// Sample points skipped because the rounding floor of `φ`, amplified
    /// by `e^{α·x}`, exceeds half the bound even at the largest step.
    pub unresolved: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassEReport {
    pub n: usize,
    pub a: f64,
    pub bound: f64,
    pub samples: usize,
    pub entries: Vec<ClassEEntry>,
    pub pass: bool,
}

/// Mixed central difference along the coordinates set in `alpha`.
fn mixed_difference(phi: &dyn Fn(&[f64]) -> f64, x: &[f64], alpha: &[u8], s: f64) -> f64 {
    let active: Vec<usize> = (0..x.len()).filter(|&d| alpha[d] == 1).collect();
    let mut y = x.to_vec();
    let mut total = 0.0;
    for mask in 0..1usize << active.len() {
        let mut sign = 1.0;
        for (bit, &d) in active.iter().enumerate() {
            if mask >> bit & 1 == 1 {
                y[d] = x[d] + s;
            } else {
                y[d] = x[d] - s;
                sign = -sign;
            }
        }
        total += sign * phi(&y);
    }
    total / (2.0 * s).powi(active.len() as i32)
}

/// One Richardson extrapolation of central differences. The step starts at
/// 0.05 and grows up to 1 until the rounding noise of `φ`, amplified by
/// `e^{α·x}`, drops below a thousandth of the bound.
/// Returns the derivative and its rounding floor after scaling.
fn derivative(phi: &dyn Fn(&[f64]) -> f64, x: &[f64], alpha: &[u8], scale: f64, bound: f64) -> (f64, f64) {
    let m = alpha.iter().filter(|a| **a == 1).count() as i32;
    let noise = f64::EPSILON * phi(x).abs() * scale;
    let s = (noise / (1e-3 * bound.max(1e-300)))
        .powf(1.0 / m as f64)
        .clamp(0.05, 1.0);
    let d1 = mixed_difference(phi, x, alpha, s);
    let d2 = mixed_difference(phi, x, alpha, 0.5 * s);
    let floor = 2f64.powi(m + 1) * noise / s.powi(m);
    ((4.0 * d2 - d1) / 3.0, floor)
}

/// All nonzero `α ∈ {0,1}^n`.
pub fn all_alphas(n: usize) -> Vec<Vec<u8>> {
    (1..1usize << n)
        .map(|m| (0..n).map(|d| (m >> d & 1) as u8).collect())
        .collect()
}

/// Empirical `sup e^{α·x} |∂^α φ|` on `[a, a + BOX]^n` for each `α`.
pub fn class_e_check(
    phi: &dyn Fn(&[f64]) -> f64,
    n: usize,
    a: f64,
    alphas: &[Vec<u8>],
    bound: f64,
    samples: usize,
) -> Result<ClassEReport, FrError> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(FrError::BadCutoff(a));
    }
    let points = sample_points(n, a, samples);
    let mut entries = Vec::new();
    for alpha in alphas {
        if alpha.len() != n {
            return Err(FrError::Arity {
                expected: n,
                got: alpha.len(),
            });
        }
        let mut best = ClassEEntry {
            alpha: alpha.clone(),
            sup: 0.0,
            at: points[0].clone(),
            unresolved: 0,
        };
        for x in &points {
            let dot: f64 = x.iter().zip(alpha).map(|(v, a)| v * f64::from(*a)).sum();
            let (d, floor) = derivative(phi, x, alpha, dot.exp(), bound);
            if floor > 0.5 * bound {
                best.unresolved += 1;
                continue;
            }
            if !d.is_finite() {
                return Err(FrError::NonFiniteCallable {
                    what: "weight derivative",
                    at: x.clone(),
                });
            }
            let v = dot.exp() * d.abs();
            if v > best.sup {
                best.sup = v;
                best.at = x.clone();
            }
        }
        entries.push(best);
    }
    let pass = entries.iter().all(|e| e.sup <= bound);
    Ok(ClassEReport {
        n,
        a,
        bound,
        samples,
        entries,
        pass,
    })
}
