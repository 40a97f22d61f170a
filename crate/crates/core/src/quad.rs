//! Adaptive Gauss–Legendre quadrature and bracketed root finding.
//!
//! The error estimate of every panel compares one rule on the whole panel
//! with the same rule on its two halves.

use std::sync::OnceLock;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RootError {
    #[error("no sign change on [{lo}, {hi}]: f = ({f_lo}, {f_hi})")]
    NoBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error("non-finite function value at {0}")]
    NonFinite(f64),
}

/// Nodes and weights on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussRule {
    /// Newton iteration on the Legendre recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        Self { nodes, weights }
    }

    pub fn apply<F: FnMut(f64) -> f64>(&self, mut f: F, a: f64, b: f64) -> f64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        h * self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * f(c + h * x))
            .sum::<f64>()
    }
}

/// `(P_n(x), P_n'(x))`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// 15-point rule shared by the adaptive integrators.
pub fn rule15() -> &'static GaussRule {
    static RULE: OnceLock<GaussRule> = OnceLock::new();
    RULE.get_or_init(|| GaussRule::new(15))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    pub err: f64,
}

impl std::ops::Add for QuadResult {
    type Output = QuadResult;
    fn add(self, o: QuadResult) -> QuadResult {
        QuadResult {
            value: self.value + o.value,
            err: self.err + o.err,
        }
    }
}

impl std::ops::Mul<f64> for QuadResult {
    type Output = QuadResult;
    fn mul(self, s: f64) -> QuadResult {
        QuadResult {
            value: self.value * s,
            err: self.err * s.abs(),
        }
    }
}

pub const MAX_DEPTH: u32 = 40;

/// Adaptive integration of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> QuadResult {
    if a == b {
        return QuadResult { value: 0.0, err: 0.0 };
    }
    let rule = rule15();
    let whole = rule.apply(&mut f, a, b);
    refine(&mut f, rule, a, b, whole, tol, 0)
}

fn refine<F: FnMut(f64) -> f64>(
    f: &mut F,
    rule: &GaussRule,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> QuadResult {
    let m = 0.5 * (a + b);
    let left = rule.apply(&mut *f, a, m);
    let right = rule.apply(&mut *f, m, b);
    let halves = left + right;
    let err = (halves - whole).abs();
    if err <= tol || depth >= MAX_DEPTH || m <= a || m >= b {
        return QuadResult { value: halves, err };
    }
    refine(f, rule, a, m, left, 0.5 * tol, depth + 1) + refine(f, rule, m, b, right, 0.5 * tol, depth + 1)
}

/// `∫_0^b f` where `f` has an inverse-square-root singularity at `b`:
/// substitutes `x = b(1 − v²)`.
pub fn integrate_sqrt_end<F: FnMut(f64) -> f64>(mut f: F, b: f64, tol: f64) -> QuadResult {
    integrate(|v| 2.0 * b * v * f(b * (1.0 - v * v)), 0.0, 1.0, tol)
}

/// `∫_a^b f` with the same singularity at `b`: `x = b − (b − a)v²`.
pub fn integrate_sqrt_upper<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> QuadResult {
    let w = b - a;
    integrate(|v| 2.0 * w * v * f(b - w * v * v), 0.0, 1.0, tol)
}

/// Bracketed root of a monotone-or-not continuous function: secant steps
/// with bisection fallback (Illinois variant), stopping at `xtol`.
pub fn find_root<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, xtol: f64) -> Result<f64, RootError> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if !fa.is_finite() {
        return Err(RootError::NonFinite(a));
    }
    if !fb.is_finite() {
        return Err(RootError::NonFinite(b));
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(RootError::NoBracket {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }
    let mut side = 0i8;
    for _ in 0..200 {
        if (b - a).abs() <= xtol {
            break;
        }
        let mut c = (a * fb - b * fa) / (fb - fa);
        let mid = 0.5 * (a + b);
        if !c.is_finite() || c <= a.min(b) || c >= a.max(b) {
            c = mid;
        }
        let fc = f(c);
        if !fc.is_finite() {
            return Err(RootError::NonFinite(c));
        }
        if fc == 0.0 {
            return Ok(c);
        }
        if fc.signum() == fb.signum() {
            b = c;
            fb = fc;
            if side == -1 {
                fa *= 0.5;
            }
            side = -1;
        } else {
            a = c;
            fa = fc;
            if side == 1 {
                fb *= 0.5;
            }
            side = 1;
        }
    }
    Ok(0.5 * (a + b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gauss_rule_is_exact_for_polynomials() {
        let r = GaussRule::new(15);
        assert_relative_eq!(r.weights.iter().sum::<f64>(), 2.0, epsilon = 1e-14);
        // degree 29 is integrated exactly
        let v = r.apply(|x| x.powi(28), 0.0, 1.0);
        assert_relative_eq!(v, 1.0 / 29.0, max_relative = 1e-13);
        let r3 = GaussRule::new(3);
        assert_relative_eq!(r3.nodes[2], (0.6f64).sqrt(), epsilon = 1e-15);
        assert_relative_eq!(r3.weights[1], 8.0 / 9.0, epsilon = 1e-15);
    }

    #[test]
    fn adaptive_handles_peaks() {
        let q = integrate(|x| 1.0 / (1e-4 + x * x), -1.0, 1.0, 1e-10);
        let want = 2.0 * (1.0f64 / 1e-2).atan() / 1e-2;
        assert_relative_eq!(q.value, want, max_relative = 1e-10);
        assert!(q.err < 1e-8);
    }

    #[test]
    fn sqrt_endpoint_substitution() {
        // ∫_0^1 1/sqrt(1-x) = 2
        let q = integrate_sqrt_end(|x| 1.0 / (1.0 - x).sqrt(), 1.0, 1e-12);
        assert_relative_eq!(q.value, 2.0, epsilon = 1e-11);
        let q = integrate_sqrt_upper(|x| 1.0 / (3.0 - x).sqrt(), 2.0, 3.0, 1e-12);
        assert_relative_eq!(q.value, 2.0, epsilon = 1e-11);
    }

    #[test]
    fn roots() {
        let r = find_root(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert_relative_eq!(r, 2f64.sqrt(), epsilon = 1e-13);
        let r = find_root(|x| (x - 0.3).powi(3), -5.0, 7.0, 1e-13).unwrap();
        assert_relative_eq!(r, 0.3, epsilon = 1e-9);
        assert!(matches!(
            find_root(|x| x * x + 1.0, -1.0, 1.0, 1e-12),
            Err(RootError::NoBracket { .. })
        ));
    }
}
