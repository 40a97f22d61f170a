//! Length of a generalized eight in `(L, θ)` coordinates.
//!
//! Two independent evaluators of `cosh(ℓ/2)` are provided: the signed sum
//! over `δ ∈ {±1}^{2r}` ([`cosh_half_expansion`]) and the half trace of the
//! ordered product of geodesic-flow and perpendicular-flow matrices
//! ([`cosh_half_trace`]). Both switch to log-scaled arithmetic once the total
//! length exceeds [`LOG_SCALE_THRESHOLD`].

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagram::{DiagramError, ThetaLabel, ValidDiagram};
use crate::hypgeom::{self, half, HypError, Mat2, MoveKind};

/// Above this value of `Σ|θ| + ΣL` evaluators track a separate log scale.
pub const LOG_SCALE_THRESHOLD: f64 = 600.0;
/// The expansion enumerates `2^{2r−1}` sign patterns; refuse beyond this.
pub const MAX_EXPANSION_BARS: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeoError {
    #[error("expansion refuses r = {0} > 8; use the trace evaluator")]
    TooManyBars(usize),
    #[error("coordinate point has {got} {what}, diagram needs {expected}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("bar length L_{bar} = {value} is not positive")]
    NonPositiveBar { bar: usize, value: f64 },
    #[error("non-finite coordinate")]
    NonFinite,
    #[error("y({component}) = {value} ≤ 0: point lies outside the geodesic-diagram region")]
    OutsideChart { component: String, value: f64 },
    #[error("cosh(ℓ/2) overflows f64 (log value {0})")]
    Overflow(f64),
    #[error("the simple loop has no bar coordinates")]
    NoBars,
    #[error("finite-difference step {step} leaves the domain at {at:?}")]
    StepUnderflow { step: f64, at: [f64; 3] },
    #[error(transparent)]
    Diagram(#[from] DiagramError),
    #[error(transparent)]
    Hyp(#[from] HypError),
}

/// `(L, θ)`; `theta` is indexed by [`ThetaLabel::index`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoordPoint {
    pub l: Vec<f64>,
    pub theta: Vec<f64>,
}

impl CoordPoint {
    pub fn new(l: Vec<f64>, theta: Vec<f64>) -> Self {
        Self { l, theta }
    }

    pub fn theta_of(&self, q: ThetaLabel) -> f64 {
        self.theta[q.index()]
    }

    fn check(&self, d: &ValidDiagram) -> Result<(), GeoError> {
        let r = d.r();
        if r == 0 {
            return Err(GeoError::NoBars);
        }
        if self.l.len() != r {
            return Err(GeoError::Dimension {
                what: "bar lengths",
                expected: r,
                got: self.l.len(),
            });
        }
        if self.theta.len() != 2 * r {
            return Err(GeoError::Dimension {
                what: "theta entries",
                expected: 2 * r,
                got: self.theta.len(),
            });
        }
        if self.l.iter().chain(&self.theta).any(|v| !v.is_finite()) {
            return Err(GeoError::NonFinite);
        }
        if let Some((j, &v)) = self.l.iter().enumerate().find(|(_, &v)| v <= 0.0) {
            return Err(GeoError::NonPositiveBar { bar: j + 1, value: v });
        }
        Ok(())
    }

    /// Uniform sample with `L ∈ (0, l_max]`, `θ ∈ [−θ_max, θ_max]`.
    pub fn random<R: Rng>(rng: &mut R, r: usize, l_max: f64, theta_max: f64) -> Self {
        let l = (0..r).map(|_| l_max * (1.0 - rng.random::<f64>())).collect();
        let theta = (0..2 * r).map(|_| rng.random_range(-theta_max..=theta_max)).collect();
        Self { l, theta }
    }
}

/// `y_λ = Σ_{q ∈ Θ_t(λ)} θ_q`, in component order.
pub fn y_lengths(d: &ValidDiagram, p: &CoordPoint) -> Result<Vec<(String, f64)>, GeoError> {
    p.check(d)?;
    d.component_ids()
        .map(|id| {
            let y = d.theta_support(id)?.iter().map(|&q| p.theta_of(q)).sum();
            Ok((id.to_string(), y))
        })
        .collect()
}

/// One step `a^{ε L} w^{θ}` along the loop.
#[derive(Clone, Copy, Debug)]
struct Step {
    signed_l: f64,
    theta: f64,
}

fn steps(d: &ValidDiagram, p: &CoordPoint, q0: ThetaLabel) -> Result<Vec<Step>, GeoError> {
    p.check(d)?;
    Ok(d.relabel(q0)?
        .into_iter()
        .map(|q| Step {
            signed_l: q.sign.as_f64() * p.l[q.bar - 1],
            theta: p.theta_of(q),
        })
        .collect())
}

fn total_length(steps: &[Step]) -> f64 {
    steps.iter().map(|s| s.signed_l.abs() + s.theta.abs()).sum()
}

/// `ln cosh(x)` without overflow.
fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `ln |sinh(x)|`, `−∞` at zero.
fn ln_abs_sinh(x: f64) -> f64 {
    let a = x.abs();
    if a < 20.0 {
        a.sinh().ln()
    } else {
        a + (-(-2.0 * a).exp()).ln_1p() - std::f64::consts::LN_2
    }
}

/// Signed value stored as `sign · e^{log}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogValue {
    pub sign: f64,
    pub log: f64,
}

impl LogValue {
    pub fn to_f64(self) -> f64 {
        self.sign * self.log.exp()
    }
}

/// Signed log-sum-exp.
fn signed_lse(terms: &[(f64, f64)]) -> LogValue {
    let lse = |want: f64| {
        let m = terms
            .iter()
            .filter(|t| t.0 == want)
            .map(|t| t.1)
            .fold(f64::NEG_INFINITY, f64::max);
        if m == f64::NEG_INFINITY {
            return m;
        }
        m + terms
            .iter()
            .filter(|t| t.0 == want)
            .map(|t| (t.1 - m).exp())
            .sum::<f64>()
            .ln()
    };
    let (pos, neg) = (lse(1.0), lse(-1.0));
    if pos >= neg {
        LogValue {
            sign: 1.0,
            log: pos + (-(neg - pos).exp()).ln_1p(),
        }
    } else {
        LogValue {
            sign: -1.0,
            log: neg + (-(pos - neg).exp()).ln_1p(),
        }
    }
}

fn expansion_direct(steps: &[Step]) -> f64 {
    let m = steps.len();
    let ch: Vec<f64> = steps.iter().map(|s| half(s.theta).cosh()).collect();
    let sh: Vec<f64> = steps.iter().map(|s| half(s.theta).sinh()).collect();
    let mut sum = 0.0;
    for mask in 0u32..(1 << m) {
        if mask.count_ones() % 2 == 1 {
            continue;
        }
        let mut coef = 1.0;
        let mut rho = 1.0;
        let mut arg = 0.0;
        for (k, s) in steps.iter().enumerate() {
            arg += rho * s.signed_l;
            if mask >> k & 1 == 1 {
                coef *= sh[k];
                rho = -rho;
            } else {
                coef *= ch[k];
            }
        }
        sum += coef * half(arg).cosh();
    }
    sum
}

fn expansion_log(steps: &[Step]) -> LogValue {
    let m = steps.len();
    let mut terms = Vec::with_capacity(1 << (m - 1));
    for mask in 0u32..(1 << m) {
        if mask.count_ones() % 2 == 1 {
            continue;
        }
        let mut sign = 1.0;
        let mut log = 0.0;
        let mut rho = 1.0;
        let mut arg = 0.0;
        for (k, s) in steps.iter().enumerate() {
            arg += rho * s.signed_l;
            if mask >> k & 1 == 1 {
                let t = half(s.theta);
                if t < 0.0 {
                    sign = -sign;
                }
                log += ln_abs_sinh(t);
                rho = -rho;
            } else {
                log += ln_cosh(half(s.theta));
            }
        }
        if log > f64::NEG_INFINITY {
            terms.push((sign, log + ln_cosh(half(arg))));
        }
    }
    signed_lse(&terms)
}

/// `cosh(ℓ/2)` from the expansion, following the loop through `q0`.
/// Returns the signed half trace (it equals `cosh(ℓ/2)` up to sign).
pub fn cosh_half_expansion_from(d: &ValidDiagram, p: &CoordPoint, q0: ThetaLabel) -> Result<f64, GeoError> {
    let v = log_cosh_half_expansion_from(d, p, q0)?;
    let x = v.to_f64();
    if x.is_finite() {
        Ok(x)
    } else {
        Err(GeoError::Overflow(v.log))
    }
}

pub fn cosh_half_expansion(d: &ValidDiagram, p: &CoordPoint) -> Result<f64, GeoError> {
    cosh_half_expansion_from(d, p, ThetaLabel::plus(1))
}

/// Log-scaled expansion; never overflows.
pub fn log_cosh_half_expansion_from(d: &ValidDiagram, p: &CoordPoint, q0: ThetaLabel) -> Result<LogValue, GeoError> {
    if d.r() > MAX_EXPANSION_BARS {
        return Err(GeoError::TooManyBars(d.r()));
    }
    let st = steps(d, p, q0)?;
    if total_length(&st) <= LOG_SCALE_THRESHOLD {
        let v = expansion_direct(&st);
        return Ok(LogValue {
            sign: if v < 0.0 { -1.0 } else { 1.0 },
            log: v.abs().ln(),
        });
    }
    Ok(expansion_log(&st))
}

/// Number of sign patterns the expansion sums for a loop of `m` labels.
pub fn expansion_term_count(m: usize) -> usize {
    1 << (m - 1)
}

fn step_matrices(s: &Step) -> Result<(Mat2, Mat2), HypError> {
    Ok((
        hypgeom::move_matrix(MoveKind::GeodesicFlow, s.signed_l)?,
        hypgeom::move_matrix(MoveKind::PerpendicularFlow, s.theta)?,
    ))
}

/// Signed `½ Tr(a_1 b_1 ⋯ a_m b_m)` with a running log scale.
pub fn log_half_trace_from(d: &ValidDiagram, p: &CoordPoint, q0: ThetaLabel) -> Result<LogValue, GeoError> {
    let st = steps(d, p, q0)?;
    let scaled = total_length(&st) > LOG_SCALE_THRESHOLD;
    let mut m = Mat2::IDENTITY;
    let mut log_scale = 0.0;
    for s in &st {
        let (a, b) = if scaled { factored_step(s) } else { step_matrices(s)? };
        let (la, lb) = if scaled { step_logs(s) } else { (0.0, 0.0) };
        m = m * a * b;
        log_scale += la + lb;
        let norm = m.max_abs();
        if scaled || !norm.is_finite() || norm > 1e100 {
            m = m.scale(1.0 / norm);
            log_scale += norm.ln();
        }
    }
    let t = 0.5 * m.trace();
    Ok(LogValue {
        sign: if t < 0.0 { -1.0 } else { 1.0 },
        log: t.abs().ln() + log_scale,
    })
}

/// Log magnitudes factored out of the step matrices in scaled mode.
fn step_logs(s: &Step) -> (f64, f64) {
    (half(s.signed_l.abs()), half(s.theta.abs()))
}

/// `a^{εL}` and `w^θ` divided by `e^{|εL|/2}` and `e^{|θ|/2}`.
fn factored_step(s: &Step) -> (Mat2, Mat2) {
    let x = half(s.signed_l);
    let a = if x >= 0.0 {
        Mat2::new(1.0, 0.0, 0.0, (-2.0 * x).exp())
    } else {
        Mat2::new((2.0 * x).exp(), 0.0, 0.0, 1.0)
    };
    let t = half(s.theta);
    let e = (-2.0 * t.abs()).exp();
    let c = 0.5 * (1.0 + e);
    let sh = 0.5 * (1.0 - e) * t.signum();
    (a, Mat2::new(c, sh, sh, c))
}

/// `½|Tr|` of the ordered move product: `cosh(ℓ/2)` for hyperbolic elements.
pub fn cosh_half_trace_from(d: &ValidDiagram, p: &CoordPoint, q0: ThetaLabel) -> Result<f64, GeoError> {
    let v = log_half_trace_from(d, p, q0)?;
    let x = v.log.exp();
    if x.is_finite() {
        Ok(x)
    } else {
        Err(GeoError::Overflow(v.log))
    }
}

pub fn cosh_half_trace(d: &ValidDiagram, p: &CoordPoint) -> Result<f64, GeoError> {
    cosh_half_trace_from(d, p, ThetaLabel::plus(1))
}

/// Both sides of the density identity.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityValue {
    /// `2^{#components} Π sinh²(y_λ/2) Π sinh(L_j)`
    pub rhs_density: f64,
    /// `2^{n_S} Π sinh(x_j/2)`
    pub lhs_factor: f64,
}

pub fn wp_density(d: &ValidDiagram, p: &CoordPoint, x: &[f64]) -> Result<DensityValue, GeoError> {
    let n_s = d.filling_signature().n as usize;
    if x.len() != n_s {
        return Err(GeoError::Dimension {
            what: "boundary lengths",
            expected: n_s,
            got: x.len(),
        });
    }
    if let Some(&v) = x.iter().find(|&&v| v <= 0.0 || !v.is_finite()) {
        return Err(HypError::NonPositive { name: "x", value: v }.into());
    }
    let ys = y_lengths(d, p)?;
    let mut rhs = 2f64.powi(ys.len() as i32);
    for (component, y) in ys {
        if y <= 0.0 {
            return Err(GeoError::OutsideChart { component, value: y });
        }
        rhs *= half(y).sinh().powi(2);
    }
    rhs *= p.l.iter().map(|l| l.sinh()).product::<f64>();
    let lhs = 2f64.powi(n_s as i32) * x.iter().map(|v| half(*v).sinh()).product::<f64>();
    Ok(DensityValue {
        rhs_density: rhs,
        lhs_factor: lhs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacobianReport {
    pub x: [f64; 3],
    pub ortho: f64,
    pub step: f64,
    /// `dL/dx3` from the identity `sinh(x3/2) dx3 = 2 sinh(L) sinh(x1/2) sinh(x2/2) dL`.
    pub analytic: f64,
    pub finite_difference: f64,
    pub rel_err: f64,
}

/// Central difference of `x3 ↦ L` against the analytic derivative.
pub fn jacobian_fd_check_r1(x1: f64, x2: f64, x3: f64, step: f64) -> Result<JacobianReport, GeoError> {
    let at = [x1, x2, x3];
    if x3 - step <= 0.0 || step <= 0.0 || !(x3 + step).is_finite() {
        return Err(GeoError::StepUnderflow { step, at });
    }
    let l = hypgeom::hexagon_ortho_length(x1, x2, x3)?;
    let lp = hypgeom::hexagon_ortho_length(x1, x2, x3 + step)?;
    let lm = hypgeom::hexagon_ortho_length(x1, x2, x3 - step)?;
    if l <= step {
        return Err(GeoError::StepUnderflow { step, at });
    }
    let fd = (lp - lm) / (2.0 * step);
    let analytic = half(x3).sinh() / (2.0 * l.sinh() * half(x1).sinh() * half(x2).sinh());
    Ok(JacobianReport {
        x: at,
        ortho: l,
        step,
        analytic,
        finite_difference: fd,
        rel_err: ((fd - analytic) / analytic).abs(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JacobianSuite {
    pub samples: usize,
    pub seed: u64,
    pub step: f64,
    pub max_rel_err: f64,
    pub worst: Option<JacobianReport>,
}

/// [`jacobian_fd_check_r1`] at `samples` random points with `x_i ∈ [0.5, 6]`.
pub fn jacobian_suite(samples: usize, seed: u64, step: f64) -> Result<JacobianSuite, GeoError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<[f64; 3]> = (0..samples)
        .map(|_| std::array::from_fn(|_| rng.random_range(0.5..6.0)))
        .collect();
    let reports = points
        .par_iter()
        .map(|x| jacobian_fd_check_r1(x[0], x[1], x[2], step))
        .collect::<Result<Vec<_>, _>>()?;
    let worst = reports
        .into_iter()
        .reduce(|a, b| if b.rel_err > a.rel_err { b } else { a });
    Ok(JacobianSuite {
        samples,
        seed,
        step,
        max_rel_err: worst.map_or(0.0, |w| w.rel_err),
        worst,
    })
}

/// Figure-eight chart `(L, θ⁺, θ⁻) ↦ (x1, x2, x3)`.
fn eight_chart(l: f64, theta_plus: f64, theta_minus: f64) -> Option<[f64; 3]> {
    let x3 = hypgeom::hexagon_third_boundary(theta_minus, theta_plus, l)?;
    Some([theta_minus, theta_plus, x3])
}

/// `lhs_factor · |det ∂x/∂(L,θ)| / rhs_density` on the figure-eight chart,
/// with the Jacobian taken by central differences of step `h`.
pub fn eight_density_ratio(x: [f64; 3], h: f64) -> Result<f64, GeoError> {
    let d = crate::diagram::examples::figure_eight();
    let l = hypgeom::hexagon_ortho_length(x[0], x[1], x[2])?;
    // θ_(1,+) = x2 and θ_(1,−) = x1
    let u = [l, x[1], x[0]];
    let mut jac = [[0.0; 3]; 3];
    for k in 0..3 {
        let mut up = u;
        let mut dn = u;
        up[k] += h;
        dn[k] -= h;
        let fp = eight_chart(up[0], up[1], up[2]).ok_or(GeoError::StepUnderflow { step: h, at: x })?;
        let fm = eight_chart(dn[0], dn[1], dn[2]).ok_or(GeoError::StepUnderflow { step: h, at: x })?;
        for i in 0..3 {
            jac[i][k] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    let det = nalgebra::Matrix3::from_fn(|i, k| jac[i][k]).determinant().abs();
    let p = CoordPoint::new(vec![l], vec![x[1], x[0]]);
    let dens = wp_density(&d, &p, &x)?;
    Ok(dens.lhs_factor * det / dens.rhs_density)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub samples: usize,
    pub seed: u64,
    pub constant: f64,
    pub min: f64,
    pub max: f64,
    /// `(max − min) / mean`
    pub spread: f64,
    /// Nearest power of two and the relative distance to it.
    pub log2_constant: i32,
    pub power_of_two_rel_err: f64,
}

/// Samples the figure-eight chart at `samples` points with `x_i ∈ [0.5, 6]`.
pub fn density_proportionality(samples: usize, seed: u64, h: f64) -> Result<DensityReport, GeoError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<[f64; 3]> = (0..samples)
        .map(|_| std::array::from_fn(|_| rng.random_range(0.5..6.0)))
        .collect();
    let ratios = points
        .par_iter()
        .map(|x| eight_density_ratio(*x, h))
        .collect::<Result<Vec<_>, _>>()?;
    let min = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = ratios.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
    let k = mean.log2().round() as i32;
    let p2 = 2f64.powi(k);
    Ok(DensityReport {
        samples,
        seed,
        constant: mean,
        min,
        max,
        spread: (max - min) / mean,
        log2_constant: k,
        power_of_two_rel_err: ((mean - p2) / p2).abs(),
    })
}

/// Expansion-versus-trace record, one per diagram.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub diagram_id: String,
    pub samples: usize,
    pub max_rel_err: f64,
    pub seed: u64,
}

/// Compares both evaluators at `samples` random points with `L ∈ (0,5]`,
/// `θ ∈ [−5,5]`, on every loop of the diagram.
pub fn oracle_suite(
    d: &ValidDiagram,
    diagram_id: &str,
    samples: usize,
    seed: u64,
) -> Result<VerificationReport, GeoError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<CoordPoint> = (0..samples)
        .map(|_| CoordPoint::random(&mut rng, d.r(), 5.0, 5.0))
        .collect();
    let starts: Vec<ThetaLabel> = d.sigma_cycles().iter().map(|c| c[0]).collect();
    let errs = points
        .par_iter()
        .map(|p| {
            let mut worst: f64 = 0.0;
            for &q0 in &starts {
                let e = log_cosh_half_expansion_from(d, p, q0)?;
                let t = log_half_trace_from(d, p, q0)?;
                worst = worst.max(rel_err_log(e, t));
            }
            Ok(worst)
        })
        .collect::<Result<Vec<f64>, GeoError>>()?;
    Ok(VerificationReport {
        diagram_id: diagram_id.to_string(),
        samples,
        max_rel_err: errs.into_iter().fold(0.0, f64::max),
        seed,
    })
}

/// `|a − b| / |b|` for log-scaled values.
pub fn rel_err_log(a: LogValue, b: LogValue) -> f64 {
    if a.sign != b.sign {
        return (a.to_f64() - b.to_f64()).abs() / b.to_f64().abs();
    }
    (a.log - b.log).exp_m1().abs()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagram::examples::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn figure_eight_y_lengths() {
        let d = figure_eight();
        let p = CoordPoint::new(vec![1.0], vec![2.5, 0.7]);
        let ys = y_lengths(&d, &p).unwrap();
        assert_eq!(ys, vec![("lobe1".into(), 0.7), ("lobe2".into(), 2.5)]);
        let zero = CoordPoint::new(vec![1.0], vec![0.0, 0.0]);
        assert!(y_lengths(&d, &zero).unwrap().iter().all(|(_, y)| *y == 0.0));
    }

    #[test]
    fn y_is_symmetric_within_support() {
        let d = three_bar();
        let hub = d.theta_support("hub").unwrap();
        assert!(hub.len() >= 2);
        let mut theta: Vec<f64> = (0..6).map(|i| i as f64 * 0.3 + 0.1).collect();
        let p = CoordPoint::new(vec![1.0; 3], theta.clone());
        let before = y_lengths(&d, &p).unwrap();
        theta.swap(hub[0].index(), hub[1].index());
        let after = y_lengths(&d, &CoordPoint::new(vec![1.0; 3], theta)).unwrap();
        assert_eq!(before, after);
    }

    #[test]
    fn r1_closed_form() {
        let d = figure_eight();
        for (l, t1, t2) in [(0.3, 1.0, 2.0), (2.0, -1.5, 0.4), (4.0, 3.0, 3.0)] {
            let p = CoordPoint::new(vec![l], vec![t1, t2]);
            let want = half(t1).cosh() * half(t2).cosh() + half(t1).sinh() * half(t2).sinh() * f64::cosh(l);
            assert_relative_eq!(cosh_half_expansion(&d, &p).unwrap(), want, max_relative = 1e-14);
            assert_relative_eq!(cosh_half_trace(&d, &p).unwrap(), want.abs(), max_relative = 1e-13);
        }
    }

    #[test]
    fn r1_matches_eight_length() {
        let d = figure_eight();
        let (x1, x2, x3) = (2.0, 2.0, 2.0);
        let l = hypgeom::hexagon_ortho_length(x1, x2, x3).unwrap();
        let p = CoordPoint::new(vec![l], vec![x2, x1]);
        assert_relative_eq!(
            cosh_half_expansion(&d, &p).unwrap(),
            hypgeom::eight_cosh_half(x1, x2, x3),
            max_relative = 1e-13
        );
    }

    #[test]
    fn zero_theta_gives_identity() {
        let d = figure_eight();
        let p = CoordPoint::new(vec![3.0], vec![0.0, 0.0]);
        assert_relative_eq!(cosh_half_trace(&d, &p).unwrap(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn trace_is_cyclic() {
        let d = four_bar();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = CoordPoint::random(&mut rng, 4, 5.0, 5.0);
        let base = cosh_half_trace(&d, &p).unwrap();
        for q in d.relabel(ThetaLabel::plus(1)).unwrap() {
            assert_relative_eq!(cosh_half_trace_from(&d, &p, q).unwrap(), base, max_relative = 1e-11);
        }
    }

    #[test]
    fn expansion_term_count_matches_enumeration() {
        for m in 1..=8 {
            let even = (0u32..(1 << m)).filter(|x| x.count_ones() % 2 == 0).count();
            assert_eq!(even, expansion_term_count(m));
        }
    }

    #[test]
    fn refuses_large_r() {
        let d = star(9);
        let p = CoordPoint::new(vec![1.0; 9], vec![1.0; 18]);
        assert_eq!(cosh_half_expansion(&d, &p), Err(GeoError::TooManyBars(9)));
        assert!(cosh_half_trace(&d, &p).unwrap() > 1.0);
    }

    #[test]
    fn log_scaled_paths_agree_with_direct_paths() {
        // just below the switch, compare the log evaluators on the same steps
        let d = three_bar();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let p = CoordPoint::random(&mut rng, 3, 5.0, 5.0);
            let st = steps(&d, &p, ThetaLabel::plus(1)).unwrap();
            let direct = expansion_direct(&st);
            let logged = expansion_log(&st).to_f64();
            assert_relative_eq!(direct, logged, max_relative = 1e-10);
        }
    }

    #[test]
    fn huge_lengths_stay_finite_in_log_space() {
        let d = three_bar();
        let p = CoordPoint::new(vec![150.0; 3], vec![200.0, 180.0, 210.0, 190.0, 205.0, 170.0]);
        let e = log_cosh_half_expansion_from(&d, &p, ThetaLabel::plus(1)).unwrap();
        let t = log_half_trace_from(&d, &p, ThetaLabel::plus(1)).unwrap();
        assert!(e.log > 709.0);
        assert!(rel_err_log(e, t) < 1e-9, "{e:?} {t:?}");
        assert!(matches!(cosh_half_expansion(&d, &p), Err(GeoError::Overflow(_))));
    }

    #[test]
    fn density_example() {
        let d = figure_eight();
        let l = hypgeom::hexagon_ortho_length(2.0, 2.0, 2.0).unwrap();
        let p = CoordPoint::new(vec![l], vec![2.0, 2.0]);
        let v = wp_density(&d, &p, &[2.0, 2.0, 2.0]).unwrap();
        assert_relative_eq!(
            v.rhs_density,
            4.0 * 1f64.sinh().powi(4) * l.sinh(),
            max_relative = 1e-14
        );
        assert_relative_eq!(v.lhs_factor, 8.0 * 1f64.sinh().powi(3), max_relative = 1e-14);
        let bigger = wp_density(&d, &CoordPoint::new(vec![l + 0.1], vec![2.0, 2.0]), &[2.0; 3]).unwrap();
        assert!(bigger.rhs_density > v.rhs_density);
        let outside = CoordPoint::new(vec![l], vec![2.0, -0.5]);
        assert!(matches!(
            wp_density(&d, &outside, &[2.0; 3]),
            Err(GeoError::OutsideChart { .. })
        ));
    }

    #[test]
    fn jacobian_examples() {
        for x in [(2.0, 2.0, 2.0), (1.0, 3.0, 2.0)] {
            let rep = jacobian_fd_check_r1(x.0, x.1, x.2, 1e-4).unwrap();
            assert!(rep.rel_err <= 1e-6, "{rep:?}");
        }
        let a = jacobian_fd_check_r1(1.0, 3.0, 2.0, 1e-4).unwrap();
        let b = jacobian_fd_check_r1(3.0, 1.0, 2.0, 1e-4).unwrap();
        assert_eq!(a.analytic, b.analytic);
        assert_eq!(a.finite_difference, b.finite_difference);
        assert!(jacobian_fd_check_r1(1.0, 1.0, 1e-5, 1e-4).is_err());
    }

    #[test]
    fn jacobian_suite_is_tight() {
        let s = jacobian_suite(50, 3, 1e-4).unwrap();
        assert!(s.max_rel_err <= 1e-6, "{}", s.max_rel_err);
        assert_eq!(s, jacobian_suite(50, 3, 1e-4).unwrap());
    }

    #[test]
    fn density_constant_on_chart() {
        let rep = density_proportionality(20, 1, 1e-5).unwrap();
        assert!(rep.spread < 1e-6, "{rep:?}");
        assert_eq!(rep.log2_constant, 2);
    }

    #[test]
    fn once_holed_torus_loops() {
        let d = once_holed_torus();
        let p = CoordPoint::new(vec![1.3], vec![0.8, 2.1]);
        // each loop is a single step a^{±L} w^θ
        let want = half(1.3f64).cosh() * half(0.8f64).cosh();
        assert_relative_eq!(cosh_half_trace(&d, &p).unwrap(), want, max_relative = 1e-14);
        assert_relative_eq!(cosh_half_expansion(&d, &p).unwrap(), want, max_relative = 1e-14);
    }

    proptest! {
        #[test]
        fn hyperbolic_when_boundaries_positive(seed in any::<u64>()) {
            let d = three_bar();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut p = CoordPoint::random(&mut rng, 3, 5.0, 5.0);
            for t in &mut p.theta { *t = t.abs() + 1e-3; }
            let v = cosh_half_expansion(&d, &p).unwrap();
            prop_assert!(v >= 1.0);
            prop_assert!(cosh_half_trace(&d, &p).unwrap() >= 1.0);
        }
    }
}
