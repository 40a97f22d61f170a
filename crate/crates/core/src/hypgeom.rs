//! Hyperbolic trigonometry and the `PSL(2,ℝ)` moves on the unit tangent
//! bundle of the hyperbolic plane.
//!
//! Every "half argument" lives in [`half`] so the `x/2` convention is spelled
//! out in exactly one place.

use std::ops::Mul;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HypError {
    #[error("move parameter must be finite, got {0}")]
    NonFinite(f64),
    #[error("|Tr| = {trace_abs} < 2: element is elliptic")]
    Elliptic { trace_abs: f64 },
    #[error("|Tr| = {trace_abs} is within tolerance of 2: element is parabolic or trivial")]
    Parabolic { trace_abs: f64 },
    #[error("argument {name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error(
        "cosh(x1/2)·cosh(x2/2) = {product} exceeds M(ℓ) = {bound} by {}",
        product - bound
    )]
    OutsideDomain { product: f64, bound: f64 },
}

/// Width of the band `| |Tr| − 2 | < TRACE_SLACK` treated as parabolic.
pub const TRACE_SLACK: f64 = 1e-12;

#[inline]
pub fn half(x: f64) -> f64 {
    0.5 * x
}

/// `arccosh` that stays accurate near 1: `log1p(u + sqrt(u(u+2)))` with `u = y − 1`.
pub fn acosh_stable(y: f64) -> f64 {
    if y < 1.0 {
        return 0.0;
    }
    let u = y - 1.0;
    if u < 1e-2 {
        (u + (u * (u + 2.0)).sqrt()).ln_1p()
    } else {
        y.acosh()
    }
}

/// Row-major 2×2 real matrix.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    pub fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.a * s, self.b * s, self.c * s, self.d * s)
    }

    pub fn max_abs(&self) -> f64 {
        self.a.abs().max(self.b.abs()).max(self.c.abs()).max(self.d.abs())
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite() && self.c.is_finite() && self.d.is_finite()
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, o: Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

/// The three moves on `T¹ℍ`, acting by right multiplication.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MoveKind {
    /// Geodesic flow `a^t`.
    GeodesicFlow,
    /// Geodesic flow conjugated by a quarter turn, `w^t`.
    PerpendicularFlow,
    /// Rotation `k^θ`.
    Rotation,
}

pub fn move_matrix(kind: MoveKind, t: f64) -> Result<Mat2, HypError> {
    if !t.is_finite() {
        return Err(HypError::NonFinite(t));
    }
    let h = half(t);
    Ok(match kind {
        MoveKind::GeodesicFlow => Mat2::new(h.exp(), 0.0, 0.0, (-h).exp()),
        MoveKind::PerpendicularFlow => Mat2::new(h.cosh(), h.sinh(), h.sinh(), h.cosh()),
        MoveKind::Rotation => Mat2::new(h.cos(), h.sin(), -h.sin(), h.cos()),
    })
}

/// `|Tr M| / 2`, which equals `cosh(ℓ/2)` for a hyperbolic element of
/// translation length `ℓ`.
pub fn trace_to_cosh_half_length(m: &Mat2) -> Result<f64, HypError> {
    let t = m.trace().abs();
    if t < 2.0 - TRACE_SLACK {
        return Err(HypError::Elliptic { trace_abs: t });
    }
    if t < 2.0 + TRACE_SLACK {
        return Err(HypError::Parabolic { trace_abs: t });
    }
    Ok(0.5 * t)
}

fn check_positive(name: &'static str, value: f64) -> Result<(), HypError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(HypError::NonPositive { name, value })
    }
}

/// `cosh L` for the orthogeodesic between boundaries 1 and 2 of a pair of
/// pants with boundary lengths `x1, x2, x3`.
pub fn hexagon_cosh_ortho(x1: f64, x2: f64, x3: f64) -> f64 {
    (half(x1).cosh() * half(x2).cosh() + half(x3).cosh()) / (half(x1).sinh() * half(x2).sinh())
}

/// Length of the orthogeodesic joining boundaries 1 and 2 of the pair of
/// pants `(x1, x2, x3)` (right-angled hexagon relation).
pub fn hexagon_ortho_length(x1: f64, x2: f64, x3: f64) -> Result<f64, HypError> {
    check_positive("x1", x1)?;
    check_positive("x2", x2)?;
    check_positive("x3", x3)?;
    Ok(acosh_stable(hexagon_cosh_ortho(x1, x2, x3)))
}

/// Inverse of [`hexagon_ortho_length`] in `x3`: `cosh(x3/2) = cosh L·sinh(x1/2)sinh(x2/2) − cosh(x1/2)cosh(x2/2)`.
/// Returns `None` when the right-hand side drops below 1.
pub fn hexagon_third_boundary(x1: f64, x2: f64, ortho: f64) -> Option<f64> {
    let c = ortho.cosh() * half(x1).sinh() * half(x2).sinh() - half(x1).cosh() * half(x2).cosh();
    (c >= 1.0).then(|| 2.0 * acosh_stable(c))
}

/// `cosh(ℓ/2)` of the figure-eight filling the pair of pants `(x1, x2, x3)`.
pub fn eight_cosh_half(x1: f64, x2: f64, x3: f64) -> f64 {
    2.0 * half(x1).cosh() * half(x2).cosh() + half(x3).cosh()
}

/// Length of the figure-eight geodesic in the pair of pants `(x1, x2, x3)`.
pub fn eight_length(x1: f64, x2: f64, x3: f64) -> Result<f64, HypError> {
    check_positive("x1", x1)?;
    check_positive("x2", x2)?;
    check_positive("x3", x3)?;
    Ok(2.0 * acosh_stable(eight_cosh_half(x1, x2, x3)))
}

/// `M(ℓ) = (cosh(ℓ/2) − 1)/2`, the bound on `cosh(x1/2)cosh(x2/2)` over the level set.
pub fn eight_domain_bound(ell: f64) -> f64 {
    0.5 * (half(ell).cosh() - 1.0)
}

/// Solves the figure-eight relation for `x3` given `ℓ, x1, x2`.
pub fn eight_x3_of(ell: f64, x1: f64, x2: f64) -> Result<f64, HypError> {
    check_positive("x1", x1)?;
    check_positive("x2", x2)?;
    let product = half(x1).cosh() * half(x2).cosh();
    let bound = eight_domain_bound(ell);
    if product > bound {
        return Err(HypError::OutsideDomain { product, bound });
    }
    Ok(2.0 * acosh_stable(half(ell).cosh() - 2.0 * product))
}
