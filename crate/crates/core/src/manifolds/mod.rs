//! Parametric manifold models `θ ↦ x_θ ∈ R^N` and their geometry.
//!
//! Three one-dimensional families are provided: a circle of radius κ in the
//! first two coordinates, a Gaussian pulse shifted along a sampled time axis,
//! and the unit line segment along the first coordinate axis. All maps are
//! closed-form, so tangents and second derivatives are evaluated exactly;
//! only arc length is computed numerically.

mod arclength;
mod characteristics;
mod cover;
mod search;

use std::f64::consts::PI;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use arclength::ArcTable;
pub use characteristics::{estimate_characteristics, Estimates};
pub use cover::{covering_radius, greedy_cover, CoveringSet};
pub(crate) use search::{grid_refine, Objective};
pub use search::{nearest_on_manifold, NearestPoint, DEFAULT_GRID_DENSITY, PARAM_TOL};

/// Slack allowed when checking that a parameter lies in an interval domain.
const DOMAIN_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ManifoldShape {
    /// `x_θ = (κ cos θ, κ sin θ, 0, …, 0)`, `θ ∈ R mod 2π`.
    Circle { radius: f64 },
    /// `x_θ(n) = exp(−(n/N − θ)²/(2σ²))`, `n = 1..N`, `θ ∈ [0, 1]`.
    Pulse { width: f64 },
    /// Segment from the origin to `e₁`, `x_θ = θ·e₁`, `θ ∈ [0, 1]`.
    LineSegment,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ParamDomain {
    /// `[lo, hi]`, endpoints included.
    Interval { lo: f64, hi: f64 },
    /// `R mod period`, represented on `[0, period)`.
    Periodic { period: f64 },
}

impl ParamDomain {
    pub fn width(&self) -> f64 {
        match *self {
            ParamDomain::Interval { lo, hi } => hi - lo,
            ParamDomain::Periodic { period } => period,
        }
    }

    pub fn is_periodic(&self) -> bool {
        matches!(self, ParamDomain::Periodic { .. })
    }

    /// `n` evenly spaced parameters. Intervals include both endpoints;
    /// periodic domains start at 0 and omit the wrapped endpoint.
    pub fn grid(&self, n: usize) -> Vec<f64> {
        match *self {
            ParamDomain::Interval { lo, hi } => {
                if n == 1 {
                    return vec![lo];
                }
                let step = (hi - lo) / (n - 1) as f64;
                (0..n)
                    .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
                    .collect()
            }
            ParamDomain::Periodic { period } => {
                let step = period / n as f64;
                (0..n).map(|i| step * i as f64).collect()
            }
        }
    }

    /// Canonical representative of `theta`, or a domain error.
    pub fn normalize(&self, theta: f64) -> Result<f64> {
        if !theta.is_finite() {
            return Err(Error::Domain(format!("parameter {theta} is not finite")));
        }
        match *self {
            ParamDomain::Interval { lo, hi } => {
                if theta < lo - DOMAIN_SLACK || theta > hi + DOMAIN_SLACK {
                    return Err(Error::Domain(format!(
                        "parameter {theta} outside [{lo}, {hi}]"
                    )));
                }
                Ok(theta.clamp(lo, hi))
            }
            ParamDomain::Periodic { period } => {
                let t = theta.rem_euclid(period);
                Ok(if t >= period { 0.0 } else { t })
            }
        }
    }

    /// Native parameter-space distance `d_Θ`.
    pub fn distance(&self, a: f64, b: f64) -> f64 {
        match *self {
            ParamDomain::Interval { .. } => (a - b).abs(),
            ParamDomain::Periodic { period } => {
                let d = (a - b).rem_euclid(period);
                d.min(period - d)
            }
        }
    }
}

/// A geometric characteristic that is either known in closed form or
/// produced by [`estimate_characteristics`] (and possibly not yet filled).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Characteristic {
    Exact(f64),
    Estimated(Option<f64>),
}

impl Characteristic {
    pub fn value(&self) -> Option<f64> {
        match *self {
            Characteristic::Exact(v) => Some(v),
            Characteristic::Estimated(v) => v,
        }
    }

    fn fill(self, v: f64) -> Self {
        match self {
            Characteristic::Exact(_) => self,
            Characteristic::Estimated(_) => Characteristic::Estimated(Some(v)),
        }
    }
}

/// Reach `τ` (the condition number is `1/τ`), volume `V` and geodesic
/// covering regularity `R`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Characteristics {
    pub tau: Characteristic,
    pub volume: Characteristic,
    pub regularity: Characteristic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct ManifoldModel {
    #[serde(flatten)]
    shape: ManifoldShape,
    ambient_dim: usize,
    characteristics: Characteristics,
}

#[derive(Deserialize)]
struct RawModel {
    #[serde(flatten)]
    shape: ManifoldShape,
    ambient_dim: usize,
    characteristics: Option<Characteristics>,
}

impl TryFrom<RawModel> for ManifoldModel {
    type Error = Error;

    fn try_from(raw: RawModel) -> Result<Self> {
        let mut model = ManifoldModel::new(raw.shape, raw.ambient_dim)?;
        if let Some(c) = raw.characteristics {
            model.characteristics = c;
        }
        Ok(model)
    }
}

pub fn circle_manifold(ambient_dim: usize, radius: f64) -> Result<ManifoldModel> {
    ManifoldModel::new(ManifoldShape::Circle { radius }, ambient_dim)
}

pub fn pulse_manifold(ambient_dim: usize, width: f64) -> Result<ManifoldModel> {
    ManifoldModel::new(ManifoldShape::Pulse { width }, ambient_dim)
}

pub fn line_segment_manifold(ambient_dim: usize) -> Result<ManifoldModel> {
    ManifoldModel::new(ManifoldShape::LineSegment, ambient_dim)
}

impl ManifoldModel {
    pub fn new(shape: ManifoldShape, ambient_dim: usize) -> Result<Self> {
        if ambient_dim < 2 {
            return Err(Error::Dimension(format!(
                "ambient dimension must be at least 2, got {ambient_dim}"
            )));
        }
        let characteristics = match shape {
            ManifoldShape::Circle { radius } => {
                if !(radius.is_finite() && radius > 0.0) {
                    return Err(Error::Domain(format!(
                        "circle radius must be positive, got {radius}"
                    )));
                }
                // any R > 1/2 works for the circle
                Characteristics {
                    tau: Characteristic::Exact(radius),
                    volume: Characteristic::Exact(2.0 * PI * radius),
                    regularity: Characteristic::Exact(0.51),
                }
            }
            ManifoldShape::Pulse { width } => {
                if !(width.is_finite() && width > 0.0 && width < 1.0) {
                    return Err(Error::Domain(format!(
                        "pulse width must lie in (0, 1), got {width}"
                    )));
                }
                Characteristics {
                    tau: Characteristic::Estimated(None),
                    volume: Characteristic::Estimated(None),
                    regularity: Characteristic::Estimated(None),
                }
            }
            ManifoldShape::LineSegment => Characteristics {
                tau: Characteristic::Estimated(None),
                volume: Characteristic::Exact(1.0),
                regularity: Characteristic::Estimated(None),
            },
        };
        Ok(ManifoldModel {
            shape,
            ambient_dim,
            characteristics,
        })
    }

    pub fn shape(&self) -> ManifoldShape {
        self.shape
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn intrinsic_dim(&self) -> usize {
        1
    }

    pub fn domain(&self) -> ParamDomain {
        match self.shape {
            ManifoldShape::Circle { .. } => ParamDomain::Periodic { period: 2.0 * PI },
            ManifoldShape::Pulse { .. } | ManifoldShape::LineSegment => {
                ParamDomain::Interval { lo: 0.0, hi: 1.0 }
            }
        }
    }

    pub fn characteristics(&self) -> &Characteristics {
        &self.characteristics
    }

    pub fn tau(&self) -> Option<f64> {
        self.characteristics.tau.value()
    }

    pub fn volume(&self) -> Option<f64> {
        self.characteristics.volume.value()
    }

    pub fn regularity(&self) -> Option<f64> {
        self.characteristics.regularity.value()
    }

    /// Copy of the model with every estimated characteristic set from `est`.
    /// Exact characteristics are kept.
    pub fn with_estimates(&self, est: &Estimates) -> Self {
        let mut out = self.clone();
        let c = &mut out.characteristics;
        c.tau = c.tau.fill(est.tau);
        c.volume = c.volume.fill(est.volume);
        c.regularity = c.regularity.fill(est.regularity);
        out
    }

    /// `(τ, V, R)` if all three are available.
    pub fn known_characteristics(&self) -> Option<(f64, f64, f64)> {
        Some((self.tau()?, self.volume()?, self.regularity()?))
    }

    /// `x_θ`. Periodic parameters may be given unreduced; interval
    /// parameters are not checked here (see [`ParamDomain::normalize`]).
    pub fn point(&self, theta: f64) -> DVector<f64> {
        let n = self.ambient_dim;
        match self.shape {
            ManifoldShape::Circle { radius } => {
                let mut x = DVector::zeros(n);
                x[0] = radius * theta.cos();
                x[1] = radius * theta.sin();
                x
            }
            ManifoldShape::Pulse { width } => {
                let inv = 1.0 / (2.0 * width * width);
                DVector::from_fn(n, |i, _| {
                    let d = (i + 1) as f64 / n as f64 - theta;
                    (-d * d * inv).exp()
                })
            }
            ManifoldShape::LineSegment => {
                let mut x = DVector::zeros(n);
                x[0] = theta;
                x
            }
        }
    }

    /// `dx_θ/dθ`.
    pub fn tangent(&self, theta: f64) -> DVector<f64> {
        let n = self.ambient_dim;
        match self.shape {
            ManifoldShape::Circle { radius } => {
                let mut x = DVector::zeros(n);
                x[0] = -radius * theta.sin();
                x[1] = radius * theta.cos();
                x
            }
            ManifoldShape::Pulse { width } => {
                let s2 = width * width;
                DVector::from_fn(n, |i, _| {
                    let d = (i + 1) as f64 / n as f64 - theta;
                    (-d * d / (2.0 * s2)).exp() * d / s2
                })
            }
            ManifoldShape::LineSegment => {
                let mut x = DVector::zeros(n);
                x[0] = 1.0;
                x
            }
        }
    }

    /// `d²x_θ/dθ²`.
    pub fn acceleration(&self, theta: f64) -> DVector<f64> {
        let n = self.ambient_dim;
        match self.shape {
            ManifoldShape::Circle { radius } => {
                let mut x = DVector::zeros(n);
                x[0] = -radius * theta.cos();
                x[1] = -radius * theta.sin();
                x
            }
            ManifoldShape::Pulse { width } => {
                let s2 = width * width;
                DVector::from_fn(n, |i, _| {
                    let d = (i + 1) as f64 / n as f64 - theta;
                    (-d * d / (2.0 * s2)).exp() * (d * d / (s2 * s2) - 1.0 / s2)
                })
            }
            ManifoldShape::LineSegment => DVector::zeros(n),
        }
    }

    /// `‖dx_θ/dθ‖`.
    pub fn speed(&self, theta: f64) -> f64 {
        match self.shape {
            ManifoldShape::Circle { radius } => radius,
            ManifoldShape::LineSegment => 1.0,
            ManifoldShape::Pulse { .. } => self.tangent(theta).norm(),
        }
    }

    /// Curvature of the curve at `theta`: the norm of the second derivative
    /// of the unit-speed reparameterization.
    pub fn curvature(&self, theta: f64) -> f64 {
        let d1 = self.tangent(theta);
        let speed = d1.norm();
        if speed == 0.0 {
            return f64::INFINITY;
        }
        let t = d1 / speed;
        let d2 = self.acceleration(theta);
        let normal = &d2 - &t * t.dot(&d2);
        normal.norm() / (speed * speed)
    }

    /// Grid points as the columns of an N x n matrix.
    pub fn sample_matrix(&self, params: &[f64]) -> nalgebra::DMatrix<f64> {
        let mut out = nalgebra::DMatrix::zeros(self.ambient_dim, params.len());
        for (j, &t) in params.iter().enumerate() {
            out.set_column(j, &self.point(t));
        }
        out
    }

    /// Unit vector orthogonal to the tangent at `theta`, drawn from `rng`.
    pub fn random_normal(&self, theta: f64, rng: &mut crate::rng::Rng) -> DVector<f64> {
        let t = self.tangent(theta);
        let t = &t / t.norm();
        loop {
            let g = crate::rng::gaussian_vector(self.ambient_dim, rng);
            let v = &g - &t * t.dot(&g);
            let n = v.norm();
            if n > 1e-8 * g.norm() {
                return v / n;
            }
        }
    }
}

/// Geodesic distance `d_M(x_θ1, x_θ2)` along the manifold.
///
/// Exact for the circle (shorter arc) and the segment; for the pulse family
/// the arc length `∫‖dx_θ/dθ‖dθ` is integrated adaptively to relative
/// accuracy well below 1e-6.
pub fn geodesic_distance(m: &ManifoldModel, theta1: f64, theta2: f64) -> Result<f64> {
    let domain = m.domain();
    let a = domain.normalize(theta1)?;
    let b = domain.normalize(theta2)?;
    Ok(match m.shape {
        ManifoldShape::Circle { radius } => radius * domain.distance(a, b),
        ManifoldShape::LineSegment => (a - b).abs(),
        ManifoldShape::Pulse { .. } => {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            arclength::arc_length(m, lo, hi)
        }
    })
}
