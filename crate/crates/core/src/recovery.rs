//! Signal recovery and parameter estimation from compressive measurements.
//!
//! `x̂ = argmin_{x' ∈ M} ‖y − Φx'‖` is computed over the parameterization,
//! `θ̂ = argmin_θ ‖y − Φx_θ‖`, with the grid-plus-refinement search used for
//! the full-data nearest point, run in the M-dimensional measurement space.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linops::{Measurement, Orthoprojector};
use crate::manifolds::{grid_refine, nearest_on_manifold, ManifoldModel, NearestPoint, Objective};

#[derive(Debug, Clone, PartialEq)]
pub struct RecoverySolution {
    pub theta_hat: f64,
    /// `x_θ̂`
    pub x_hat: DVector<f64>,
    /// `‖y − Φx̂‖`
    pub residual: f64,
    pub grid_density: usize,
    pub refinement_iterations: usize,
    /// The minimum was attained (to rounding) at several separated parameters;
    /// the smallest one was returned.
    pub ambiguous: bool,
}

struct MeasurementObjective<'a> {
    model: &'a ManifoldModel,
    projector: &'a Orthoprojector,
    y: &'a DVector<f64>,
}

impl Objective for MeasurementObjective<'_> {
    fn value(&self, theta: f64) -> f64 {
        let px = self.projector.apply(&self.model.point(theta)).unwrap();
        (self.y - px).norm_squared()
    }

    fn slope(&self, theta: f64) -> f64 {
        let px = self.projector.apply(&self.model.point(theta)).unwrap();
        let pt = self.projector.apply(&self.model.tangent(theta)).unwrap();
        -2.0 * (self.y - px).dot(&pt)
    }

    fn grid_values(&self, grid: &[f64]) -> Vec<f64> {
        let xs = self.model.sample_matrix(grid);
        let ys: DMatrix<f64> = self.projector.apply_columns(&xs).unwrap();
        ys.column_iter()
            .map(|c| (self.y - c).norm_squared())
            .collect()
    }
}

fn check_dims(y: &Measurement, p: &Orthoprojector, m: &ManifoldModel) -> Result<()> {
    if p.ambient_dim() != m.ambient_dim() {
        return Err(Error::Dimension(format!(
            "projector acts on R^{}, manifold lives in R^{}",
            p.ambient_dim(),
            m.ambient_dim()
        )));
    }
    if y.y.len() != p.meas_dim() {
        return Err(Error::Dimension(format!(
            "measurement has length {}, projector has {} rows",
            y.y.len(),
            p.meas_dim()
        )));
    }
    Ok(())
}

pub fn recover_signal(
    y: &Measurement,
    p: &Orthoprojector,
    m: &ManifoldModel,
    grid_density: usize,
) -> Result<RecoverySolution> {
    check_dims(y, p, m)?;
    let obj = MeasurementObjective {
        model: m,
        projector: p,
        y: &y.y,
    };
    let out = grid_refine(m.domain(), &obj, grid_density)?;
    Ok(RecoverySolution {
        theta_hat: out.theta,
        x_hat: m.point(out.theta),
        residual: out.value.max(0.0).sqrt(),
        grid_density,
        refinement_iterations: out.iterations,
        ambiguous: out.ambiguous,
    })
}

/// `θ̂`; identical to the parameter found by [`recover_signal`].
pub fn estimate_parameter(
    y: &Measurement,
    p: &Orthoprojector,
    m: &ManifoldModel,
    grid_density: usize,
) -> Result<f64> {
    recover_signal(y, p, m, grid_density).map(|s| s.theta_hat)
}

/// `(θ*, x*)`, the best approximation available from the full signal.
pub fn full_data_optimum(
    x: &DVector<f64>,
    m: &ManifoldModel,
    grid_density: usize,
) -> Result<NearestPoint> {
    nearest_on_manifold(m, x, grid_density)
}
