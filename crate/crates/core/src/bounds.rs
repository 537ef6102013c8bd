//! Closed-form error bounds for manifold-based recovery and estimation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Inputs shared by the probabilistic recovery and parameter bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundInputs {
    pub ambient_dim: usize,
    pub meas_dim: usize,
    pub epsilon: f64,
    pub rho: f64,
    pub tau: f64,
    pub volume: f64,
    pub regularity: f64,
    pub intrinsic_dim: usize,
    /// `‖x − x*‖`
    pub model_error: f64,
    /// `‖n‖`
    pub noise_norm: f64,
}

impl BoundInputs {
    pub fn validate(&self) -> Result<()> {
        if self.meas_dim == 0 || self.meas_dim > self.ambient_dim {
            return Err(Error::Dimension(format!(
                "need 1 <= M <= N, got M={} N={}",
                self.meas_dim, self.ambient_dim
            )));
        }
        if self.intrinsic_dim == 0 {
            return Err(Error::Dimension(
                "intrinsic dimension must be positive".into(),
            ));
        }
        open_unit("epsilon", self.epsilon)?;
        open_unit("rho", self.rho)?;
        for (name, v) in [
            ("tau", self.tau),
            ("volume", self.volume),
            ("regularity", self.regularity),
        ] {
            if v.is_nan() || v <= 0.0 {
                return Err(Error::Domain(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("model_error", self.model_error),
            ("noise_norm", self.noise_norm),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

fn open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} must lie in (0, 1), got {v}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundTerm {
    pub name: &'static str,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub value: f64,
    pub precondition_met: bool,
    pub terms: Vec<BoundTerm>,
}

impl BoundReport {
    fn from_terms(terms: Vec<BoundTerm>, precondition_met: bool) -> Self {
        let value = terms.iter().map(|t| t.value).sum();
        BoundReport {
            value,
            precondition_met,
            terms,
        }
    }

    pub fn term(&self, name: &str) -> Option<f64> {
        self.terms.iter().find(|t| t.name == name).map(|t| t.value)
    }
}

/// Uniform bound on `‖x − x̂‖ / ‖x − x*‖` for an orthoprojector that is a
/// `(1 ± ε)` embedding of the model set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeterministicBound {
    pub value: f64,
    /// The inner radicand `N/(M(1−ε)²) − 1` was negative and clamped to 0.
    pub clamped: bool,
}

/// `√( 4N/(M(1−ε)²) − 3 + 2√( N/(M(1−ε)²) − 1 ) )`.
///
/// `ε = 0` is accepted (it is the exact-isometry limit).
pub fn deterministic_bound(
    ambient_dim: usize,
    meas_dim: usize,
    epsilon: f64,
) -> Result<DeterministicBound> {
    if meas_dim == 0 || meas_dim > ambient_dim {
        return Err(Error::Dimension(format!(
            "need 1 <= M <= N, got M={meas_dim} N={ambient_dim}"
        )));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::Domain(format!(
            "epsilon must lie in [0, 1), got {epsilon}"
        )));
    }
    let a = ambient_dim as f64 / (meas_dim as f64 * (1.0 - epsilon).powi(2));
    let inner = a - 1.0;
    let clamped = inner < 0.0;
    let value = (4.0 * a - 3.0 + 2.0 * inner.max(0.0).sqrt()).sqrt();
    Ok(DeterministicBound { value, clamped })
}

/// `(1 + 0.25ε)‖x − x*‖ + (2 + 0.32ε)‖n‖ + ε²τ/(936N)`, holding with
/// probability at least `1 − ρ` over the projector.
pub fn recovery_bound(inputs: &BoundInputs) -> Result<BoundReport> {
    inputs.validate()?;
    let e = inputs.epsilon;
    Ok(BoundReport::from_terms(
        vec![
            BoundTerm {
                name: "model",
                value: (1.0 + 0.25 * e) * inputs.model_error,
            },
            BoundTerm {
                name: "noise",
                value: (2.0 + 0.32 * e) * inputs.noise_norm,
            },
            BoundTerm {
                name: "floor",
                value: e * e * inputs.tau / (936.0 * inputs.ambient_dim as f64),
            },
        ],
        true,
    ))
}

/// `1.16‖n‖ + ‖x − x*‖ ≤ τ/5`.
pub fn parameter_precondition(inputs: &BoundInputs) -> bool {
    1.16 * inputs.noise_norm + inputs.model_error <= inputs.tau / 5.0
}

/// Geodesic bound `(4 + 0.5ε)‖x − x*‖ + (4 + 0.64ε)‖n‖ + ε²τ/(468N)` on
/// `d_M(x̂, x*)`. The value is reported even when the precondition fails.
pub fn parameter_bound(inputs: &BoundInputs) -> Result<BoundReport> {
    inputs.validate()?;
    let e = inputs.epsilon;
    Ok(BoundReport::from_terms(
        vec![
            BoundTerm {
                name: "model",
                value: (4.0 + 0.5 * e) * inputs.model_error,
            },
            BoundTerm {
                name: "noise",
                value: (4.0 + 0.64 * e) * inputs.noise_norm,
            },
            BoundTerm {
                name: "floor",
                value: e * e * inputs.tau / (468.0 * inputs.ambient_dim as f64),
            },
        ],
        parameter_precondition(inputs),
    ))
}

/// Number of measurements for a stable embedding,
/// `min(N, ⌈C·K·ln(N·V·R/(τε))·ln(1/ρ)/ε²⌉)`.
///
/// The constant `C` is not fixed by the theory; see
/// [`crate::harness::calibrate_constant`].
#[allow(clippy::too_many_arguments)]
pub fn required_measurements(
    intrinsic_dim: usize,
    ambient_dim: usize,
    volume: f64,
    regularity: f64,
    tau: f64,
    epsilon: f64,
    rho: f64,
    constant: f64,
) -> Result<usize> {
    let per_unit = measurement_rate(
        intrinsic_dim,
        ambient_dim,
        volume,
        regularity,
        tau,
        epsilon,
        rho,
    )?;
    if !(constant > 0.0 && constant.is_finite()) {
        return Err(Error::Domain(format!(
            "constant must be positive, got {constant}"
        )));
    }
    let m = (constant * per_unit).ceil();
    Ok(if m >= ambient_dim as f64 {
        ambient_dim
    } else {
        (m as usize).max(1)
    })
}

/// `K·ln(N·V·R/(τε))·ln(1/ρ)/ε²`, the measurement count per unit constant.
pub fn measurement_rate(
    intrinsic_dim: usize,
    ambient_dim: usize,
    volume: f64,
    regularity: f64,
    tau: f64,
    epsilon: f64,
    rho: f64,
) -> Result<f64> {
    if intrinsic_dim == 0 || ambient_dim == 0 {
        return Err(Error::Dimension("dimensions must be positive".into()));
    }
    open_unit("epsilon", epsilon)?;
    open_unit("rho", rho)?;
    for (name, v) in [("volume", volume), ("regularity", regularity), ("tau", tau)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::Domain(format!(
                "{name} must be positive and finite, got {v}"
            )));
        }
    }
    let arg = ambient_dim as f64 * volume * regularity / (tau * epsilon);
    let log_arg = arg.ln();
    if log_arg.is_nan() || log_arg <= 0.0 {
        return Err(Error::Domain(format!(
            "log argument N·V·R/(τε) = {arg} gives a nonpositive logarithm"
        )));
    }
    Ok(intrinsic_dim as f64 * log_arg * (1.0 / rho).ln() / (epsilon * epsilon))
}

/// Upper bound on geodesic distance from a Euclidean distance `e ≤ τ/2`
/// between two points of a manifold with reach `τ`: `τ − τ√(1 − 2e/τ)`.
pub fn euclidean_to_geodesic(e: f64, tau: f64) -> Result<f64> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::Domain(format!("tau must be positive, got {tau}")));
    }
    if e.is_nan() || e < 0.0 {
        return Err(Error::Domain(format!(
            "distance must be nonnegative, got {e}"
        )));
    }
    if e > tau / 2.0 {
        return Err(Error::Precondition(format!(
            "euclidean distance {e} exceeds tau/2 = {}",
            tau / 2.0
        )));
    }
    Ok(tau - tau * (1.0 - 2.0 * e / tau).max(0.0).sqrt())
}

/// `R^K · V · K^{K/2} / T^K`.
pub fn covering_bound(
    intrinsic_dim: usize,
    volume: f64,
    regularity: f64,
    resolution: f64,
) -> Result<f64> {
    if intrinsic_dim == 0 {
        return Err(Error::Dimension(
            "intrinsic dimension must be positive".into(),
        ));
    }
    if resolution.is_nan() || resolution <= 0.0 {
        return Err(Error::Domain(format!(
            "resolution must be positive, got {resolution}"
        )));
    }
    if !(volume > 0.0 && regularity > 0.0) {
        return Err(Error::Domain(
            "volume and regularity must be positive".into(),
        ));
    }
    let k = intrinsic_dim as i32;
    let kf = intrinsic_dim as f64;
    Ok(regularity.powi(k) * volume * kf.powf(kf / 2.0) / resolution.powi(k))
}
