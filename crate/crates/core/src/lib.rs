//! Compressive measurement of manifold-modeled signals.
//!
//! * [`linops`]: random orthoprojectors `Φ = √(N/M)·Ξ` and noisy measurement.
//! * [`manifolds`]: one-dimensional parametric models, geodesic distance,
//!   nearest-point search, covering sets, and estimates of reach, volume and
//!   covering regularity.
//! * [`recovery`]: `x̂ = argmin ‖y − Φx'‖` over the model, and the full-data
//!   optimum `x*`.
//! * [`bounds`]: closed-form recovery and estimation error bounds.
//! * [`adversarial`]: a worst-case instance showing the deterministic bound
//!   is nearly tight.
//! * [`harness`]: seeded Monte Carlo certification of the probabilistic
//!   bounds and calibration of the measurement-count constant.

pub mod adversarial;
pub mod bounds;
mod error;
pub mod harness;
pub mod linops;
pub mod manifolds;
pub mod recovery;
pub mod rng;

pub use error::{Error, Result};
