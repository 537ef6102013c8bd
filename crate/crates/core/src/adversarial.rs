//! Worst-case instance for the deterministic recovery bound.
//!
//! The model set is the segment from the origin to `e₁` in R^N and the
//! measurement is a single row `Φ = √N·(cos γ, −sin γ, 0, …, 0)`. Every
//! secant of the segment is shrunk by exactly `√N cos γ = 1 − ε`, while the
//! signal `x = (1, tan(π/2 − γ), 0, …, 0)` lies in the null space of `Φ`, so
//! recovery returns the far endpoint (the origin) instead of `x* = e₁`, and
//! `‖x − x̂‖/‖x − x*‖ = √N/(1 − ε)`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};

use crate::bounds::deterministic_bound;
use crate::error::{Error, Result};
use crate::linops::{measure, pairwise_distortion, Orthoprojector};
use crate::manifolds::{line_segment_manifold, ManifoldModel};
use crate::recovery::{full_data_optimum, recover_signal};

const UNIFORMITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct AdversarialInstance {
    pub projector: Orthoprojector,
    pub signal: DVector<f64>,
    pub segment: ManifoldModel,
    pub gamma: f64,
    /// `1 − √N cos γ`
    pub epsilon: f64,
    /// `√N / (1 − ε)`
    pub achieved_ratio: f64,
}

impl AdversarialInstance {
    pub fn ambient_dim(&self) -> usize {
        self.signal.len()
    }
}

pub fn build_adversarial(ambient_dim: usize, gamma: f64) -> Result<AdversarialInstance> {
    if ambient_dim < 2 {
        return Err(Error::Dimension(format!(
            "ambient dimension must be at least 2, got {ambient_dim}"
        )));
    }
    if !(0.0..FRAC_PI_2).contains(&gamma) {
        return Err(Error::Domain(format!(
            "gamma must lie in [0, π/2), got {gamma}"
        )));
    }
    let n = ambient_dim as f64;
    let (sin_g, cos_g) = gamma.sin_cos();
    if cos_g >= 1.0 / n.sqrt() {
        return Err(Error::Precondition(format!(
            "need cos(gamma) < 1/sqrt(N) = {}, got {cos_g}",
            1.0 / n.sqrt()
        )));
    }

    let mut row = DMatrix::zeros(1, ambient_dim);
    row[(0, 0)] = cos_g;
    row[(0, 1)] = -sin_g;
    let projector = Orthoprojector::new(row)?;

    let mut signal = DVector::zeros(ambient_dim);
    signal[0] = 1.0;
    signal[1] = (FRAC_PI_2 - gamma).tan();

    let segment = line_segment_manifold(ambient_dim)?;
    let epsilon = 1.0 - n.sqrt() * cos_g;

    // every secant of the segment is scaled by exactly 1 − ε
    let samples: Vec<_> = (0..=10).map(|i| segment.point(i as f64 / 10.0)).collect();
    let d = pairwise_distortion(&projector, &samples)?;
    if (d.eps_lo - epsilon).abs() > UNIFORMITY_TOL || (d.eps_hi + epsilon).abs() > UNIFORMITY_TOL {
        return Err(Error::Numeric(format!(
            "segment distortion not uniform: eps_lo {} eps_hi {} expected {epsilon}",
            d.eps_lo, d.eps_hi
        )));
    }

    Ok(AdversarialInstance {
        projector,
        signal,
        segment,
        gamma,
        epsilon,
        achieved_ratio: n.sqrt() / (1.0 - epsilon),
    })
}

/// Instance with `cos γ` given directly.
pub fn build_adversarial_from_cos(
    ambient_dim: usize,
    cos_gamma: f64,
) -> Result<AdversarialInstance> {
    if !(cos_gamma > 0.0 && cos_gamma <= 1.0) {
        return Err(Error::Domain(format!(
            "cos(gamma) must lie in (0, 1], got {cos_gamma}"
        )));
    }
    // checked here as well, since acos then cos need not round-trip
    if cos_gamma * (ambient_dim as f64).sqrt() >= 1.0 {
        return Err(Error::Precondition(format!(
            "need cos(gamma) < 1/sqrt(N) = {}, got {cos_gamma}",
            1.0 / (ambient_dim as f64).sqrt()
        )));
    }
    build_adversarial(ambient_dim, cos_gamma.acos())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tightness {
    /// `‖x − x̂‖ / ‖x − x*‖` from actually running recovery.
    pub achieved: f64,
    /// Deterministic bound at `(N, M = 1, ε)`.
    pub bound: f64,
    pub theta_hat: f64,
    pub theta_star: f64,
    pub x_hat: DVector<f64>,
}

impl Tightness {
    pub fn ratio(&self) -> f64 {
        self.achieved / self.bound
    }
}

/// Runs recovery on the instance and compares the realized error ratio with
/// the closed form and with the deterministic bound.
pub fn verify_tightness(inst: &AdversarialInstance, grid_density: usize) -> Result<Tightness> {
    let n = inst.ambient_dim();
    let meas = measure(&inst.projector, &inst.signal, &DVector::zeros(1))?;
    let sol = recover_signal(&meas, &inst.projector, &inst.segment, grid_density)?;
    let opt = full_data_optimum(&inst.signal, &inst.segment, grid_density)?;
    let achieved = (&inst.signal - &sol.x_hat).norm() / opt.distance;
    let bound = deterministic_bound(n, 1, inst.epsilon)?.value;

    let tol = 1e-6 * inst.achieved_ratio;
    if (achieved - inst.achieved_ratio).abs() > tol {
        return Err(Error::Numeric(format!(
            "achieved ratio {achieved} differs from closed form {}",
            inst.achieved_ratio
        )));
    }
    Ok(Tightness {
        achieved,
        bound,
        theta_hat: sol.theta_hat,
        theta_star: opt.theta,
        x_hat: sol.x_hat,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn four_dimensional_instance() {
        let inst = build_adversarial_from_cos(4, 0.25).unwrap();
        assert_relative_eq!(inst.epsilon, 0.5, epsilon = 1e-12);
        assert_relative_eq!(inst.achieved_ratio, 4.0, epsilon = 1e-9);
        let phi_x = inst.projector.apply(&inst.signal).unwrap();
        assert!(phi_x.norm() < 1e-10);
        assert_eq!(inst.signal[0], 1.0);
        assert_relative_eq!(inst.signal[1], (FRAC_PI_2 - inst.gamma).tan());

        let t = verify_tightness(&inst, 1024).unwrap();
        assert_relative_eq!(t.achieved, 4.0, max_relative = 1e-6);
        assert!((t.bound - 8.2913).abs() < 1e-4);
        assert!((t.ratio() - 0.482).abs() < 1e-3);
        assert!(t.x_hat.norm() < 1e-9);
        assert_eq!(t.theta_star, 1.0);
        // ‖x − x*‖ = tan(π/2 − γ)
        let opt = full_data_optimum(&inst.signal, &inst.segment, 1024).unwrap();
        assert_relative_eq!(
            opt.distance,
            (FRAC_PI_2 - inst.gamma).tan(),
            max_relative = 1e-12
        );
    }

    #[test]
    fn sixteen_dimensional_instance() {
        let inst = build_adversarial_from_cos(16, 0.1).unwrap();
        assert_relative_eq!(inst.epsilon, 0.6, epsilon = 1e-12);
        let t = verify_tightness(&inst, 1024).unwrap();
        assert_relative_eq!(t.achieved, 10.0, max_relative = 1e-6);
        let a = 16.0 / 0.16;
        let direct = (4.0 * a - 3.0 + 2.0 * (a - 1.0f64).sqrt()).sqrt();
        assert_relative_eq!(t.bound, direct, max_relative = 1e-12);
    }

    #[test]
    fn ratio_within_range_on_sweep() {
        for n in [4usize, 9, 16, 64, 256] {
            let limit = 1.0 / (n as f64).sqrt();
            for frac in [0.5, 0.2, 0.05] {
                let inst = build_adversarial_from_cos(n, frac * limit).unwrap();
                let t = verify_tightness(&inst, 512).unwrap();
                assert!(
                    (0.45..=1.0).contains(&t.ratio()),
                    "N={n} frac={frac} ratio={}",
                    t.ratio()
                );
            }
        }
    }

    #[test]
    fn approaches_right_angle() {
        let a = build_adversarial(4, 1.5).unwrap();
        let b = build_adversarial(4, 1.57).unwrap();
        assert!(b.epsilon > a.epsilon && b.epsilon < 1.0);
        assert!(b.achieved_ratio > a.achieved_ratio);
        assert!(b.achieved_ratio > 300.0);
    }

    #[test]
    fn recovery_lands_exactly_on_the_origin() {
        for n in [4usize, 16, 64, 256] {
            let inst = build_adversarial_from_cos(n, 0.5 / (n as f64).sqrt()).unwrap();
            let t = verify_tightness(&inst, 1024).unwrap();
            assert_eq!(t.theta_hat, 0.0, "N={n}");
            assert_eq!(t.x_hat.norm(), 0.0);
        }
    }

    #[test]
    fn precondition_enforced() {
        assert!(matches!(
            build_adversarial_from_cos(4, 0.5),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            build_adversarial(4, 0.0),
            Err(Error::Precondition(_))
        ));
        assert!(matches!(
            build_adversarial(4, FRAC_PI_2),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            build_adversarial(1, 1.0),
            Err(Error::Dimension(_))
        ));
    }
}
