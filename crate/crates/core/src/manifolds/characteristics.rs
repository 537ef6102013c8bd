//! Numerical estimates of reach, volume and covering regularity.
//!
//! These are approximations. The reach estimate combines the two properties
//! that a reach `τ` forces on a curve: curvature at most `1/τ`, and
//! `‖x₁ − x₂‖ > τ/2` whenever `d_M(x₁, x₂) > τ`. Both are only checked on
//! samples, so the estimate can be too large for manifolds with features
//! finer than the sampling.

use nalgebra::DMatrix;

use super::{greedy_cover, ArcTable, ManifoldModel};
use crate::error::{Error, Result};

pub const MIN_SAMPLES: usize = 100;
/// Points used for the pairwise self-approach check.
const MAX_PAIR_POINTS: usize = 2000;
const FIXED_POINT_ROUNDS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimates {
    pub tau: f64,
    pub volume: f64,
    pub regularity: f64,
    /// `1 / max sampled curvature`
    pub tau_curvature: f64,
    /// Twice the smallest chord among pairs farther apart than `tau` along
    /// the manifold (infinite if there are none).
    pub tau_self_approach: f64,
}

pub fn estimate_characteristics(m: &ManifoldModel, samples: usize) -> Result<Estimates> {
    if samples < MIN_SAMPLES {
        return Err(Error::Sampling(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    let table = ArcTable::new(m, samples);
    let volume = table.total;

    let max_curv = table
        .params
        .iter()
        .map(|&t| m.curvature(t))
        .fold(0.0, f64::max);
    let tau_curvature = if max_curv > 0.0 {
        1.0 / max_curv
    } else {
        f64::INFINITY
    };

    let (tau, tau_self_approach) = self_approach(m, &table, tau_curvature);

    let k = m.intrinsic_dim() as i32;
    let kf = k as f64;
    let mut regularity: f64 = 0.0;
    for frac in [10.0, 100.0, 1000.0] {
        let t = volume / frac;
        let g = greedy_cover(m, t)?.len() as f64;
        let r = (g * t.powi(k) / (volume * kf.powf(kf / 2.0))).powf(1.0 / kf);
        regularity = regularity.max(r);
    }

    Ok(Estimates {
        tau,
        volume,
        regularity,
        tau_curvature,
        tau_self_approach,
    })
}

fn self_approach(m: &ManifoldModel, table: &ArcTable, tau_curvature: f64) -> (f64, f64) {
    let step = table.len().div_ceil(MAX_PAIR_POINTS);
    let idx: Vec<usize> = (0..table.len()).step_by(step).collect();
    let params: Vec<f64> = idx.iter().map(|&i| table.params[i]).collect();
    let pts = m.sample_matrix(&params);
    let gram: DMatrix<f64> = pts.transpose() * &pts;

    // (geodesic, chord) for every pair, ordered by geodesic separation
    let mut pairs: Vec<(f64, f64)> = Vec::with_capacity(idx.len() * (idx.len() - 1) / 2);
    for a in 0..idx.len() {
        for b in (a + 1)..idx.len() {
            let geo = table.separation(table.arc[idx[a]], table.arc[idx[b]]);
            let chord2 = gram[(a, a)] + gram[(b, b)] - 2.0 * gram[(a, b)];
            pairs.push((geo, chord2.max(0.0).sqrt()));
        }
    }
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    let mut suffix_min = vec![f64::INFINITY; pairs.len() + 1];
    for i in (0..pairs.len()).rev() {
        suffix_min[i] = suffix_min[i + 1].min(pairs[i].1);
    }
    let bound_beyond = |tau: f64| {
        let k = pairs.partition_point(|p| p.0 <= tau);
        2.0 * suffix_min[k]
    };

    let mut tau = tau_curvature;
    for _ in 0..FIXED_POINT_ROUNDS {
        let next = tau_curvature.min(bound_beyond(tau));
        if next == tau {
            break;
        }
        tau = next;
    }
    (tau, bound_beyond(tau))
}
