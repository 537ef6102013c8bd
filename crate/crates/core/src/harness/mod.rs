//! Seeded Monte Carlo experiments.
//!
//! Trial `i` of an experiment with base seed `s` uses
//! `derive_seed(s, i)` for its projector and sub-streams of that seed for
//! its noise (and signal, when the signal is redrawn), so results do not
//! depend on how trials are scheduled across threads.

mod records;
mod stats;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{
    measurement_rate, parameter_bound, recovery_bound, required_measurements, BoundInputs,
};
use crate::error::{Error, Result};
use crate::linops::{make_orthoprojector, measure, pairwise_distortion_columns};
use crate::manifolds::{
    estimate_characteristics, geodesic_distance, ManifoldModel, ManifoldShape, ParamDomain,
    DEFAULT_GRID_DENSITY,
};
use crate::recovery::{full_data_optimum, recover_signal};
use crate::rng::{derive_seed, rng_from_seed, sphere_vector, Rng};

pub use records::{
    fmt_f64, read_records, records_to_string, write_records, write_records_to, CsvRecord,
    EmbeddingRecord, RecordFormat, TrialRecord,
};
pub use stats::{wilson_lower, Z_95_ONE_SIDED};

const NOISE_STREAM: u64 = 1;
const SIGNAL_STREAM: u64 = 2;
const FIXED_SIGNAL_INDEX: u64 = u64::MAX;

/// How many measurements to take.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MeasDim {
    Fixed(usize),
    /// Sized by [`required_measurements`] with the given constant.
    Auto {
        constant: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub manifold: ManifoldShape,
    pub ambient_dim: usize,
    pub meas_dim: MeasDim,
    pub epsilon: f64,
    pub rho: f64,
    pub noise_norm: f64,
    /// Target `‖x − x*‖`, applied along a random normal direction.
    pub offset: f64,
    pub trials: usize,
    pub base_seed: u64,
    pub grid_density: usize,
    /// Keep one signal `x` for every trial (only the projector and noise
    /// vary); otherwise redraw it per trial.
    pub fix_signal: bool,
    /// Generating parameter; drawn from the seed when absent.
    pub theta: Option<f64>,
    /// Grid points on which embedding distortion is measured.
    pub embedding_points: usize,
    /// Samples for numerical estimation of τ, V, R.
    pub characteristic_samples: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            manifold: ManifoldShape::Pulse { width: 0.05 },
            ambient_dim: 256,
            meas_dim: MeasDim::Fixed(32),
            epsilon: 0.5,
            rho: 0.1,
            noise_norm: 0.0,
            offset: 0.0,
            trials: 100,
            base_seed: 0,
            grid_density: DEFAULT_GRID_DENSITY,
            fix_signal: true,
            theta: None,
            embedding_points: 128,
            characteristic_samples: 2000,
        }
    }
}

fn open_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")))
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        open_unit("epsilon", self.epsilon)?;
        open_unit("rho", self.rho)?;
        for (name, v) in [("noise_norm", self.noise_norm), ("offset", self.offset)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        if self.grid_density < 2 {
            return Err(Error::Config("grid_density must be at least 2".into()));
        }
        if self.embedding_points * (self.embedding_points.saturating_sub(1)) / 2 < 1000 {
            return Err(Error::Config(format!(
                "embedding_points = {} gives fewer than 1000 pairs",
                self.embedding_points
            )));
        }
        if self.characteristic_samples < 100 {
            return Err(Error::Config(
                "characteristic_samples must be at least 100".into(),
            ));
        }
        match self.meas_dim {
            MeasDim::Fixed(m) if m == 0 || m > self.ambient_dim => {
                return Err(Error::Config(format!(
                    "meas_dim {m} outside 1..={}",
                    self.ambient_dim
                )))
            }
            MeasDim::Auto { constant } if !(constant > 0.0 && constant.is_finite()) => {
                return Err(Error::Config(format!(
                    "constant must be positive, got {constant}"
                )))
            }
            _ => {}
        }
        ManifoldModel::new(self.manifold, self.ambient_dim)
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(())
    }

    /// The manifold model with τ, V and R filled in (estimated if needed).
    pub fn model(&self) -> Result<ManifoldModel> {
        let m = ManifoldModel::new(self.manifold, self.ambient_dim)?;
        if m.known_characteristics().is_some() {
            return Ok(m);
        }
        let est = estimate_characteristics(&m, self.characteristic_samples)?;
        Ok(m.with_estimates(&est))
    }

    fn resolve_meas_dim(&self, m: &ManifoldModel) -> Result<usize> {
        match self.meas_dim {
            MeasDim::Fixed(k) => Ok(k),
            MeasDim::Auto { constant } => {
                let (tau, volume, regularity) = characteristics_of(m)?;
                required_measurements(
                    m.intrinsic_dim(),
                    m.ambient_dim(),
                    volume,
                    regularity,
                    tau,
                    self.epsilon,
                    self.rho,
                    constant,
                )
            }
        }
    }
}

fn characteristics_of(m: &ManifoldModel) -> Result<(f64, f64, f64)> {
    m.known_characteristics()
        .filter(|(t, v, r)| t.is_finite() && v.is_finite() && r.is_finite())
        .ok_or_else(|| Error::Config("manifold characteristics τ, V, R are not available".into()))
}

fn embedding_samples(m: &ManifoldModel, points: usize) -> DMatrix<f64> {
    m.sample_matrix(&m.domain().grid(points))
}

/// Runs `f` on a pool of `jobs` threads (`None`: all available cores).
pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(Error::Config("jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| Error::Config(format!("thread pool: {e}"))),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmbeddingSummary {
    pub trials: usize,
    pub meas_dim: usize,
    pub pairs_per_trial: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub wilson_lower: f64,
    /// `1 − ρ`
    pub target: f64,
    pub meets_target: bool,
}

#[derive(Debug, Clone)]
pub struct EmbeddingRun {
    pub summary: EmbeddingSummary,
    pub records: Vec<EmbeddingRecord>,
}

/// Certifies a stable embedding empirically: for each seed, draws a
/// projector and checks that every pair of grid points has its distance
/// preserved within `(1 ± ε)`.
pub fn run_embedding_experiment(cfg: &ExperimentConfig) -> Result<EmbeddingRun> {
    cfg.validate()?;
    let model = match cfg.meas_dim {
        MeasDim::Fixed(_) => ManifoldModel::new(cfg.manifold, cfg.ambient_dim)?,
        MeasDim::Auto { .. } => cfg.model()?,
    };
    let meas_dim = cfg.resolve_meas_dim(&model)?;
    let samples = embedding_samples(&model, cfg.embedding_points);
    embedding_trials(cfg, meas_dim, &samples)
}

fn embedding_trials(
    cfg: &ExperimentConfig,
    meas_dim: usize,
    samples: &DMatrix<f64>,
) -> Result<EmbeddingRun> {
    let records: Vec<EmbeddingRecord> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(cfg.base_seed, i);
            let p = make_orthoprojector(meas_dim, cfg.ambient_dim, seed)?;
            let d = pairwise_distortion_columns(&p, samples)?;
            Ok(EmbeddingRecord {
                seed,
                meas_dim,
                eps_lo: d.eps_lo,
                eps_hi: d.eps_hi,
                success: d.max() <= cfg.epsilon,
            })
        })
        .collect::<Result<_>>()?;
    let successes = records.iter().filter(|r| r.success).count();
    let n = samples.ncols();
    let wilson = wilson_lower(successes, records.len()).unwrap_or(0.0);
    let target = 1.0 - cfg.rho;
    Ok(EmbeddingRun {
        summary: EmbeddingSummary {
            trials: records.len(),
            meas_dim,
            pairs_per_trial: n * (n - 1) / 2,
            successes,
            success_rate: successes as f64 / records.len() as f64,
            wilson_lower: wilson,
            target,
            meets_target: wilson >= target,
        },
        records,
    })
}

/// Satisfaction counts, recomputable from the records alone.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoverySummary {
    pub trials: usize,
    pub satisfied3: usize,
    pub rate3: f64,
    pub wilson3: f64,
    /// Trials where the geodesic bound's precondition holds.
    pub precondition_trials: usize,
    pub satisfied4: usize,
    pub rate4: Option<f64>,
    pub wilson4: Option<f64>,
    pub ambiguous_trials: usize,
    /// `1 − ρ`
    pub target: f64,
}

pub fn summarize_records(records: &[TrialRecord], rho: f64) -> RecoverySummary {
    let trials = records.len();
    let satisfied3 = records.iter().filter(|r| r.satisfied3).count();
    let precondition_trials = records.iter().filter(|r| r.bound4_precondition).count();
    let satisfied4 = records
        .iter()
        .filter(|r| r.satisfied4 == Some(true))
        .count();
    RecoverySummary {
        trials,
        satisfied3,
        rate3: if trials > 0 {
            satisfied3 as f64 / trials as f64
        } else {
            0.0
        },
        wilson3: wilson_lower(satisfied3, trials).unwrap_or(0.0),
        precondition_trials,
        satisfied4,
        rate4: (precondition_trials > 0).then(|| satisfied4 as f64 / precondition_trials as f64),
        wilson4: wilson_lower(satisfied4, precondition_trials),
        ambiguous_trials: records.iter().filter(|r| r.ambiguous).count(),
        target: 1.0 - rho,
    }
}

#[derive(Debug, Clone)]
pub struct RecoveryRun {
    pub summary: RecoverySummary,
    pub records: Vec<TrialRecord>,
    pub meas_dim: usize,
    pub model: ManifoldModel,
}

struct Signal {
    theta_true: f64,
    x: DVector<f64>,
    theta_star: f64,
    x_star: DVector<f64>,
    err_model: f64,
    ambiguous: bool,
}

/// Random parameter: uniform on a periodic domain, uniform on the middle 80%
/// of an interval.
pub fn draw_theta(domain: ParamDomain, rng: &mut Rng) -> f64 {
    use rand::Rng as _;
    match domain {
        // stay off the ends of an interval, where the normal space is
        // not representative
        ParamDomain::Interval { lo, hi } => {
            let w = hi - lo;
            rng.random_range((lo + 0.1 * w)..(hi - 0.1 * w))
        }
        ParamDomain::Periodic { period } => rng.random_range(0.0..period),
    }
}

fn make_signal(cfg: &ExperimentConfig, m: &ManifoldModel, rng: &mut Rng) -> Result<Signal> {
    let theta_true = match cfg.theta {
        Some(t) => m.domain().normalize(t)?,
        None => draw_theta(m.domain(), rng),
    };
    let mut x = m.point(theta_true);
    if cfg.offset > 0.0 {
        x += m.random_normal(theta_true, rng) * cfg.offset;
    }
    let opt = full_data_optimum(&x, m, cfg.grid_density)?;
    Ok(Signal {
        theta_true,
        err_model: opt.distance,
        theta_star: opt.theta,
        x_star: opt.point,
        ambiguous: opt.ambiguous,
        x,
    })
}

/// Monte Carlo certification of the recovery and geodesic estimation
/// bounds. Each trial draws a projector (and noise), recovers `x̂`, and
/// checks `‖x − x̂‖` and `d_M(x̂, x*)` against the bounds evaluated with the
/// model's τ, V, R and the configured ε.
pub fn run_recovery_experiment(cfg: &ExperimentConfig) -> Result<RecoveryRun> {
    cfg.validate()?;
    let model = cfg.model()?;
    let meas_dim = cfg.resolve_meas_dim(&model)?;
    let (tau, volume, regularity) = characteristics_of(&model)?;
    let samples = embedding_samples(&model, cfg.embedding_points);

    let fixed = if cfg.fix_signal {
        let mut rng = rng_from_seed(derive_seed(cfg.base_seed, FIXED_SIGNAL_INDEX));
        Some(make_signal(cfg, &model, &mut rng)?)
    } else {
        None
    };

    let records: Vec<TrialRecord> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|i| {
            let seed = derive_seed(cfg.base_seed, i);
            let drawn;
            let signal = match &fixed {
                Some(s) => s,
                None => {
                    let mut rng = rng_from_seed(derive_seed(seed, SIGNAL_STREAM));
                    drawn = make_signal(cfg, &model, &mut rng)?;
                    &drawn
                }
            };
            let p = make_orthoprojector(meas_dim, cfg.ambient_dim, seed)?;
            let mut noise_rng = rng_from_seed(derive_seed(seed, NOISE_STREAM));
            let noise = sphere_vector(meas_dim, cfg.noise_norm, &mut noise_rng);
            let y = measure(&p, &signal.x, &noise)?;
            let sol = recover_signal(&y, &p, &model, cfg.grid_density)?;

            let err_signal = (&signal.x - &sol.x_hat).norm();
            let geo_err = geodesic_distance(&model, sol.theta_hat, signal.theta_star)?;
            let inputs = BoundInputs {
                ambient_dim: cfg.ambient_dim,
                meas_dim,
                epsilon: cfg.epsilon,
                rho: cfg.rho,
                tau,
                volume,
                regularity,
                intrinsic_dim: model.intrinsic_dim(),
                model_error: signal.err_model,
                noise_norm: y.noise_norm,
            };
            let b3 = recovery_bound(&inputs)?;
            let b4 = parameter_bound(&inputs)?;
            let eps = pairwise_distortion_columns(&p, &samples)?;
            debug_assert!((&signal.x_star - model.point(signal.theta_star)).norm() == 0.0);

            Ok(TrialRecord {
                seed,
                theta_true: signal.theta_true,
                theta_star: signal.theta_star,
                theta_hat: sol.theta_hat,
                err_signal,
                err_model: signal.err_model,
                err_noise: y.noise_norm,
                geo_err,
                bound3_value: b3.value,
                bound4_value: b4.value,
                bound4_precondition: b4.precondition_met,
                satisfied3: err_signal <= b3.value,
                satisfied4: b4.precondition_met.then_some(geo_err <= b4.value),
                empirical_eps: eps.max(),
                ambiguous: sol.ambiguous || signal.ambiguous,
            })
        })
        .collect::<Result<_>>()?;

    Ok(RecoveryRun {
        summary: summarize_records(&records, cfg.rho),
        records,
        meas_dim,
        model,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationStep {
    pub constant: f64,
    pub meas_dim: usize,
    pub wilson_lower: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub constant: f64,
    pub meas_dim: usize,
    pub success_rate: f64,
    pub wilson_lower: f64,
    /// Measurement count per unit constant.
    pub rate_per_constant: f64,
    pub steps: Vec<CalibrationStep>,
}

pub const CALIBRATION_RANGE: (f64, f64) = (0.1, 100.0);

/// Smallest constant `C` in [0.1, 100] for which `M = required_measurements(C)`
/// passes the embedding experiment, i.e. the lower Wilson bound of the
/// success rate over `cfg.trials` seeds reaches `target_rate`.
///
/// Bisection on `C`; each distinct `M` is evaluated once. Assumes the success
/// rate is nondecreasing in `M`.
pub fn calibrate_constant(cfg: &ExperimentConfig, target_rate: f64) -> Result<Calibration> {
    // the measurement count is what is being searched for
    ExperimentConfig {
        meas_dim: MeasDim::Auto { constant: 1.0 },
        ..cfg.clone()
    }
    .validate()?;
    open_unit("target_rate", target_rate)?;
    let model = cfg.model()?;
    let (tau, volume, regularity) = characteristics_of(&model)?;
    let per_unit = measurement_rate(
        model.intrinsic_dim(),
        cfg.ambient_dim,
        volume,
        regularity,
        tau,
        cfg.epsilon,
        cfg.rho,
    )?;
    let samples = embedding_samples(&model, cfg.embedding_points);
    let meas_for = |c: f64| {
        required_measurements(
            model.intrinsic_dim(),
            cfg.ambient_dim,
            volume,
            regularity,
            tau,
            cfg.epsilon,
            cfg.rho,
            c,
        )
    };

    let mut cache: Vec<(usize, EmbeddingSummary)> = Vec::new();
    let mut steps = Vec::new();
    let mut evaluate = |c: f64| -> Result<(bool, EmbeddingSummary)> {
        let m = meas_for(c)?;
        let summary = match cache.iter().find(|(k, _)| *k == m) {
            Some((_, s)) => s.clone(),
            None => {
                let s = embedding_trials(cfg, m, &samples)?.summary;
                log::debug!("calibration: C={c:.6} M={m} wilson={:.4}", s.wilson_lower);
                cache.push((m, s.clone()));
                s
            }
        };
        let passed = summary.wilson_lower >= target_rate;
        steps.push(CalibrationStep {
            constant: c,
            meas_dim: m,
            wilson_lower: summary.wilson_lower,
            passed,
        });
        Ok((passed, summary))
    };

    let (mut lo, mut hi) = CALIBRATION_RANGE;
    let (hi_ok, mut best) = evaluate(hi)?;
    if !hi_ok {
        return Err(Error::Calibration(format!(
            "C = {hi} (M = {}) reaches a lower success bound of only {:.4} < {target_rate}",
            best.meas_dim, best.wilson_lower
        )));
    }
    let (lo_ok, lo_summary) = evaluate(lo)?;
    if lo_ok {
        hi = lo;
        best = lo_summary;
    } else {
        while hi - lo > 1e-9 * hi {
            let mid = 0.5 * (lo + hi);
            let (ok, s) = evaluate(mid)?;
            if ok {
                hi = mid;
                best = s;
            } else {
                lo = mid;
            }
        }
    }

    Ok(Calibration {
        constant: hi,
        meas_dim: best.meas_dim,
        success_rate: best.success_rate,
        wilson_lower: best.wilson_lower,
        rate_per_constant: per_unit,
        steps,
    })
}
