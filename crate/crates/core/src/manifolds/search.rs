//! Grid search plus local refinement over a one-dimensional parameter.
//!
//! The objective is a squared residual `f(θ)`. A uniform grid locates the
//! basins; the best few grid-local minima are refined by golden-section
//! search inside their grid bracket down to [`PARAM_TOL`], then polished by
//! damped Newton steps using the analytic slope and a central-difference
//! second derivative (only while that second derivative is positive). A
//! refined point replaces its grid point only if it lowers the objective, so
//! the result never does worse than the best grid point, and among equal
//! values the smallest parameter wins.

use nalgebra::DVector;

use super::{ManifoldModel, ParamDomain};
use crate::error::{Error, Result};

/// Default grid density for one-dimensional models.
pub const DEFAULT_GRID_DENSITY: usize = 1024;

/// Parameter tolerance of the golden-section stage.
pub const PARAM_TOL: f64 = 1e-9;

const MAX_CANDIDATES: usize = 3;
const MAX_NEWTON: usize = 30;
const GOLDEN: f64 = 0.618_033_988_749_894_9;

pub(crate) trait Objective: Sync {
    /// Squared residual at `theta`.
    fn value(&self, theta: f64) -> f64;
    /// `d value / dθ`.
    fn slope(&self, theta: f64) -> f64;
    fn grid_values(&self, grid: &[f64]) -> Vec<f64> {
        grid.iter().map(|&t| self.value(t)).collect()
    }
}

#[derive(Debug, Clone)]
pub(crate) struct SearchOutcome {
    pub theta: f64,
    pub value: f64,
    pub iterations: usize,
    pub ambiguous: bool,
}

/// Values closer than this are treated as ties. `floor` is the rounding
/// level of the objective at the scale it takes on the grid.
fn tie_tol(a: f64, b: f64, floor: f64) -> f64 {
    1e-12 * a.abs().max(b.abs()) + floor
}

fn local_minima(vals: &[f64], periodic: bool) -> Vec<usize> {
    let n = vals.len();
    let mut out = Vec::new();
    for i in 0..n {
        let left = if i > 0 {
            Some(vals[i - 1])
        } else if periodic {
            Some(vals[n - 1])
        } else {
            None
        };
        let right = if i + 1 < n {
            Some(vals[i + 1])
        } else if periodic {
            Some(vals[0])
        } else {
            None
        };
        if left.is_none_or(|l| vals[i] <= l) && right.is_none_or(|r| vals[i] <= r) {
            out.push(i);
        }
    }
    out
}

struct Refined {
    theta: f64,
    value: f64,
    iterations: usize,
}

fn refine<O: Objective + ?Sized>(
    obj: &O,
    lo: f64,
    hi: f64,
    start: f64,
    f_start: f64,
    width: f64,
) -> Refined {
    let mut best = (start, f_start);
    let mut iterations = 0;

    // golden-section stage
    let (mut a, mut b) = (lo, hi);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = obj.value(c);
    let mut fd = obj.value(d);
    while b - a > PARAM_TOL * width.max(1.0) {
        iterations += 1;
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = obj.value(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = obj.value(d);
        }
        for (t, f) in [(c, fc), (d, fd)] {
            if f < best.1 {
                best = (t, f);
            }
        }
    }

    // damped Newton polish
    let h = 1e-7 * width;
    let mut theta = best.0;
    let mut f = best.1;
    for _ in 0..MAX_NEWTON {
        let g = obj.slope(theta);
        let curv = (obj.slope(theta + h) - obj.slope(theta - h)) / (2.0 * h);
        if curv.is_nan() || curv <= 0.0 || !g.is_finite() {
            break;
        }
        let mut step = -g / curv;
        if step.abs() <= 1e-15 * width.max(theta.abs()) {
            break;
        }
        iterations += 1;
        let mut accepted = false;
        for _ in 0..12 {
            let cand = (theta + step).clamp(lo, hi);
            let fcand = obj.value(cand);
            if fcand <= f {
                theta = cand;
                f = fcand;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    Refined {
        theta,
        value: f,
        iterations,
    }
}

pub(crate) fn grid_refine<O: Objective + ?Sized>(
    domain: ParamDomain,
    obj: &O,
    grid_density: usize,
) -> Result<SearchOutcome> {
    if grid_density < 2 {
        return Err(Error::Domain(format!(
            "grid density must be at least 2, got {grid_density}"
        )));
    }
    let grid = domain.grid(grid_density);
    let vals = obj.grid_values(&grid);
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("objective not finite on the grid".into()));
    }
    let periodic = domain.is_periodic();
    let width = domain.width();
    let n = grid.len();
    let max_val = vals.iter().copied().fold(0.0, f64::max);
    let floor = 4.0 * f64::EPSILON * max_val + f64::MIN_POSITIVE;
    let tie_tol = |a: f64, b: f64| tie_tol(a, b, floor);

    // best grid point, smallest index among ties
    let min_val = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let grid_best = (0..n)
        .find(|&i| vals[i] <= min_val + tie_tol(min_val, vals[i]))
        .unwrap();

    let mut minima = local_minima(&vals, periodic);
    minima.sort_by(|&i, &j| vals[i].total_cmp(&vals[j]).then(i.cmp(&j)));
    minima.retain(|&i| i != grid_best);
    minima.insert(0, grid_best);
    minima.truncate(MAX_CANDIDATES);

    let step = width / if periodic { n as f64 } else { (n - 1) as f64 };
    let mut iterations = 0;
    let mut results: Vec<(f64, f64)> = Vec::with_capacity(minima.len());
    for &k in &minima {
        let (lo, hi) = match domain {
            ParamDomain::Interval { .. } => (grid[k.saturating_sub(1)], grid[(k + 1).min(n - 1)]),
            ParamDomain::Periodic { .. } => (grid[k] - step, grid[k] + step),
        };
        let r = refine(obj, lo, hi, grid[k], vals[k], width);
        iterations += r.iterations;
        let theta = domain.normalize(r.theta).unwrap_or(grid[k]);
        // keep the grid point unless refinement strictly improves on it
        if r.value < vals[k] - tie_tol(vals[k], r.value) {
            results.push((theta, r.value));
        } else {
            results.push((grid[k], vals[k]));
        }
    }

    let mut best = results[0];
    for &(t, f) in &results[1..] {
        let tied = (f - best.1).abs() <= tie_tol(f, best.1);
        if (!tied && f < best.1) || (tied && t < best.0) {
            best = (t, f);
        }
    }
    // never worse than the best grid point
    if best.1 > min_val + tie_tol(min_val, best.1)
        || ((best.1 - min_val).abs() <= tie_tol(min_val, best.1) && grid[grid_best] < best.0)
    {
        best = (grid[grid_best], vals[grid_best]);
    }

    let sep = 1e-6 * width;
    let rel_tie = |f: f64| (f - best.1).abs() <= 1e-9 * f.abs().max(best.1.abs());
    let ambiguous = results
        .iter()
        .any(|&(t, f)| domain.distance(t, best.0) > sep && rel_tie(f))
        || (0..n).any(|i| domain.distance(grid[i], best.0) > sep && rel_tie(vals[i]));

    Ok(SearchOutcome {
        theta: best.0,
        value: best.1,
        iterations,
        ambiguous,
    })
}

struct AmbientObjective<'a> {
    model: &'a ManifoldModel,
    target: &'a DVector<f64>,
}

impl Objective for AmbientObjective<'_> {
    fn value(&self, theta: f64) -> f64 {
        (self.target - self.model.point(theta)).norm_squared()
    }

    fn slope(&self, theta: f64) -> f64 {
        let r = self.target - self.model.point(theta);
        -2.0 * r.dot(&self.model.tangent(theta))
    }
}

/// Result of a nearest-point search.
#[derive(Debug, Clone, PartialEq)]
pub struct NearestPoint {
    pub theta: f64,
    pub point: DVector<f64>,
    /// `‖x − x*‖`
    pub distance: f64,
    /// Several well-separated parameters attain the same distance.
    pub ambiguous: bool,
    pub refinement_iterations: usize,
}

/// `θ* = argmin_θ ‖x − x_θ‖` by grid search plus refinement.
pub fn nearest_on_manifold(
    m: &ManifoldModel,
    x: &DVector<f64>,
    grid_density: usize,
) -> Result<NearestPoint> {
    if x.len() != m.ambient_dim() {
        return Err(Error::Dimension(format!(
            "target has length {}, manifold lives in R^{}",
            x.len(),
            m.ambient_dim()
        )));
    }
    let obj = AmbientObjective {
        model: m,
        target: x,
    };
    let out = grid_refine(m.domain(), &obj, grid_density)?;
    let point = m.point(out.theta);
    Ok(NearestPoint {
        theta: out.theta,
        distance: (x - &point).norm(),
        point,
        ambiguous: out.ambiguous,
        refinement_iterations: out.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifolds::{circle_manifold, pulse_manifold};
    use crate::rng::rng_from_seed;
    use approx::assert_relative_eq;

    /// Brute-force minimizer over a dense uniform grid.
    fn dense_oracle(m: &ManifoldModel, x: &DVector<f64>, n: usize) -> (f64, f64) {
        m.domain()
            .grid(n)
            .into_iter()
            .map(|t| (t, (x - m.point(t)).norm()))
            .fold(
                (0.0, f64::INFINITY),
                |best, c| if c.1 < best.1 { c } else { best },
            )
    }

    #[test]
    fn on_manifold_point_is_recovered() {
        let m = pulse_manifold(256, 0.05).unwrap();
        let x = m.point(0.3);
        let np = nearest_on_manifold(&m, &x, DEFAULT_GRID_DENSITY).unwrap();
        assert!((np.theta - 0.3).abs() < 1e-6, "theta {}", np.theta);
        assert!(np.distance < 1e-6);
    }

    #[test]
    fn normal_perturbation_matches_dense_grid() {
        let m = pulse_manifold(256, 0.05).unwrap();
        let theta = 0.6;
        let mut rng = rng_from_seed(12);
        let v = m.random_normal(theta, &mut rng);
        let x = m.point(theta) + v * 1e-3;
        let np = nearest_on_manifold(&m, &x, DEFAULT_GRID_DENSITY).unwrap();
        let (t_oracle, d_oracle) = dense_oracle(&m, &x, 100_000);
        assert!((np.theta - theta).abs() < 1e-4);
        assert!((np.theta - t_oracle).abs() < 1e-4);
        assert!(np.distance <= d_oracle + 1e-12);
        assert!(np.distance <= 1e-3 + 1e-6);
    }

    #[test]
    fn circle_radial_projection() {
        let m = circle_manifold(5, 1.0).unwrap();
        let mut x = DVector::zeros(5);
        x[0] = 2.0;
        let np = nearest_on_manifold(&m, &x, 64).unwrap();
        assert_eq!(np.theta, 0.0);
        assert_relative_eq!(np.distance, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn circle_centre_breaks_tie_at_zero() {
        let m = circle_manifold(4, 1.0).unwrap();
        let np = nearest_on_manifold(&m, &DVector::zeros(4), DEFAULT_GRID_DENSITY).unwrap();
        assert_eq!(np.theta, 0.0);
        assert!(np.ambiguous);
    }

    #[test]
    fn is_idempotent() {
        let m = pulse_manifold(128, 0.07).unwrap();
        let mut rng = rng_from_seed(3);
        let x = m.point(0.42) + crate::rng::sphere_vector(128, 0.05, &mut rng);
        let first = nearest_on_manifold(&m, &x, 512).unwrap();
        let second = nearest_on_manifold(&m, &first.point, 512).unwrap();
        assert!((first.theta - second.theta).abs() < 1e-9);
    }

    #[test]
    fn rejects_tiny_grid_and_bad_length() {
        let m = circle_manifold(3, 1.0).unwrap();
        assert!(grid_refine(
            m.domain(),
            &AmbientObjective {
                model: &m,
                target: &DVector::zeros(3)
            },
            1
        )
        .is_err());
        assert!(matches!(
            nearest_on_manifold(&m, &DVector::zeros(4), 16),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn periodic_seam_is_handled() {
        let m = circle_manifold(3, 1.0).unwrap();
        let target = m.point(2.0 * std::f64::consts::PI - 1e-4);
        let np = nearest_on_manifold(&m, &target, 100).unwrap();
        assert!(np.distance < 1e-9, "distance {}", np.distance);
        assert!(np.theta > 6.0);
    }
}
