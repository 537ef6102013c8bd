use super::{ManifoldModel, ParamDomain};

// 5-point Gauss-Legendre on [-1, 1]
const GL_NODES: [f64; 5] = [
    0.0,
    -0.538_469_310_105_683_1,
    0.538_469_310_105_683_1,
    -0.906_179_845_938_664,
    0.906_179_845_938_664,
];
const GL_WEIGHTS: [f64; 5] = [
    0.568_888_888_888_888_9,
    0.478_628_670_499_366_5,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
    0.236_926_885_056_189_1,
];

fn gauss_cell(m: &ManifoldModel, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    GL_NODES
        .iter()
        .zip(GL_WEIGHTS.iter())
        .map(|(x, w)| w * m.speed(mid + half * x))
        .sum::<f64>()
        * half
}

/// Arc length of the curve between parameters `a ≤ b`, by adaptive Simpson
/// quadrature of the speed.
pub(crate) fn arc_length(m: &ManifoldModel, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let speed = |t: f64| m.speed(t);
    let fa = speed(a);
    let fb = speed(b);
    let fm = speed(0.5 * (a + b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    // a coarse Gauss estimate fixes the absolute tolerance
    let scale = gauss_cell(m, a, b).abs().max(whole.abs());
    let tol = 1e-10 * scale.max(f64::MIN_POSITIVE);
    simpson(&speed, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Cumulative arc length at a grid of parameters.
///
/// `arc[i]` is the arc length from the start of the domain to `params[i]`.
/// For periodic domains `total` includes the closing cell back to the start.
#[derive(Debug, Clone)]
pub struct ArcTable {
    pub params: Vec<f64>,
    pub arc: Vec<f64>,
    pub total: f64,
    pub periodic: bool,
}

impl ArcTable {
    pub fn new(m: &ManifoldModel, samples: usize) -> Self {
        let domain = m.domain();
        let params = domain.grid(samples.max(2));
        let mut arc = Vec::with_capacity(params.len());
        let mut acc = 0.0;
        arc.push(0.0);
        for w in params.windows(2) {
            acc += gauss_cell(m, w[0], w[1]);
            arc.push(acc);
        }
        let (total, periodic) = match domain {
            ParamDomain::Periodic { period } => {
                let last = *params.last().unwrap();
                (acc + gauss_cell(m, last, period), true)
            }
            ParamDomain::Interval { .. } => (acc, false),
        };
        ArcTable {
            params,
            arc,
            total,
            periodic,
        }
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Geodesic distance between two arc-length positions.
    pub fn separation(&self, s1: f64, s2: f64) -> f64 {
        let d = (s1 - s2).abs();
        if self.periodic {
            d.min(self.total - d)
        } else {
            d
        }
    }

    /// Largest arc-length gap between consecutive samples.
    pub fn max_gap(&self) -> f64 {
        let inner = self.arc.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
        if self.periodic {
            inner.max(self.total - self.arc.last().copied().unwrap_or(0.0))
        } else {
            inner
        }
    }
}
