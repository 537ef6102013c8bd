use super::{ArcTable, ManifoldModel};
use crate::error::{Error, Result};

/// Arc-length spacing of the covering grid, as a fraction of the resolution.
const GRID_FRACTION: f64 = 50.0;
const MAX_SAMPLES: usize = 4_000_000;

/// A finite set of anchor parameters whose geodesic balls of radius
/// `resolution` cover the manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct CoveringSet {
    pub anchors: Vec<f64>,
    /// Arc-length position of each anchor, measured from the domain start.
    pub anchor_arcs: Vec<f64>,
    pub resolution: f64,
    /// Grid size the cover was built on.
    pub samples: usize,
}

impl CoveringSet {
    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }
}

/// Greedy geodesic covering of a one-dimensional manifold.
///
/// Walks the manifold in arc length: the first uncovered grid sample is
/// covered by the farthest sample still within reach of it, which becomes an
/// anchor, and everything that anchor reaches is marked covered. The reach is
/// `T` minus half the largest grid gap, so the cover holds for every point of
/// the curve and not only for the grid. On an interval this sweep is optimal
/// up to grid snapping, which makes `|anchors|` a close upper estimate of the
/// covering number `G(T)`.
pub fn greedy_cover(m: &ManifoldModel, resolution: f64) -> Result<CoveringSet> {
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(Error::Domain(format!(
            "covering resolution must be positive, got {resolution}"
        )));
    }
    let coarse = ArcTable::new(m, 1000);
    let wanted = (GRID_FRACTION * coarse.total / resolution).ceil();
    if wanted > MAX_SAMPLES as f64 {
        return Err(Error::Sampling(format!(
            "resolution {resolution} needs {wanted} grid samples (limit {MAX_SAMPLES})"
        )));
    }
    let samples = (wanted as usize).max(1000);
    let table = ArcTable::new(m, samples);
    let reach = resolution - 0.5 * table.max_gap();
    let s = &table.arc;
    let n = s.len();

    let mut anchor_idx: Vec<usize> = Vec::new();
    let mut i = 0;
    while i < n {
        if table.periodic {
            if let Some(&a0) = anchor_idx.first() {
                if table.separation(s[i], s[a0]) <= reach {
                    break;
                }
            }
        }
        // farthest sample that still reaches s[i]
        let limit = s[i] + reach;
        let a = i + s[i..].partition_point(|&v| v <= limit) - 1;
        anchor_idx.push(a);
        let end = s[a] + reach;
        i = a + s[a..].partition_point(|&v| v <= end);
    }

    Ok(CoveringSet {
        anchors: anchor_idx.iter().map(|&k| table.params[k]).collect(),
        anchor_arcs: anchor_idx.iter().map(|&k| s[k]).collect(),
        resolution,
        samples,
    })
}

/// Largest geodesic distance from a point of a `samples`-point grid to its
/// nearest anchor.
pub fn covering_radius(m: &ManifoldModel, cover: &CoveringSet, samples: usize) -> f64 {
    let table = ArcTable::new(m, samples);
    let arcs = &cover.anchor_arcs;
    if arcs.is_empty() {
        return f64::INFINITY;
    }
    table
        .arc
        .iter()
        .map(|&p| {
            let k = arcs.partition_point(|&a| a < p);
            let mut best = f64::INFINITY;
            for idx in [k.wrapping_sub(1), k, 0, arcs.len() - 1] {
                if let Some(&a) = arcs.get(idx) {
                    best = best.min(table.separation(p, a));
                }
            }
            best
        })
        .fold(0.0, f64::max)
}
