//! Random orthoprojectors and compressive measurement.
//!
//! An orthoprojector is stored as its unscaled row-orthonormal matrix `Ξ`
//! (M x N) together with the scale `√(N/M)`, so that the applied operator is
//! `Φ = √(N/M)·Ξ` and `E‖Φx‖² = ‖x‖²` over the random draw.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{gaussian_vector, rng_from_seed};

/// Row orthonormality tolerance, `|⟨ξᵢ,ξⱼ⟩ − δᵢⱼ|`.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

const BINARY_MAGIC: &[u8; 8] = b"MCSPROJ1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ProjectorFile", into = "ProjectorFile")]
pub struct Orthoprojector {
    rows: DMatrix<f64>,
    scale: f64,
}

/// JSON layout: rows are listed in order, each row as its N unscaled entries.
#[derive(Serialize, Deserialize)]
struct ProjectorFile {
    meas_dim: usize,
    ambient_dim: usize,
    scale: f64,
    rows: Vec<Vec<f64>>,
}

impl From<Orthoprojector> for ProjectorFile {
    fn from(p: Orthoprojector) -> Self {
        ProjectorFile {
            meas_dim: p.meas_dim(),
            ambient_dim: p.ambient_dim(),
            scale: p.scale,
            rows: p
                .rows
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
        }
    }
}

impl TryFrom<ProjectorFile> for Orthoprojector {
    type Error = Error;

    fn try_from(f: ProjectorFile) -> Result<Self> {
        if f.rows.len() != f.meas_dim || f.rows.iter().any(|r| r.len() != f.ambient_dim) {
            return Err(Error::Dimension(format!(
                "projector file declares {}x{} but rows do not match",
                f.meas_dim, f.ambient_dim
            )));
        }
        let flat: Vec<f64> = f.rows.into_iter().flatten().collect();
        let rows = DMatrix::from_row_slice(f.meas_dim, f.ambient_dim, &flat);
        Orthoprojector::with_scale(rows, f.scale)
    }
}

fn check_dims(meas_dim: usize, ambient_dim: usize) -> Result<()> {
    if meas_dim == 0 || ambient_dim == 0 {
        return Err(Error::Dimension(format!(
            "dimensions must be positive (M={meas_dim}, N={ambient_dim})"
        )));
    }
    if meas_dim > ambient_dim {
        return Err(Error::Dimension(format!(
            "meas_dim {meas_dim} exceeds ambient_dim {ambient_dim}"
        )));
    }
    Ok(())
}

/// Largest deviation of `rows·rowsᵀ` from the identity.
pub fn gram_deviation(rows: &DMatrix<f64>) -> f64 {
    let gram = rows * rows.transpose();
    let mut worst = 0.0f64;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

/// Draws a random M x N orthoprojector.
///
/// An M x N matrix of independent standard normals (filled row by row from
/// the seeded stream) is orthonormalized by Householder QR of its transpose.
/// Column signs of `Q` are fixed so that `R` has a positive diagonal, which
/// makes the row frame Haar distributed and the row space uniformly random.
pub fn make_orthoprojector(
    meas_dim: usize,
    ambient_dim: usize,
    seed: u64,
) -> Result<Orthoprojector> {
    check_dims(meas_dim, ambient_dim)?;
    let mut rng = rng_from_seed(seed);
    let g = gaussian_vector(meas_dim * ambient_dim, &mut rng);
    // column j of `gt` is row j of the Gaussian matrix
    let gt = DMatrix::from_column_slice(ambient_dim, meas_dim, g.as_slice());
    let qr = gt.qr();
    let r_diag = qr.r().diagonal();
    let mut q = qr.q();
    for (j, d) in r_diag.iter().enumerate() {
        if *d < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Orthoprojector::new(q.transpose())
}

/// Orthoprojector whose rows complete `p`'s rows to an orthonormal basis of
/// R^N, scaled by the same `√(N/M)` as `p`, so that
/// `‖Φx‖² + ‖Φ′x‖² = (N/M)‖x‖²`.
pub fn complement_projector(p: &Orthoprojector) -> Result<Orthoprojector> {
    let (m, n) = (p.meas_dim(), p.ambient_dim());
    if m == n {
        return Err(Error::EmptyComplement(n));
    }
    let mut a = DMatrix::zeros(n, m + n);
    a.columns_mut(0, m).copy_from(&p.rows.transpose());
    a.columns_mut(m, n).fill_with_identity();
    let q = a.qr().q();
    let rows = q.columns(m, n - m).transpose();
    Orthoprojector::with_scale(rows, p.scale)
}

impl Orthoprojector {
    /// Wraps explicit unscaled rows; the scale is `√(N/M)`.
    pub fn new(rows: DMatrix<f64>) -> Result<Self> {
        let scale = (rows.ncols() as f64 / rows.nrows() as f64).sqrt();
        Self::with_scale(rows, scale)
    }

    pub fn with_scale(rows: DMatrix<f64>, scale: f64) -> Result<Self> {
        check_dims(rows.nrows(), rows.ncols())?;
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Domain(format!(
                "scale must be positive, got {scale}"
            )));
        }
        let dev = gram_deviation(&rows);
        if dev > ORTHONORMAL_TOL {
            return Err(Error::Domain(format!(
                "rows are not orthonormal (Gram deviation {dev:e})"
            )));
        }
        Ok(Orthoprojector { rows, scale })
    }

    pub fn meas_dim(&self) -> usize {
        self.rows.nrows()
    }

    pub fn ambient_dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// The row-orthonormal matrix `Ξ`.
    pub fn unscaled(&self) -> &DMatrix<f64> {
        &self.rows
    }

    /// The applied operator `Φ = scale·Ξ`.
    pub fn matrix(&self) -> DMatrix<f64> {
        &self.rows * self.scale
    }

    pub fn apply(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        if x.len() != self.ambient_dim() {
            return Err(Error::Dimension(format!(
                "vector of length {} applied to {}x{} projector",
                x.len(),
                self.meas_dim(),
                self.ambient_dim()
            )));
        }
        Ok((&self.rows * x) * self.scale)
    }

    /// Applies `Φ` to every column of an N x k matrix.
    pub fn apply_columns(&self, xs: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if xs.nrows() != self.ambient_dim() {
            return Err(Error::Dimension(format!(
                "matrix with {} rows applied to {}x{} projector",
                xs.nrows(),
                self.meas_dim(),
                self.ambient_dim()
            )));
        }
        Ok((&self.rows * xs) * self.scale)
    }

    /// Binary form: 8-byte magic, `u64` M, `u64` N, `f64` scale, then the
    /// M·N unscaled entries in row-major order. All little-endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(BINARY_MAGIC)?;
        w.write_all(&(self.meas_dim() as u64).to_le_bytes())?;
        w.write_all(&(self.ambient_dim() as u64).to_le_bytes())?;
        w.write_all(&self.scale.to_le_bytes())?;
        for row in self.rows.row_iter() {
            for v in row.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let io = |e: std::io::Error| Error::Parse(format!("projector binary: {e}"));
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic).map_err(io)?;
        if &magic != BINARY_MAGIC {
            return Err(Error::Parse("projector binary: bad magic".into()));
        }
        let mut word = [0u8; 8];
        r.read_exact(&mut word).map_err(io)?;
        let m = u64::from_le_bytes(word) as usize;
        r.read_exact(&mut word).map_err(io)?;
        let n = u64::from_le_bytes(word) as usize;
        r.read_exact(&mut word).map_err(io)?;
        let scale = f64::from_le_bytes(word);
        check_dims(m, n)?;
        let mut data = Vec::with_capacity(m * n);
        for _ in 0..m * n {
            r.read_exact(&mut word).map_err(io)?;
            data.push(f64::from_le_bytes(word));
        }
        Self::with_scale(DMatrix::from_row_slice(m, n, &data), scale)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub y: DVector<f64>,
    pub noise_norm: f64,
}

/// `y = Φx + n`.
pub fn measure(p: &Orthoprojector, x: &DVector<f64>, noise: &DVector<f64>) -> Result<Measurement> {
    if noise.len() != p.meas_dim() {
        return Err(Error::Dimension(format!(
            "noise has length {}, projector has {} rows",
            noise.len(),
            p.meas_dim()
        )));
    }
    let y = p.apply(x)? + noise;
    Ok(Measurement {
        y,
        noise_norm: noise.norm(),
    })
}

/// Extreme pairwise distance ratios of a projector over a point set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Distortion {
    /// `1 − min ‖Φx₁−Φx₂‖/‖x₁−x₂‖`
    pub eps_lo: f64,
    /// `max ‖Φx₁−Φx₂‖/‖x₁−x₂‖ − 1`
    pub eps_hi: f64,
    /// Number of non-coincident pairs that were compared.
    pub pairs: usize,
}

impl Distortion {
    pub fn max(&self) -> f64 {
        self.eps_lo.max(self.eps_hi)
    }
}

pub fn pairwise_distortion(p: &Orthoprojector, points: &[DVector<f64>]) -> Result<Distortion> {
    if points.iter().any(|x| x.len() != p.ambient_dim()) {
        return Err(Error::Dimension(format!(
            "all points must have length {}",
            p.ambient_dim()
        )));
    }
    let cols: Vec<_> = points.iter().map(|x| x.column(0)).collect();
    if cols.is_empty() {
        return Err(Error::DegenerateInput("no points given".into()));
    }
    let xs = DMatrix::from_columns(&cols);
    pairwise_distortion_columns(p, &xs)
}

/// Same as [`pairwise_distortion`] with the points as the columns of an
/// N x n matrix.
pub fn pairwise_distortion_columns(p: &Orthoprojector, xs: &DMatrix<f64>) -> Result<Distortion> {
    let ys = p.apply_columns(xs)?;
    let n = xs.ncols();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut pairs = 0;
    for i in 0..n {
        let xi = xs.column(i);
        let yi = ys.column(i);
        let scale_i = xi.norm();
        for j in (i + 1)..n {
            let dx = (xs.column(j) - xi).norm();
            // coincident up to rounding
            if dx <= 1e-14 * (scale_i + xs.column(j).norm()) {
                continue;
            }
            let ratio = (ys.column(j) - yi).norm() / dx;
            lo = lo.min(ratio);
            hi = hi.max(ratio);
            pairs += 1;
        }
    }
    if pairs == 0 {
        return Err(Error::DegenerateInput(
            "need at least two distinct points".into(),
        ));
    }
    Ok(Distortion {
        eps_lo: 1.0 - lo,
        eps_hi: hi - 1.0,
        pairs,
    })
}
