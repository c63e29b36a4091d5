//! Embedding files, CLIP score and FID.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};

use super::MetricError;

const MAGIC: &[u8; 4] = b"EMB1";
/// Asymmetry tolerated by [`matrix_sqrt_psd`], relative to `max(1, max|c_ij|)`.
pub const SYMMETRY_TOL: f64 = 1e-8;
/// Most negative eigenvalue tolerated before clamping, relative to
/// `max(1, largest eigenvalue)`.
pub const PSD_TOL: f64 = 1e-8;
/// FID values in `[-FID_CLAMP, 0)` are reported as 0.
pub const FID_CLAMP: f64 = 1e-6;

/// `count × dim` row-major feature matrix from an external encoder.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingSet {
    count: usize,
    dim: usize,
    data: Vec<f32>,
}

impl EmbeddingSet {
    pub fn new(count: usize, dim: usize, data: Vec<f32>) -> Result<Self, MetricError> {
        if data.len() != count * dim {
            return Err(MetricError::DimensionMismatch(format!(
                "{} values cannot form a {count}×{dim} matrix",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(MetricError::NonFinite("embedding values"));
        }
        Ok(Self { count, dim, data })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self, MetricError> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(MetricError::DimensionMismatch("ragged rows".into()));
        }
        Self::new(rows.len(), dim, rows.concat())
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    /// Reads the `EMB1` binary format: magic, u32 LE count, u32 LE dim, then
    /// `count × dim` f32 LE values row-major.
    pub fn read<R: Read>(mut input: R) -> Result<Self, MetricError> {
        let mut header = [0u8; 12];
        input
            .read_exact(&mut header)
            .map_err(|_| MetricError::MalformedEmbedding("header truncated".into()))?;
        if &header[0..4] != MAGIC {
            return Err(MetricError::MalformedEmbedding("bad magic bytes".into()));
        }
        let count = u32::from_le_bytes(header[4..8].try_into().expect("4 bytes")) as usize;
        let dim = u32::from_le_bytes(header[8..12].try_into().expect("4 bytes")) as usize;
        let len = count
            .checked_mul(dim)
            .and_then(|n| n.checked_mul(4))
            .ok_or_else(|| MetricError::MalformedEmbedding("size overflow".into()))?;
        let mut bytes = Vec::new();
        input.read_to_end(&mut bytes)?;
        if bytes.len() != len {
            return Err(MetricError::MalformedEmbedding(format!(
                "expected {len} payload bytes for {count}×{dim}, found {}",
                bytes.len()
            )));
        }
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
            .collect();
        Self::new(count, dim, data)
    }

    pub fn write<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&(self.count as u32).to_le_bytes())?;
        out.write_all(&(self.dim as u32).to_le_bytes())?;
        for v in &self.data {
            out.write_all(&v.to_le_bytes())?;
        }
        out.flush()
    }

    fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_iterator(
            self.count,
            self.dim,
            self.data.iter().map(|&v| f64::from(v)),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClipScores {
    pub per_case: Vec<f64>,
    pub mean: f64,
}

/// `100 × cosine` between paired rows. Negative values are kept.
pub fn clip_score(images: &EmbeddingSet, texts: &EmbeddingSet) -> Result<ClipScores, MetricError> {
    if images.count != texts.count || images.dim != texts.dim {
        return Err(MetricError::DimensionMismatch(format!(
            "image embeddings are {}×{}, text embeddings are {}×{}",
            images.count, images.dim, texts.count, texts.dim
        )));
    }
    let norm = |r: &[f32]| r.iter().map(|&v| f64::from(v).powi(2)).sum::<f64>().sqrt();
    let mut per_case = Vec::with_capacity(images.count);
    for i in 0..images.count {
        let (a, b) = (images.row(i), texts.row(i));
        let (na, nb) = (norm(a), norm(b));
        if na == 0.0 {
            return Err(MetricError::ZeroVector {
                side: "image",
                row: i,
            });
        }
        if nb == 0.0 {
            return Err(MetricError::ZeroVector {
                side: "text",
                row: i,
            });
        }
        let dot: f64 = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| f64::from(x) * f64::from(y))
            .sum();
        per_case.push(100.0 * dot / (na * nb));
    }
    let mean = if per_case.is_empty() {
        0.0
    } else {
        per_case.iter().sum::<f64>() / per_case.len() as f64
    };
    Ok(ClipScores { per_case, mean })
}

fn check_symmetric(c: &DMatrix<f64>) -> Result<(), MetricError> {
    if !c.is_square() {
        return Err(MetricError::DimensionMismatch(format!(
            "{}×{} matrix is not square",
            c.nrows(),
            c.ncols()
        )));
    }
    if c.iter().any(|v| !v.is_finite()) {
        return Err(MetricError::NonFinite("matrix"));
    }
    let scale = c.amax().max(1.0);
    let n = c.nrows();
    let mut worst = 0.0f64;
    for j in 0..n {
        for i in j + 1..n {
            worst = worst.max((c[(i, j)] - c[(j, i)]).abs());
        }
    }
    if worst > SYMMETRY_TOL * scale {
        return Err(MetricError::NotSymmetric(worst));
    }
    Ok(())
}

fn symmetrized(c: &DMatrix<f64>) -> DMatrix<f64> {
    (c + c.transpose()) * 0.5
}

/// Principal square root of a symmetric positive semidefinite matrix via
/// symmetric eigendecomposition; small negative eigenvalues are clamped to 0.
pub fn matrix_sqrt_psd(c: &DMatrix<f64>) -> Result<DMatrix<f64>, MetricError> {
    check_symmetric(c)?;
    let eig = symmetrized(c).symmetric_eigen();
    let top = eig.eigenvalues.max().max(1.0);
    let low = eig.eigenvalues.min();
    if low < -PSD_TOL * top {
        return Err(MetricError::IndefiniteBeyondTolerance(low));
    }
    let roots = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for (j, r) in roots.iter().enumerate() {
        scaled.column_mut(j).scale_mut(*r);
    }
    Ok(symmetrized(&(scaled * v.transpose())))
}

fn mean_and_covariance(x: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
    let n = x.nrows();
    let mu = x.row_mean().transpose();
    let mut centered = x.clone();
    for (j, mut col) in centered.column_iter_mut().enumerate() {
        col.add_scalar_mut(-mu[j]);
    }
    // an explicit transpose keeps the product on the blocked GEMM path
    let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
    (mu, cov)
}

/// Fréchet distance between Gaussians fitted to two feature sets, using
/// unbiased covariances and the symmetric form `C1^½ C2 C1^½`.
pub fn fid(real: &EmbeddingSet, generated: &EmbeddingSet) -> Result<f64, MetricError> {
    for s in [real, generated] {
        if s.count < 2 {
            return Err(MetricError::TooFewSamples(s.count));
        }
    }
    if real.dim != generated.dim {
        return Err(MetricError::DimensionMismatch(format!(
            "feature dimensions {} and {} differ",
            real.dim, generated.dim
        )));
    }
    let (mu1, c1) = mean_and_covariance(&real.to_matrix());
    let (mu2, c2) = mean_and_covariance(&generated.to_matrix());
    let diff = (&mu1 - &mu2).norm_squared();
    let s1 = matrix_sqrt_psd(&c1)?;
    let sandwich = symmetrized(&(&s1 * &c2 * &s1));
    // only the trace of the root is needed, so eigenvalues suffice
    let tr_root: f64 = sandwich
        .symmetric_eigenvalues()
        .iter()
        .map(|l| l.max(0.0).sqrt())
        .sum();
    let value = diff + c1.trace() + c2.trace() - 2.0 * tr_root;
    if (-FID_CLAMP..0.0).contains(&value) {
        Ok(0.0)
    } else {
        Ok(value)
    }
}
