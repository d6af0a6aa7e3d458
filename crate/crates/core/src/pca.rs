//! Column standardization, principal components via a cyclic Jacobi
//! eigensolver on the sample covariance, and projections onto stored axes.
//!
//! Matrices are flat row-major `&[f64]` slices with an explicit column count.

use serde::{Deserialize, Serialize};
use thiserror::Error;

const JACOBI_MAX_SWEEPS: usize = 100;
const JACOBI_TOL: f64 = 1e-12;

#[derive(Debug, Error, PartialEq)]
pub enum PcaError {
    #[error("need at least 2 rows, got {0}")]
    TooFewRows(usize),
    #[error("data length {len} is not a multiple of {cols} columns")]
    RaggedData { len: usize, cols: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("column {0} is constant; cannot standardize")]
    ConstantColumn(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("threshold must be in (0, 1], got {0}")]
    BadThreshold(f64),
    #[error("data has zero total variance")]
    ZeroVariance,
}

fn check_matrix(data: &[f64], cols: usize) -> Result<usize, PcaError> {
    if cols == 0 || !data.len().is_multiple_of(cols) {
        return Err(PcaError::RaggedData {
            len: data.len(),
            cols,
        });
    }
    let rows = data.len() / cols;
    if rows < 2 {
        return Err(PcaError::TooFewRows(rows));
    }
    for (i, v) in data.iter().enumerate() {
        if !v.is_finite() {
            return Err(PcaError::NonFinite {
                row: i / cols,
                col: i % cols,
            });
        }
    }
    Ok(rows)
}

fn column_means(data: &[f64], cols: usize, rows: usize) -> Vec<f64> {
    let mut mean = vec![0.0; cols];
    for r in 0..rows {
        for c in 0..cols {
            mean[c] += data[r * cols + c];
        }
    }
    for m in &mut mean {
        *m /= rows as f64;
    }
    mean
}

/// Per-column affine transform z = (x - mean) / scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Fits mean and sample standard deviation (n-1 denominator) per column.
    pub fn fit(data: &[f64], cols: usize) -> Result<Self, PcaError> {
        let rows = check_matrix(data, cols)?;
        let mean = column_means(data, cols, rows);
        let mut scale = vec![0.0; cols];
        for r in 0..rows {
            for c in 0..cols {
                let d = data[r * cols + c] - mean[c];
                scale[c] += d * d;
            }
        }
        for (c, s) in scale.iter_mut().enumerate() {
            *s = (*s / (rows as f64 - 1.0)).sqrt();
            if s.is_nan() || *s <= 0.0 {
                return Err(PcaError::ConstantColumn(c));
            }
        }
        Ok(Self { mean, scale })
    }

    /// Centering-only variant: unit scales, so projections work on raw
    /// (merely mean-shifted) features.
    pub fn fit_center_only(data: &[f64], cols: usize) -> Result<Self, PcaError> {
        let rows = check_matrix(data, cols)?;
        Ok(Self {
            mean: column_means(data, cols, rows),
            scale: vec![1.0; cols],
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>, PcaError> {
        if x.len() != self.mean.len() {
            return Err(PcaError::DimensionMismatch {
                expected: self.mean.len(),
                got: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    pub fn invert(&self, z: &[f64]) -> Result<Vec<f64>, PcaError> {
        if z.len() != self.mean.len() {
            return Err(PcaError::DimensionMismatch {
                expected: self.mean.len(),
                got: z.len(),
            });
        }
        Ok(z.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(v, (m, s))| v * s + m)
            .collect())
    }

    /// Standardizes a whole row-major matrix.
    pub fn apply_matrix(&self, data: &[f64], cols: usize) -> Result<Vec<f64>, PcaError> {
        if cols != self.mean.len() || !data.len().is_multiple_of(cols) {
            return Err(PcaError::DimensionMismatch {
                expected: self.mean.len(),
                got: cols,
            });
        }
        let mut out = Vec::with_capacity(data.len());
        for row in data.chunks_exact(cols) {
            for (c, &v) in row.iter().enumerate() {
                out.push((v - self.mean[c]) / self.scale[c]);
            }
        }
        Ok(out)
    }
}

/// One principal axis with its eigenvalue and explained variance ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrincipalComponent {
    pub axis: Vec<f64>,
    pub eigenvalue: f64,
    pub evr: f64,
}

/// Full eigendecomposition of the sample covariance, components in descending
/// eigenvalue order, plus the smallest count reaching the variance threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaFit {
    pub components: Vec<PrincipalComponent>,
    pub selected: usize,
}

/// Smallest k whose cumulative explained variance ratio reaches `threshold`.
pub fn components_for_threshold(eigenvalues: &[f64], threshold: f64) -> Result<usize, PcaError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(PcaError::BadThreshold(threshold));
    }
    let total: f64 = eigenvalues.iter().map(|v| v.max(0.0)).sum();
    if total.is_nan() || total <= 0.0 {
        return Err(PcaError::ZeroVariance);
    }
    let mut cum = 0.0;
    for (i, v) in eigenvalues.iter().enumerate() {
        cum += v.max(0.0) / total;
        if cum >= threshold - 1e-12 {
            return Ok(i + 1);
        }
    }
    Ok(eigenvalues.len())
}

/// Fits principal components on already-standardized (or at least
/// commensurately scaled) data. Covariance uses the n-1 denominator; the
/// eigenproblem is solved with cyclic Jacobi rotations; each axis is oriented
/// so its largest-magnitude coordinate is positive.
pub fn fit_pca(data: &[f64], cols: usize, threshold: f64) -> Result<PcaFit, PcaError> {
    let rows = check_matrix(data, cols)?;
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(PcaError::BadThreshold(threshold));
    }
    let mean = column_means(data, cols, rows);
    let mut cov = vec![0.0; cols * cols];
    for r in 0..rows {
        for i in 0..cols {
            let di = data[r * cols + i] - mean[i];
            for j in i..cols {
                cov[i * cols + j] += di * (data[r * cols + j] - mean[j]);
            }
        }
    }
    let denom = rows as f64 - 1.0;
    for i in 0..cols {
        for j in i..cols {
            let v = cov[i * cols + j] / denom;
            cov[i * cols + j] = v;
            cov[j * cols + i] = v;
        }
    }

    let (mut vals, vecs) = jacobi_eigen(cov, cols);

    // order by eigenvalue, largest first; equal values keep original order
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).unwrap().then(a.cmp(&b)));
    for v in &mut vals {
        // covariance is positive semidefinite; tiny negatives are rounding
        *v = v.max(0.0);
    }
    let total: f64 = order.iter().map(|&i| vals[i]).sum();
    if total.is_nan() || total <= 0.0 {
        return Err(PcaError::ZeroVariance);
    }

    let mut components = Vec::with_capacity(cols);
    for &idx in &order {
        let mut axis: Vec<f64> = (0..cols).map(|i| vecs[i * cols + idx]).collect();
        orient_axis(&mut axis);
        components.push(PrincipalComponent {
            axis,
            eigenvalue: vals[idx],
            evr: vals[idx] / total,
        });
    }
    let eigs: Vec<f64> = components.iter().map(|c| c.eigenvalue).collect();
    let selected = components_for_threshold(&eigs, threshold)?;
    Ok(PcaFit {
        components,
        selected,
    })
}

/// Flips the axis so the coordinate with the largest magnitude is positive;
/// among equal magnitudes the lowest index decides.
fn orient_axis(axis: &mut [f64]) {
    let mut arg = 0;
    let mut best = f64::NEG_INFINITY;
    for (i, v) in axis.iter().enumerate() {
        if v.abs() > best {
            best = v.abs();
            arg = i;
        }
    }
    if axis[arg] < 0.0 {
        for v in axis.iter_mut() {
            *v = -*v;
        }
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
/// (eigenvalues, eigenvectors) with eigenvector j stored as column j.
fn jacobi_eigen(mut a: Vec<f64>, n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    if n < 2 {
        return ((0..n).map(|i| a[i * n + i]).collect(), v);
    }
    let frob = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = JACOBI_TOL * frob.max(1.0);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += 2.0 * a[p * n + q] * a[p * n + q];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..(n - 1) {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = 0.5 * (a[q * n + q] - a[p * n + p]) / apq;
                // smaller root of t^2 + 2*theta*t - 1 = 0, for stability
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                let app = a[p * n + p];
                let aqq = a[q * n + q];
                a[p * n + p] = c * c * app - 2.0 * s * c * apq + s * s * aqq;
                a[q * n + q] = s * s * app + 2.0 * s * c * apq + c * c * aqq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    if k != p && k != q {
                        let akp = a[k * n + p];
                        let akq = a[k * n + q];
                        a[k * n + p] = c * akp - s * akq;
                        a[p * n + k] = a[k * n + p];
                        a[k * n + q] = s * akp + c * akq;
                        a[q * n + k] = a[k * n + q];
                    }
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

/// Score of one raw feature row on a stored component: standardize, then dot
/// with the axis.
pub fn project(
    x: &[f64],
    component: &PrincipalComponent,
    standardizer: &Standardizer,
) -> Result<f64, PcaError> {
    if component.axis.len() != standardizer.dim() {
        return Err(PcaError::DimensionMismatch {
            expected: standardizer.dim(),
            got: component.axis.len(),
        });
    }
    let z = standardizer.apply(x)?;
    Ok(z.iter().zip(&component.axis).map(|(a, b)| a * b).sum())
}

/// Scores for a whole row-major matrix on one component.
pub fn project_matrix(
    data: &[f64],
    cols: usize,
    component: &PrincipalComponent,
    standardizer: &Standardizer,
) -> Result<Vec<f64>, PcaError> {
    data.chunks_exact(cols)
        .map(|row| project(row, component, standardizer))
        .collect()
}

/// The four projections the soft sensor relies on: first principal component
/// of each class plus the first component of the pooled data, sharing one
/// standardizer fitted on the pooled data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectionBank {
    pub standardizer: Standardizer,
    pub p1d: PrincipalComponent,
    pub p1n: PrincipalComponent,
    pub p1a: PrincipalComponent,
    pub p1t: PrincipalComponent,
}

impl ProjectionBank {
    pub fn dim(&self) -> usize {
        self.standardizer.dim()
    }

    pub fn validate(&self) -> Result<(), PcaError> {
        let d = self.dim();
        for c in [&self.p1d, &self.p1n, &self.p1a, &self.p1t] {
            if c.axis.len() != d {
                return Err(PcaError::DimensionMismatch {
                    expected: d,
                    got: c.axis.len(),
                });
            }
        }
        if self.standardizer.scale.iter().any(|s| s.is_nan() || *s <= 0.0) {
            return Err(PcaError::ConstantColumn(
                self.standardizer
                    .scale
                    .iter()
                    .position(|s| s.is_nan() || *s <= 0.0)
                    .unwrap(),
            ));
        }
        Ok(())
    }

    /// Scores of x on the three per-class axes, in (drowsy, normal,
    /// aggressive) order.
    pub fn project3(&self, x: &[f64]) -> Result<[f64; 3], PcaError> {
        Ok([
            project(x, &self.p1d, &self.standardizer)?,
            project(x, &self.p1n, &self.standardizer)?,
            project(x, &self.p1a, &self.standardizer)?,
        ])
    }

    /// Score of x on the pooled-data axis.
    pub fn project_total(&self, x: &[f64]) -> Result<f64, PcaError> {
        project(x, &self.p1t, &self.standardizer)
    }
}
