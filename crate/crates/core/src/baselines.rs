//! Weighted k-nearest-neighbors over PCA scores: the strongest of the
//! classical classifiers the soft sensor is compared against.

use thiserror::Error;

use crate::classifier::BehaviorClass;
use crate::dataset::FeatureMatrix;
use crate::pca::{self, PcaError, Standardizer};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("k must be at least 1")]
    BadK,
    #[error("need at least k = {k} training rows, got {rows}")]
    TooFewRows { rows: usize, k: usize },
    #[error("dimension mismatch: model expects {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("query contains non-finite values")]
    NonFiniteInput,
    #[error(transparent)]
    Pca(#[from] PcaError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct KnnConfig {
    pub k: usize,
    /// Cumulative explained-variance threshold selecting how many components
    /// the score space keeps.
    pub threshold: f64,
    pub standardize: bool,
}

impl Default for KnnConfig {
    fn default() -> Self {
        Self {
            k: 10,
            threshold: 0.95,
            standardize: true,
        }
    }
}

/// Fitted baseline: training rows projected onto the retained components.
#[derive(Debug, Clone)]
pub struct KnnModel {
    standardizer: Standardizer,
    /// One retained axis per row, each of input dimension.
    axes: Vec<Vec<f64>>,
    /// Row-major scores, n_rows x axes.len().
    points: Vec<f64>,
    labels: Vec<BehaviorClass>,
    k: usize,
}

pub fn knn_fit(features: &FeatureMatrix, cfg: &KnnConfig) -> Result<KnnModel, BaselineError> {
    if cfg.k == 0 {
        return Err(BaselineError::BadK);
    }
    if features.n_rows() < cfg.k {
        return Err(BaselineError::TooFewRows {
            rows: features.n_rows(),
            k: cfg.k,
        });
    }
    let d = features.n_cols();
    let standardizer = if cfg.standardize {
        Standardizer::fit(features.data(), d)?
    } else {
        Standardizer::fit_center_only(features.data(), d)?
    };
    let z = standardizer.apply_matrix(features.data(), d)?;
    let fit = pca::fit_pca(&z, d, cfg.threshold)?;
    let axes: Vec<Vec<f64>> = fit.components[..fit.selected]
        .iter()
        .map(|c| c.axis.clone())
        .collect();
    let mut points = Vec::with_capacity(features.n_rows() * axes.len());
    for row in z.chunks_exact(d) {
        for axis in &axes {
            points.push(row.iter().zip(axis).map(|(a, b)| a * b).sum::<f64>());
        }
    }
    Ok(KnnModel {
        standardizer,
        axes,
        points,
        labels: features.labels().to_vec(),
        k: cfg.k,
    })
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_components(&self) -> usize {
        self.axes.len()
    }

    pub fn n_points(&self) -> usize {
        self.labels.len()
    }

    fn score(&self, x: &[f64]) -> Result<Vec<f64>, BaselineError> {
        if x.len() != self.standardizer.dim() {
            return Err(BaselineError::DimensionMismatch {
                expected: self.standardizer.dim(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(BaselineError::NonFiniteInput);
        }
        let z = self.standardizer.apply(x)?;
        Ok(self
            .axes
            .iter()
            .map(|axis| z.iter().zip(axis).map(|(a, b)| a * b).sum())
            .collect())
    }

    pub fn predict(&self, x: &[f64]) -> Result<BehaviorClass, BaselineError> {
        self.predict_leaving_out(x, None)
    }

    /// `predict` with one stored point masked: the leave-one-out helper.
    /// Votes are weighted 1/d²; a zero-distance neighbor wins outright with
    /// the earliest index taking precedence, and equal vote totals fall back
    /// to class order.
    pub fn predict_leaving_out(
        &self,
        x: &[f64],
        exclude: Option<usize>,
    ) -> Result<BehaviorClass, BaselineError> {
        let score = self.score(x)?;
        let m = self.n_components();
        let mut dist: Vec<(f64, usize)> = Vec::with_capacity(self.n_points());
        for i in 0..self.n_points() {
            if exclude == Some(i) {
                continue;
            }
            let p = &self.points[i * m..(i + 1) * m];
            let d2 = p
                .iter()
                .zip(&score)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>();
            dist.push((d2, i));
        }
        dist.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite distances"));
        let neighbors = &dist[..self.k.min(dist.len())];
        let &(nearest_d2, nearest_idx) = neighbors.first().expect("k >= 1");
        if nearest_d2 == 0.0 {
            return Ok(self.labels[nearest_idx]);
        }
        let mut votes = [0.0f64; 3];
        for &(d2, idx) in neighbors {
            votes[self.labels[idx].index()] += 1.0 / d2;
        }
        let mut best = BehaviorClass::Drowsy;
        for class in [BehaviorClass::Normal, BehaviorClass::Aggressive] {
            if votes[class.index()] > votes[best.index()] {
                best = class;
            }
        }
        Ok(best)
    }

    /// Fraction of stored points whose leave-one-out prediction matches
    /// their label. Needs at least k + 1 points.
    pub fn loo_accuracy(&self, features: &FeatureMatrix) -> Result<f64, BaselineError> {
        if self.n_points() < self.k + 1 {
            return Err(BaselineError::TooFewRows {
                rows: self.n_points(),
                k: self.k + 1,
            });
        }
        let mut hits = 0usize;
        for i in 0..features.n_rows() {
            if self.predict_leaving_out(features.row(i), Some(i))? == features.label(i) {
                hits += 1;
            }
        }
        Ok(hits as f64 / features.n_rows() as f64)
    }
}
