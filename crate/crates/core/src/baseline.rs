//! Classic L2-norm 2DLDA solved as a generalized eigenproblem.
//!
//! Serves two roles: an independently-solved cross-check for the iterative
//! solver at `p = 2, sigma = 0`, and an experiment competitor. Without a
//! ridge it inherits the classical failure mode: a rank-deficient
//! within-class scatter is reported as an error rather than papered over.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::dataset::{class_statistics, ClassStats, Dataset};
use crate::error::{Error, Result};
use crate::model::{ModelSource, ProjectionModel};

/// Between- and within-class scatter matrices.
#[derive(Debug, Clone)]
pub struct ScatterPair {
    sb: DMatrix<f64>,
    sw: DMatrix<f64>,
}

impl ScatterPair {
    /// Between-class scatter `(1/N) sum_i N_i V_i V_i^T`.
    pub fn sb(&self) -> &DMatrix<f64> {
        &self.sb
    }

    /// Within-class scatter `(1/N) sum_ij Z_ij Z_ij^T`.
    pub fn sw(&self) -> &DMatrix<f64> {
        &self.sw
    }
}

/// Compute both scatter matrices from class statistics.
pub fn scatter_matrices(stats: &ClassStats) -> ScatterPair {
    let d1 = stats.d1();
    let n = stats.total() as f64;
    let mut sb = DMatrix::zeros(d1, d1);
    for (offset, &count) in stats.offsets().iter().zip(stats.class_counts()) {
        sb += offset * offset.transpose() * count as f64;
    }
    sb /= n;
    let mut sw = DMatrix::zeros(d1, d1);
    for class in stats.deviations() {
        for dev in class {
            sw += dev * dev.transpose();
        }
    }
    sw /= n;
    ScatterPair { sb, sw }
}

/// Fit 2DLDA: the top `r1` generalized eigenvectors of
/// `Sb w = lambda (Sw + ridge I) w`, columns unit-normalized, eigenvalues
/// sorted descending with ties broken by index.
///
/// Fails with [`Error::SingularWithinScatter`] when `Sw + ridge I` is
/// (numerically) singular, which with `ridge = 0` is exactly the classical
/// small-sample singularity.
pub fn fit_2dlda(dataset: &Dataset, r1: usize, ridge: f64) -> Result<ProjectionModel> {
    let stats = class_statistics(dataset);
    fit_2dlda_from_stats(&stats, r1, ridge)
}

/// As [`fit_2dlda`], starting from precomputed statistics.
pub fn fit_2dlda_from_stats(stats: &ClassStats, r1: usize, ridge: f64) -> Result<ProjectionModel> {
    let d1 = stats.d1();
    if r1 == 0 || r1 > d1 {
        return Err(Error::InvalidParameter(format!(
            "r1 = {r1} outside 1..={d1}"
        )));
    }
    if ridge < 0.0 || !ridge.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "ridge = {ridge} must be nonnegative"
        )));
    }
    let pair = scatter_matrices(stats);
    let regularized = pair.sw() + DMatrix::identity(d1, d1) * ridge;

    // Symmetric-definite reduction: factor M = Q L Q^T, require M positive
    // definite, then eigensolve M^{-1/2} Sb M^{-1/2}.
    let m_eig = SymmetricEigen::new(regularized.clone());
    let max_eig = m_eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
    let min_eig = m_eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min_eig > 0.0) || min_eig <= max_eig * 1e-12 {
        return Err(Error::SingularWithinScatter);
    }
    let inv_sqrt = &m_eig.eigenvectors
        * DMatrix::from_diagonal(&m_eig.eigenvalues.map(|v| 1.0 / v.sqrt()))
        * m_eig.eigenvectors.transpose();
    let transformed = &inv_sqrt * pair.sb() * &inv_sqrt;
    // Kill rounding asymmetry before the symmetric eigensolve.
    let symmetrized = (&transformed + transformed.transpose()) * 0.5;
    let c_eig = SymmetricEigen::new(symmetrized);

    let mut order: Vec<usize> = (0..d1).collect();
    order.sort_by(|&a, &b| {
        c_eig.eigenvalues[b]
            .partial_cmp(&c_eig.eigenvalues[a])
            .expect("eigenvalues are finite")
            .then(a.cmp(&b))
    });

    let mut w = DMatrix::zeros(d1, r1);
    let mut eigenvalues = Vec::with_capacity(r1);
    for (slot, &idx) in order.iter().take(r1).enumerate() {
        let direction = (&inv_sqrt * c_eig.eigenvectors.column(idx)).normalize();
        w.set_column(slot, &direction);
        eigenvalues.push(c_eig.eigenvalues[idx].max(0.0));
    }

    Ok(ProjectionModel::new(
        w,
        ModelSource::Eigen2dlda { ridge, eigenvalues },
        Vec::new(),
    ))
}
