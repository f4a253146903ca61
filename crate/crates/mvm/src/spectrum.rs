//! Distance-matrix diagnostics: eigen spectra of pairwise distance matrices
//! and a 2-d principal-component projection for visual inspection.

use crate::error::{Error, Result};
use crate::space::{Metric, SampleSet};
use nalgebra::DMatrix;

/// Symmetric pairwise distance matrix with zero diagonal, optionally scaled
/// so the largest off-diagonal entry is one.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    entries: Vec<Vec<f64>>,
    normalized: bool,
}

impl DistanceMatrix {
    /// Validates symmetry, zero diagonal, and nonnegativity.
    pub fn from_entries(entries: Vec<Vec<f64>>, normalized: bool) -> Result<Self> {
        let k = entries.len();
        if k < 2 {
            return Err(Error::invalid("distance matrix", "needs at least 2 points"));
        }
        for (i, row) in entries.iter().enumerate() {
            if row.len() != k {
                return Err(Error::DimensionMismatch(row.len(), k));
            }
            if entries[i][i] != 0.0 {
                return Err(Error::invalid("distance matrix", "nonzero diagonal"));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::invalid("distance matrix", "negative or non-finite entry"));
                }
                if entries[j][i] != v {
                    return Err(Error::invalid("distance matrix", "not symmetric"));
                }
            }
        }
        Ok(Self { entries, normalized })
    }

    pub fn size(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &[Vec<f64>] {
        &self.entries
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// The `count` algebraically largest eigenvalues, descending. Symmetric
    /// input guarantees a real spectrum.
    pub fn top_eigenvalues(&self, count: usize) -> Result<Vec<f64>> {
        if count > self.size() {
            return Err(Error::invalid(
                "eigenvalue count",
                format!("{count} exceeds matrix size {}", self.size()),
            ));
        }
        let k = self.size();
        let m = DMatrix::from_fn(k, k, |i, j| self.entries[i][j]);
        let mut eigs: Vec<f64> = m.symmetric_eigen().eigenvalues.iter().copied().collect();
        eigs.sort_by(|a, b| b.partial_cmp(a).expect("real eigenvalues"));
        eigs.truncate(count);
        Ok(eigs)
    }
}

/// Pairwise distance matrix of a sample set. With `normalize`, entries are
/// divided by the largest off-diagonal distance (skipped when all distances
/// are zero, leaving the zero matrix).
pub fn distance_matrix(s: &SampleSet, metric: &Metric, normalize: bool) -> Result<DistanceMatrix> {
    let k = s.len();
    if k < 2 {
        return Err(Error::invalid("distance matrix", "needs at least 2 points"));
    }
    let mut entries = vec![vec![0.0; k]; k];
    let mut max = 0.0_f64;
    for i in 0..k {
        for j in (i + 1)..k {
            let d = metric.distance(s.point(i), s.point(j))?;
            entries[i][j] = d;
            entries[j][i] = d;
            max = max.max(d);
        }
    }
    let mut normalized = false;
    if normalize && max > 0.0 {
        for row in &mut entries {
            for v in row.iter_mut() {
                *v /= max;
            }
        }
        normalized = true;
    }
    Ok(DistanceMatrix { entries, normalized })
}

/// Projects centered data onto its top-2 principal directions. With fewer
/// than two meaningful directions the missing coordinates are zero.
pub fn pca_project_2d(points: &[Vec<f64>]) -> Result<Vec<[f64; 2]>> {
    if points.len() < 2 {
        return Err(Error::invalid("pca", "needs at least 2 vectors"));
    }
    let dim = points[0].len();
    if dim == 0 || points.iter().any(|p| p.len() != dim) {
        return Err(Error::invalid("pca", "ragged or zero-dimensional input"));
    }
    let k = points.len() as f64;
    let mut mean = vec![0.0; dim];
    for p in points {
        for (m, v) in mean.iter_mut().zip(p) {
            *m += v / k;
        }
    }
    // Covariance of the centered data.
    let mut cov: DMatrix<f64> = DMatrix::zeros(dim, dim);
    for p in points {
        for i in 0..dim {
            let ci = p[i] - mean[i];
            for j in 0..dim {
                cov[(i, j)] += ci * (p[j] - mean[j]) / k;
            }
        }
    }
    let eig = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("real eigenvalues")
    });
    let axes: Vec<Vec<f64>> = order
        .iter()
        .take(2)
        .map(|&i| eig.eigenvectors.column(i).iter().copied().collect())
        .collect();

    Ok(points
        .iter()
        .map(|p| {
            let mut out = [0.0; 2];
            for (slot, axis) in out.iter_mut().zip(&axes) {
                *slot = p
                    .iter()
                    .zip(axis)
                    .zip(&mean)
                    .map(|((v, a), m)| (v - m) * a)
                    .sum();
            }
            out
        })
        .collect())
}
