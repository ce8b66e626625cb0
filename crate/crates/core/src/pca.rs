//! Principal axes of an embedding cloud.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingSpace;
use crate::error::{Error, Result};

/// Rows per covariance block. Blocks are reduced in index order, so the
/// result does not depend on how many threads did the work.
const BLOCK_ROWS: usize = 2048;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// `num_axes` unit rows of length `dim`, strongest first.
    pub axes: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    /// Trace of the covariance matrix (sum of all `dim` eigenvalues).
    pub total_variance: f64,
}

impl PcaModel {
    pub fn num_axes(&self) -> usize {
        self.axes.len()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Number of leading axes whose variance is above round-off level,
    /// i.e. eigenvalue greater than `rel_tol` times the largest one.
    pub fn effective_rank(&self, rel_tol: f64) -> usize {
        let top = self.eigenvalues.first().copied().unwrap_or(0.0);
        if top <= 0.0 {
            return 0;
        }
        self.eigenvalues
            .iter()
            .take_while(|&&l| l > rel_tol * top)
            .count()
    }
}

pub fn centroid(space: &EmbeddingSpace) -> Vec<f64> {
    let d = space.dim();
    let mut sum = vec![0.0; d];
    for row in space.rows() {
        for (s, x) in sum.iter_mut().zip(row) {
            *s += x;
        }
    }
    let n = space.len() as f64;
    sum.iter_mut().for_each(|s| *s /= n);
    sum
}

/// Covariance matrix of the cloud with the `1/N` normalization.
pub fn covariance(space: &EmbeddingSpace, mean: &[f64]) -> DMatrix<f64> {
    let d = space.dim();
    let flat = space.as_flat();
    let partials: Vec<DMatrix<f64>> = flat
        .par_chunks(BLOCK_ROWS * d)
        .map(|block| {
            let rows = block.len() / d;
            let mut centered = DMatrix::<f64>::zeros(rows, d);
            for (r, row) in block.chunks_exact(d).enumerate() {
                for c in 0..d {
                    centered[(r, c)] = row[c] - mean[c];
                }
            }
            centered.tr_mul(&centered)
        })
        .collect();
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for p in &partials {
        cov += p;
    }
    cov /= space.len() as f64;
    // Symmetrize exactly; the block products already are, up to round-off.
    for i in 0..d {
        for j in (i + 1)..d {
            let v = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    cov
}

/// Fits the top `num_axes` principal axes of the cloud.
///
/// Axis signs are fixed so that each axis's largest-magnitude coordinate is
/// positive (first such coordinate on ties).
pub fn fit_pca(space: &EmbeddingSpace, num_axes: usize) -> Result<PcaModel> {
    let d = space.dim();
    if num_axes == 0 || num_axes > d {
        return Err(Error::invalid(format!(
            "num_axes must be in 1..={d}, got {num_axes}"
        )));
    }
    if space.len() < 2 {
        return Err(Error::invalid("PCA needs at least two points"));
    }

    let mean = centroid(space);
    let cov = covariance(space, &mean);
    let total_variance = cov.trace();

    let eig = SymmetricEigen::try_new(cov, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("symmetric eigensolver did not converge".into()))?;
    if eig.eigenvalues.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("eigensolver produced non-finite values".into()));
    }

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });

    let mut axes = Vec::with_capacity(num_axes);
    let mut eigenvalues = Vec::with_capacity(num_axes);
    for &k in order.iter().take(num_axes) {
        let mut axis: Vec<f64> = eig.eigenvectors.column(k).iter().copied().collect();
        let norm = axis.iter().map(|x| x * x).sum::<f64>().sqrt();
        axis.iter_mut().for_each(|x| *x /= norm);
        fix_sign(&mut axis);
        axes.push(axis);
        eigenvalues.push(eig.eigenvalues[k].max(0.0));
    }

    Ok(PcaModel {
        mean,
        axes,
        eigenvalues,
        total_variance,
    })
}

fn fix_sign(axis: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in axis.iter().enumerate() {
        if x.abs() > axis[best].abs() {
            best = i;
        }
    }
    if axis[best] < 0.0 {
        axis.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Scores of every point along one principal axis: `(v - mean) . axis`.
pub fn project_onto_axis(
    space: &EmbeddingSpace,
    pca: &PcaModel,
    axis_index: usize,
) -> Result<Vec<f64>> {
    let axis = pca.axes.get(axis_index).ok_or_else(|| {
        Error::invalid(format!(
            "axis {axis_index} out of range (model has {})",
            pca.num_axes()
        ))
    })?;
    if pca.dim() != space.dim() {
        return Err(Error::invalid("model and space dimensions differ"));
    }
    Ok(space
        .rows()
        .map(|row| {
            row.iter()
                .zip(&pca.mean)
                .zip(axis)
                .map(|((x, m), a)| (x - m) * a)
                .sum()
        })
        .collect())
}
