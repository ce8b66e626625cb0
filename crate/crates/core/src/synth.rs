//! Synthetic point clouds with a known simplex shape.
//!
//! The corners are the canonical standard-simplex vertices, scaled to unit
//! edge length and moved by a seeded random rotation and translation. The
//! corners themselves are the first `V` points; the rest are Dirichlet
//! mixtures of the corners with optional Gaussian noise.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingSpace;
use crate::error::{Error, Result};

/// Half-width of the per-coordinate uniform translation.
const TRANSLATION: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub dim: usize,
    pub vertices: usize,
    pub points: usize,
    pub alpha: f64,
    pub sigma: f64,
    pub seed: u64,
    /// Gaussian corner placement instead of a regular simplex.
    #[serde(default)]
    pub irregular: bool,
}

impl GenParams {
    pub fn validate(&self) -> Result<()> {
        if self.vertices < 3 || self.vertices > self.dim + 1 {
            return Err(Error::invalid(format!(
                "vertex count must be in 3..={}, got {}",
                self.dim + 1,
                self.vertices
            )));
        }
        if self.points < self.vertices {
            return Err(Error::invalid("need at least as many points as vertices"));
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid("Dirichlet concentration must be positive"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("noise scale must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticCloud {
    pub space: EmbeddingSpace,
    /// Row indices of the exact corner points (always `0..V`).
    pub true_vertices: Vec<usize>,
    pub params: GenParams,
}

/// JSON sidecar describing the ground truth of a written cloud.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub vertex_tokens: Vec<String>,
    pub vertex_indices: Vec<usize>,
    pub gen_params: GenParams,
}

impl SyntheticCloud {
    pub fn ground_truth(&self) -> GroundTruth {
        GroundTruth {
            vertex_tokens: self
                .true_vertices
                .iter()
                .map(|&i| self.space.word(i).to_owned())
                .collect(),
            vertex_indices: self.true_vertices.clone(),
            gen_params: self.params.clone(),
        }
    }

    pub fn corner(&self, k: usize) -> &[f64] {
        self.space.row(self.true_vertices[k])
    }

    /// Corner-set centroid.
    pub fn centroid(&self) -> Vec<f64> {
        let mut g = vec![0.0; self.space.dim()];
        for k in 0..self.true_vertices.len() {
            for (s, x) in g.iter_mut().zip(self.corner(k)) {
                *s += x;
            }
        }
        let v = self.true_vertices.len() as f64;
        g.iter_mut().for_each(|s| *s /= v);
        g
    }
}

pub fn token(i: usize) -> String {
    format!("w{:06}", i + 1)
}

/// Circumradius of a regular simplex with `v` corners and unit edges.
pub fn circumradius(v: usize) -> f64 {
    ((v as f64 - 1.0) / (2.0 * v as f64)).sqrt()
}

pub fn generate_simplex_cloud(params: &GenParams) -> Result<SyntheticCloud> {
    params.validate()?;
    let GenParams {
        dim: d,
        vertices: v,
        points: n,
        alpha,
        sigma,
        seed,
        irregular,
    } = *params;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let corners = if irregular {
        (0..v)
            .map(|_| (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
            .collect::<Vec<Vec<f64>>>()
    } else {
        regular_corners(v, d, &mut rng)
    };

    let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::invalid(e.to_string()))?;
    let mut data = Vec::with_capacity(n * d);
    for c in &corners {
        data.extend_from_slice(c);
    }
    let mut weights = vec![0.0; v];
    let mut point = vec![0.0; d];
    for _ in v..n {
        // Dirichlet draw as normalized Gamma variates; redraw the rare
        // all-underflow case.
        loop {
            weights.iter_mut().for_each(|w| *w = gamma.sample(&mut rng));
            let total: f64 = weights.iter().sum();
            if total > 0.0 {
                weights.iter_mut().for_each(|w| *w /= total);
                break;
            }
        }
        point.iter_mut().for_each(|x| *x = 0.0);
        for (w, c) in weights.iter().zip(&corners) {
            for (x, y) in point.iter_mut().zip(c) {
                *x += w * y;
            }
        }
        if sigma > 0.0 {
            for x in point.iter_mut() {
                let z: f64 = rng.sample(StandardNormal);
                *x += sigma * z;
            }
        }
        data.extend_from_slice(&point);
    }

    let words = (0..n).map(token).collect();
    let space = EmbeddingSpace::from_flat(words, data, d)?;
    Ok(SyntheticCloud {
        space,
        true_vertices: (0..v).collect(),
        params: params.clone(),
    })
}

/// Unit-edge regular simplex in `d` dimensions, randomly rotated and
/// translated.
fn regular_corners(v: usize, d: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    // Standard-simplex corner e_i minus the centroid, written in the
    // orthonormal Helmert basis of the plane sum(x) = 0 and scaled by
    // 1/sqrt(2) so edges have unit length. Helmert row k (1-based) is
    // (1, ..., 1, -k, 0, ...) / sqrt(k (k + 1)) with k leading ones.
    let local: Vec<Vec<f64>> = (0..v)
        .map(|i| {
            (1..v)
                .map(|k| {
                    let h = 1.0 / ((k * (k + 1)) as f64).sqrt();
                    let entry = match i.cmp(&k) {
                        std::cmp::Ordering::Less => h,
                        std::cmp::Ordering::Equal => -(k as f64) * h,
                        std::cmp::Ordering::Greater => 0.0,
                    };
                    entry / std::f64::consts::SQRT_2
                })
                .collect()
        })
        .collect();

    let rotation = random_orthogonal(d, rng);
    let shift: Vec<f64> = (0..d)
        .map(|_| rng.random_range(-TRANSLATION..TRANSLATION))
        .collect();

    local
        .iter()
        .map(|p| {
            let mut out = shift.clone();
            // p lives in the first v-1 coordinates; rotation rows are the
            // images of the basis vectors.
            for (coef, basis) in p.iter().zip(&rotation) {
                for (o, b) in out.iter_mut().zip(basis) {
                    *o += coef * b;
                }
            }
            out
        })
        .collect()
}

/// Rows of a random orthogonal matrix: modified Gram-Schmidt over seeded
/// Gaussian rows, processed in row order.
pub fn random_orthogonal(d: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(d);
    while rows.len() < d {
        let mut r: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        for q in &rows {
            let p: f64 = r.iter().zip(q).map(|(a, b)| a * b).sum();
            r.iter_mut().zip(q).for_each(|(a, b)| *a -= p * b);
        }
        let norm = r.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue;
        }
        r.iter_mut().for_each(|x| *x /= norm);
        rows.push(r);
    }
    rows
}
