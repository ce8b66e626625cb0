//! Independent reference computations shared by the integration tests.
//! Nothing here calls into the geometry or extraction code it checks.
#![allow(dead_code)]

use embedding_simplex::EmbeddingSpace;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Affine coordinates of the orthogonal projection of `p` onto the plane
/// through `a, b, c`, from the 2x2 normal equations of the least-squares
/// fit `p - a ~ s (b - a) + t (c - a)`. Returns (1 - s - t, s, t).
pub fn plane_barycentric(p: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> [f64; 3] {
    let u = sub(b, a);
    let v = sub(c, a);
    let w = sub(p, a);
    let (uu, uv, vv) = (dot(&u, &u), dot(&u, &v), dot(&v, &v));
    let (wu, wv) = (dot(&w, &u), dot(&w, &v));
    let det = uu * vv - uv * uv;
    let s = (wu * vv - wv * uv) / det;
    let t = (uu * wv - uv * wu) / det;
    [1.0 - s - t, s, t]
}

/// Outside-triangle fraction by the normal-equation route.
pub fn outside_fraction_oracle(space: &EmbeddingSpace, tri: [usize; 3]) -> f64 {
    let [a, b, c] = tri.map(|i| space.row(i));
    let outside = space
        .rows()
        .filter(|p| plane_barycentric(p, a, b, c).iter().any(|&l| l < -1e-9))
        .count();
    outside as f64 / space.len() as f64
}

/// Which side of the directed line `p -> q` the point `r` is on.
pub fn orient(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
}

/// Three half-plane tests; `None` inside the boundary band.
pub fn halfplane_inside(p: [f64; 2], tri: [[f64; 2]; 3], band: f64) -> Option<bool> {
    let [a, b, c] = tri;
    let area = orient(a, b, c);
    let sign = area.signum();
    let mut inside = true;
    for (x, y) in [(a, b), (b, c), (c, a)] {
        let len = ((y[0] - x[0]).powi(2) + (y[1] - x[1]).powi(2)).sqrt();
        let d = sign * orient(x, y, p) / len;
        if d.abs() < band {
            return None;
        }
        if d < 0.0 {
            inside = false;
        }
    }
    Some(inside)
}

/// Distance from `p` to the line through `a, b`.
pub fn line_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    orient(a, b, p).abs() / ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
}

/// Exact top-k by a full sort of every cosine similarity.
pub fn brute_force_topk(space: &EmbeddingSpace, query: &[f64], k: usize) -> Vec<(usize, f64)> {
    let qn = norm(query);
    let mut all: Vec<(usize, f64, bool)> = space
        .rows()
        .enumerate()
        .map(|(j, r)| {
            let n = norm(r);
            if n == 0.0 {
                (j, 0.0, true)
            } else {
                (j, dot(query, r) / (qn * n), false)
            }
        })
        .collect();
    all.sort_by(|a, b| {
        a.2.cmp(&b.2)
            .then(b.1.partial_cmp(&a.1).unwrap())
            .then(a.0.cmp(&b.0))
    });
    all.truncate(k);
    all.into_iter().map(|(j, s, _)| (j, s)).collect()
}

/// First index attaining the max / min of `scores`.
pub fn brute_force_extremes(scores: &[f64]) -> (usize, usize) {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = scores.iter().cloned().fold(f64::INFINITY, f64::min);
    (
        scores.iter().position(|&s| s == min).unwrap(),
        scores.iter().position(|&s| s == max).unwrap(),
    )
}

pub fn gaussian_space(n: usize, d: usize, seed: u64) -> EmbeddingSpace {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = (0..n)
        .map(|_| (0..d).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    EmbeddingSpace::new((0..n).map(|i| format!("g{i}")).collect(), rows).unwrap()
}

pub fn space_from_rows(rows: Vec<Vec<f64>>) -> EmbeddingSpace {
    EmbeddingSpace::new((0..rows.len()).map(|i| format!("p{i}")).collect(), rows).unwrap()
}

/// Labels of the connected components of the graph `adj[i][j]`, by
/// depth-first search; each label is the smallest member index.
pub fn components(adj: &[Vec<bool>]) -> Vec<usize> {
    let n = adj.len();
    let mut label = vec![usize::MAX; n];
    for start in 0..n {
        if label[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        label[start] = start;
        while let Some(i) = stack.pop() {
            for j in 0..n {
                if adj[i][j] && label[j] == usize::MAX {
                    label[j] = start;
                    stack.push(j);
                }
            }
        }
    }
    label
}
