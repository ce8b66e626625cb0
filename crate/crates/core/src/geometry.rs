//! Projection of the cloud onto the plane of three vertex points, and
//! triangle / incircle containment in that plane.

use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingSpace;
use crate::error::{Error, Result};

/// Barycentric slack under which a point still counts as inside.
pub const INSIDE_TOL: f64 = 1e-9;

pub type Point2 = [f64; 2];

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthonormal frame of the affine plane through three points.
#[derive(Clone, Debug, PartialEq)]
pub struct PlaneFrame {
    pub origin: Vec<f64>,
    pub e1: Vec<f64>,
    pub e2: Vec<f64>,
}

impl PlaneFrame {
    /// Coordinates of `p` in the frame.
    pub fn project(&self, p: &[f64]) -> Point2 {
        let mut x = 0.0;
        let mut y = 0.0;
        for ((v, o), (a, b)) in p.iter().zip(&self.origin).zip(self.e1.iter().zip(&self.e2)) {
            let r = v - o;
            x += r * a;
            y += r * b;
        }
        [x, y]
    }

    /// The D-dimensional point with frame coordinates `xy`.
    pub fn lift(&self, xy: Point2) -> Vec<f64> {
        self.origin
            .iter()
            .zip(self.e1.iter().zip(&self.e2))
            .map(|(o, (a, b))| o + xy[0] * a + xy[1] * b)
            .collect()
    }
}

/// Gram-Schmidt frame with origin `a`, first axis along `b - a`.
pub fn plane_basis(a: &[f64], b: &[f64], c: &[f64]) -> Result<PlaneFrame> {
    if a.len() != b.len() || a.len() != c.len() || a.is_empty() {
        return Err(Error::invalid("triangle corners must share a positive dimension"));
    }
    let ab: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
    let ac: Vec<f64> = c.iter().zip(a).map(|(x, y)| x - y).collect();
    let ab_norm = dot(&ab, &ab).sqrt();
    if ab_norm < 1e-12 {
        return Err(Error::DegenerateTriangle(format!(
            "first edge has length {ab_norm:e}"
        )));
    }
    let e1: Vec<f64> = ab.iter().map(|x| x / ab_norm).collect();
    let along = dot(&ac, &e1);
    let resid: Vec<f64> = ac.iter().zip(&e1).map(|(x, u)| x - along * u).collect();
    let resid_norm = dot(&resid, &resid).sqrt();
    let ac_norm = dot(&ac, &ac).sqrt();
    if resid_norm.is_nan() || resid_norm < 1e-9 * ac_norm || resid_norm == 0.0 {
        return Err(Error::DegenerateTriangle(format!(
            "third corner lies on the first edge line (residual {resid_norm:e})"
        )));
    }
    let e2 = resid.iter().map(|x| x / resid_norm).collect();
    Ok(PlaneFrame {
        origin: a.to_vec(),
        e1,
        e2,
    })
}

/// Frame coordinates of every point in the space, in vocabulary order.
pub fn project_to_plane(space: &EmbeddingSpace, frame: &PlaneFrame) -> Vec<Point2> {
    space.rows().map(|row| frame.project(row)).collect()
}

/// A non-degenerate triangle in the plane with its barycentric solver
/// precomputed.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Triangle {
    pub corners: [Point2; 3],
    det: f64,
}

impl Triangle {
    pub fn new(corners: [Point2; 3]) -> Result<Self> {
        let [a, b, c] = corners;
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let scale = [dist(a, b), dist(b, c), dist(c, a)]
            .into_iter()
            .fold(0.0, f64::max);
        if !det.is_finite() || det.abs() <= 1e-12 * scale * scale || scale == 0.0 {
            return Err(Error::DegenerateTriangle(format!(
                "signed doubled area {det:e} at scale {scale:e}"
            )));
        }
        Ok(Triangle { corners, det })
    }

    pub fn barycentric(&self, p: Point2) -> [f64; 3] {
        let [a, b, c] = self.corners;
        let l2 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / self.det;
        let l3 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / self.det;
        [1.0 - l2 - l3, l2, l3]
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.barycentric(p).iter().all(|&l| l >= -INSIDE_TOL)
    }

    pub fn area(&self) -> f64 {
        0.5 * self.det.abs()
    }

    /// Incenter and inradius.
    pub fn incircle(&self) -> (Point2, f64) {
        let [a, b, c] = self.corners;
        // Side lengths opposite each corner.
        let la = dist(b, c);
        let lb = dist(c, a);
        let lc = dist(a, b);
        let p = la + lb + lc;
        let center = [
            (la * a[0] + lb * b[0] + lc * c[0]) / p,
            (la * a[1] + lb * b[1] + lc * c[1]) / p,
        ];
        (center, self.area() / (0.5 * p))
    }
}

fn dist(p: Point2, q: Point2) -> f64 {
    (p[0] - q[0]).hypot(p[1] - q[1])
}

/// Barycentric coordinates of `p` with respect to `tri`.
pub fn barycentric(p: Point2, tri: [Point2; 3]) -> Result<[f64; 3]> {
    Ok(Triangle::new(tri)?.barycentric(p))
}

pub fn incircle(tri: [Point2; 3]) -> Result<(Point2, f64)> {
    Ok(Triangle::new(tri)?.incircle())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TripleStats {
    pub inside_triangle_fraction: f64,
    pub outside_incircle_fraction: f64,
    pub incenter: Point2,
    pub inradius: f64,
}

/// The cloud projected onto the plane of a vertex triple.
#[derive(Clone, Debug)]
pub struct TriangleProjection {
    pub frame: PlaneFrame,
    pub triangle: Triangle,
    pub coords: Vec<Point2>,
}

impl TriangleProjection {
    pub fn new(space: &EmbeddingSpace, triple: [usize; 3]) -> Result<Self> {
        let n = space.len();
        if triple.iter().any(|&i| i >= n) {
            return Err(Error::invalid(format!(
                "vertex index out of range for {n} words"
            )));
        }
        let [a, b, c] = triple.map(|i| space.row(i));
        let frame = plane_basis(a, b, c)?;
        let triangle = Triangle::new([frame.project(a), frame.project(b), frame.project(c)])?;
        let coords = project_to_plane(space, &frame);
        Ok(TriangleProjection {
            frame,
            triangle,
            coords,
        })
    }

    pub fn inside_triangle(&self, j: usize) -> bool {
        self.triangle.contains(self.coords[j])
    }

    pub fn stats(&self) -> TripleStats {
        let (incenter, inradius) = self.triangle.incircle();
        let mut inside_tri = 0usize;
        let mut outside_circle = 0usize;
        for &p in &self.coords {
            if self.triangle.contains(p) {
                inside_tri += 1;
            }
            if dist(p, incenter) > inradius {
                outside_circle += 1;
            }
        }
        let n = self.coords.len() as f64;
        TripleStats {
            inside_triangle_fraction: inside_tri as f64 / n,
            outside_incircle_fraction: outside_circle as f64 / n,
            incenter,
            inradius,
        }
    }
}

/// Containment statistics of the whole cloud for the triangle of three
/// vocabulary points. Fractions are over every word, the corners included.
pub fn triangle_stats(space: &EmbeddingSpace, va: usize, vb: usize, vc: usize) -> Result<TripleStats> {
    Ok(TriangleProjection::new(space, [va, vb, vc])?.stats())
}

/// Fraction of words projecting outside the triangle; the quantity the
/// false-vertex filter averages. Skips the incircle pass.
pub fn outside_triangle_fraction(space: &EmbeddingSpace, triple: [usize; 3]) -> Result<f64> {
    let [a, b, c] = triple.map(|i| space.row(i));
    let frame = plane_basis(a, b, c)?;
    let tri = Triangle::new([frame.project(a), frame.project(b), frame.project(c)])?;
    let outside = space
        .rows()
        .filter(|row| !tri.contains(frame.project(row)))
        .count();
    Ok(outside as f64 / space.len() as f64)
}
