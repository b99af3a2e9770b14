//! Small dense helpers shared by the geometry modules.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

/// Orthonormal basis (as columns) of the span of `vectors`, computed by
/// modified Gram–Schmidt with a drop tolerance on the residual norm.
pub fn orthonormal_span(vectors: &[DVector<f64>], tol: f64) -> Vec<DVector<f64>> {
    let mut basis: Vec<DVector<f64>> = Vec::new();
    // Process longest vectors first so the tolerance acts on the noise floor.
    let mut order: Vec<usize> = (0..vectors.len()).collect();
    order.sort_by(|&a, &b| vectors[b].norm().total_cmp(&vectors[a].norm()));
    for i in order {
        let mut v = vectors[i].clone();
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let n = v.norm();
        if n > tol {
            basis.push(v / n);
        }
        if let Some(first) = vectors.first() {
            if basis.len() == first.len() {
                break;
            }
        }
    }
    basis
}

/// Affine dimension of a point set (-1 for the empty set is reported as 0).
pub fn affine_rank(points: &[&DVector<f64>], tol: f64) -> usize {
    if points.len() < 2 {
        return 0;
    }
    let origin = points[0];
    let diffs: Vec<DVector<f64>> = points[1..].iter().map(|p| *p - origin).collect();
    orthonormal_span(&diffs, tol).len()
}

pub fn centroid(points: &[&DVector<f64>]) -> DVector<f64> {
    let n = points[0].len();
    let mut c = DVector::zeros(n);
    for p in points {
        c += *p;
    }
    c / points.len() as f64
}

/// Euclidean distance from `x` to the affine hull of `points`.
pub fn distance_to_affine_hull(x: &DVector<f64>, points: &[&DVector<f64>], tol: f64) -> f64 {
    let origin = points[0];
    let diffs: Vec<DVector<f64>> = points[1..].iter().map(|p| *p - origin).collect();
    let basis = orthonormal_span(&diffs, tol);
    let mut r = x - origin;
    for q in &basis {
        let c = q.dot(&r);
        r.axpy(-c, q, 1.0);
    }
    r.norm()
}

/// Orthonormal basis of the orthogonal complement of `span` in dimension `dim`.
pub fn orthogonal_complement(span: &[DVector<f64>], dim: usize, tol: f64) -> Vec<DVector<f64>> {
    let mut basis = orthonormal_span(span, tol);
    let k = basis.len();
    for i in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut v = DVector::zeros(dim);
        v[i] = 1.0;
        for _ in 0..2 {
            for q in &basis {
                let c = q.dot(&v);
                v.axpy(-c, q, 1.0);
            }
        }
        let n = v.norm();
        if n > 1e-6 {
            basis.push(v / n);
        }
    }
    basis.split_off(k)
}

/// Uniformly random point on the unit sphere S^{dim-1}.
pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// Haar-random orthogonal matrix (QR of a Gaussian matrix with sign fix).
pub fn random_rotation<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        if r[(j, j)] < 0.0 {
            for i in 0..dim {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// Volume of the unit sphere S^{n-1} in R^n.
pub fn sphere_area(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    2.0 * std::f64::consts::PI.powf(h) / statrs::function::gamma::gamma(h)
}

/// Volume of the unit ball in R^n.
pub fn ball_volume(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    std::f64::consts::PI.powf(h) / statrs::function::gamma::gamma(h + 1.0)
}
