//! Voronoi cells of lattices and the face structure of the periodic tiling
//! they generate.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{Lattice, ShortVector};
use crate::linalg;
use crate::polytope::{self, HalfSpace, Polytope, MAX_VERTEX_ENUM_DIM};

/// Relative size of the in-face probes used to certify representatives.
const PROBE_EPS: f64 = 1e-5;
const PROBES: usize = 5;

/// V_G as the intersection of the bisector half-spaces x·v ≤ |v|²/2 over the
/// relevant vectors v.
pub fn voronoi_cell(lattice: &Lattice) -> Result<Polytope> {
    check_dim(lattice, "voronoi_cell")?;
    let relevant = lattice.relevant_vectors()?;
    let halfspaces = relevant
        .vectors
        .iter()
        .map(|v| HalfSpace::new(v.as_dvector(), v.norm * v.norm / 2.0))
        .collect::<Result<Vec<_>>>()?;
    polytope::halfspace_intersection(&halfspaces)
}

/// All lattice points nearest to `p`.
pub fn cells_at_point(lattice: &Lattice, p: &DVector<f64>) -> Result<Vec<ShortVector>> {
    lattice.closest_points(p)
}

fn check_dim(lattice: &Lattice, operation: &'static str) -> Result<()> {
    if lattice.dim() > MAX_VERTEX_ENUM_DIM {
        return Err(Error::DimensionTooLarge {
            operation,
            dim: lattice.dim(),
            max: MAX_VERTEX_ENUM_DIM,
        });
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct FundamentalDomainReport {
    pub volume: f64,
    pub determinant: f64,
    pub volume_relative_error: f64,
    pub volume_ok: bool,
    pub samples: usize,
    /// Largest fraction of sampled points of P that also lie inside some P + g.
    pub max_overlap_fraction: f64,
    pub overlap_threshold: f64,
    pub overlap_ok: bool,
    /// Fraction of sampled points with no lattice translate landing in P.
    pub uncovered_fraction: f64,
    pub covering_ok: bool,
    pub pass: bool,
}

/// Checks that `cell` tiles space under `lattice`: volume identity, Monte
/// Carlo overlap with translates, and Monte Carlo covering of a period.
pub fn fundamental_domain_check(
    cell: &Polytope,
    lattice: &Lattice,
    samples: usize,
    seed: u64,
) -> Result<FundamentalDomainReport> {
    if cell.dim() != lattice.dim() {
        return Err(Error::DimensionMismatch("cell and lattice dimensions differ".into()));
    }
    if samples == 0 {
        return Err(Error::InvalidInput("samples must be positive".into()));
    }
    let volume = cell.volume()?;
    let determinant = lattice.determinant();
    let volume_relative_error = (volume - determinant).abs() / determinant;
    let threshold = 2.0 / (samples as f64).sqrt();
    let tol = cell.tolerance() * 10.0;

    let (center, radius) = cell.bounding_ball();
    let translates: Vec<DVector<f64>> = lattice
        .points_near(&DVector::zeros(lattice.dim()), 2.0 * radius)?
        .into_iter()
        .filter(|g| g.vector.iter().any(|&x| x != 0.0))
        .map(|g| g.as_dvector())
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut hits = vec![0usize; translates.len()];
    for _ in 0..samples {
        let x = cell.sample_uniform(&mut rng);
        for (h, g) in hits.iter_mut().zip(&translates) {
            let y = &x - g;
            if cell.facets().iter().all(|f| f.halfspace.slack(&y) > tol) {
                *h += 1;
            }
        }
    }
    let max_overlap_fraction =
        hits.iter().copied().max().unwrap_or(0) as f64 / samples as f64;

    let reach = cell.circumradius().max((center.norm() + radius).abs());
    let mut uncovered = 0usize;
    for _ in 0..samples {
        let u = DVector::from_fn(lattice.dim(), |_, _| rng.random::<f64>());
        let x = lattice.basis() * u;
        let near = lattice.points_near(&x, reach)?;
        let covered = near
            .iter()
            .any(|g| cell.contains(&(&x - g.as_dvector()), tol));
        if !covered {
            uncovered += 1;
        }
    }
    let uncovered_fraction = uncovered as f64 / samples as f64;

    let volume_ok = volume_relative_error <= 1e-6;
    let overlap_ok = max_overlap_fraction <= threshold;
    let covering_ok = uncovered_fraction <= threshold;
    Ok(FundamentalDomainReport {
        volume,
        determinant,
        volume_relative_error,
        volume_ok,
        samples,
        max_overlap_fraction,
        overlap_threshold: threshold,
        overlap_ok,
        uncovered_fraction,
        covering_ok,
        pass: volume_ok && overlap_ok && covering_ok,
    })
}

/// One face of the Voronoi cell, seen as a face of the periodic tiling.
#[derive(Clone, Debug, Serialize)]
pub struct TilingFace {
    pub face_dim: usize,
    /// Indices into the cell's vertex list.
    pub cell_vertices: Vec<usize>,
    pub representative_point: Vec<f64>,
    /// Lattice points (cell centers) nearest to the representative.
    pub equidistant_points: Vec<Vec<f64>>,
    #[serde(skip)]
    pub equidistant_coeffs: Vec<Vec<i64>>,
    pub incident_facet_normals: Vec<Vec<f64>>,
    /// Whether the equidistant set survived small in-face perturbations.
    pub stable: bool,
}

impl TilingFace {
    pub fn chamber_count(&self) -> usize {
        self.equidistant_points.len()
    }

    pub fn representative(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.representative_point)
    }

    pub fn centers(&self) -> Vec<DVector<f64>> {
        self.equidistant_points
            .iter()
            .map(|p| DVector::from_column_slice(p))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct TilingComplex {
    pub lattice: Lattice,
    pub cell: Polytope,
    pub faces: Vec<TilingFace>,
}

#[derive(Serialize)]
struct TilingComplexFile<'a> {
    dim: usize,
    basis: Vec<Vec<f64>>,
    face_counts: Vec<usize>,
    faces: &'a [TilingFace],
}

impl TilingComplex {
    pub fn faces_of_dim(&self, k: usize) -> impl Iterator<Item = &TilingFace> {
        self.faces.iter().filter(move |f| f.face_dim == k)
    }

    pub fn face_counts(&self) -> Vec<usize> {
        (0..self.lattice.dim())
            .map(|k| self.faces_of_dim(k).count())
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(TilingComplexFile {
            dim: self.lattice.dim(),
            basis: self.lattice.to_file().basis,
            face_counts: self.face_counts(),
            faces: &self.faces,
        })
        .expect("tiling complex serializes")
    }
}

/// Face structure of the tiling generated by the Voronoi cell, one entry per
/// face of the cell with its incident cells.
pub fn tiling_skeleton(lattice: &Lattice) -> Result<TilingComplex> {
    let cell = voronoi_cell(lattice)?;
    let n = lattice.dim();
    let lambda = lattice.minimal_norm()?;
    let levels = cell.face_lattice();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut faces = Vec::new();
    for (k, level) in levels.iter().enumerate() {
        for face in level {
            let pts: Vec<&DVector<f64>> = face.iter().map(|&i| &cell.vertices()[i]).collect();
            let rep = match k {
                0 => pts[0].clone(),
                1 => endpoints_midpoint(&pts),
                _ => linalg::centroid(&pts),
            };
            let nearest = cells_at_point(lattice, &rep)?;
            let coeffs: Vec<Vec<i64>> = nearest.iter().map(|p| p.coeffs.clone()).collect();
            let mut key = coeffs.clone();
            key.sort();

            let mut stable = true;
            if k > 0 {
                let diffs: Vec<DVector<f64>> = pts[1..].iter().map(|p| *p - pts[0]).collect();
                let span = linalg::orthonormal_span(&diffs, 1e-9 * lambda);
                for _ in 0..PROBES {
                    let mut probe = rep.clone();
                    let w = linalg::random_unit_vector(&mut rng, span.len());
                    for (q, c) in span.iter().zip(w.iter()) {
                        probe.axpy(PROBE_EPS * lambda * c, q, 1.0);
                    }
                    let mut near: Vec<Vec<i64>> = cells_at_point(lattice, &probe)?
                        .into_iter()
                        .map(|p| p.coeffs)
                        .collect();
                    near.sort();
                    if near != key {
                        stable = false;
                    }
                }
            }

            let incident_facet_normals = cell
                .facets()
                .iter()
                .filter(|f| face.iter().all(|i| f.vertices.binary_search(i).is_ok()))
                .map(|f| f.halfspace.normal().iter().copied().collect())
                .collect();
            faces.push(TilingFace {
                face_dim: k,
                cell_vertices: face.clone(),
                representative_point: rep.iter().copied().collect(),
                equidistant_points: nearest.iter().map(|p| p.vector.clone()).collect(),
                equidistant_coeffs: coeffs,
                incident_facet_normals,
                stable,
            });
        }
    }
    debug_assert!(faces.iter().all(|f| f.face_dim < n));
    Ok(TilingComplex {
        lattice: lattice.clone(),
        cell,
        faces,
    })
}

fn endpoints_midpoint(pts: &[&DVector<f64>]) -> DVector<f64> {
    let mut best = (0, 0, -1.0);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = (pts[i] - pts[j]).norm();
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    (pts[best.0] + pts[best.1]) / 2.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{catalog, CatalogName};

    fn has_vertex(p: &Polytope, v: &[f64]) -> bool {
        let v = DVector::from_column_slice(v);
        p.vertices().iter().any(|w| (w - &v).norm() < 1e-9)
    }

    #[test]
    fn cubic_cell() {
        let cell = voronoi_cell(&catalog(CatalogName::Z, 3).unwrap()).unwrap();
        assert_eq!(cell.vertices().len(), 8);
        assert!(has_vertex(&cell, &[0.5, 0.5, -0.5]));
        assert!((cell.volume().unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bcc_truncated_octahedron() {
        let cell = voronoi_cell(&catalog(CatalogName::Bcc, 3).unwrap()).unwrap();
        assert_eq!(cell.vertices().len(), 24);
        assert_eq!(cell.facets().len(), 14);
        for v in cell.vertices() {
            let mut a: Vec<f64> = v.iter().map(|x| x.abs()).collect();
            a.sort_by(f64::total_cmp);
            assert!((a[0]).abs() < 1e-9 && (a[1] - 0.5).abs() < 1e-9 && (a[2] - 1.0).abs() < 1e-9);
        }
        assert!((cell.volume().unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn permutohedron_facets() {
        for n in 2..=4 {
            let cell = voronoi_cell(&catalog(CatalogName::Astar, n).unwrap()).unwrap();
            assert_eq!(cell.facets().len(), 2 * ((1 << n) - 1), "n = {n}");
        }
    }

    #[test]
    fn d4_is_the_24_cell() {
        let d4 = catalog(CatalogName::D, 4).unwrap();
        let cell = voronoi_cell(&d4).unwrap();
        assert_eq!(cell.vertices().len(), 24);
        assert_eq!(cell.facets().len(), 24);
        assert!(has_vertex(&cell, &[1.0, 0.0, 0.0, 0.0]));
        assert!(has_vertex(&cell, &[-0.5, 0.5, 0.5, -0.5]));
        assert!((cell.volume().unwrap() - 2.0).abs() < 1e-9);
        let (r, _) = cell.chebyshev_inradius().unwrap();
        assert!((r - 2f64.sqrt() / 2.0).abs() < 1e-9);
    }

    #[test]
    fn too_large_dimension() {
        let e8 = catalog(CatalogName::E8, 8).unwrap();
        assert!(matches!(voronoi_cell(&e8), Err(Error::DimensionTooLarge { .. })));
    }

    #[test]
    fn fundamental_domain_reports() {
        let z3 = catalog(CatalogName::Z, 3).unwrap();
        let cube = voronoi_cell(&z3).unwrap();
        let r = fundamental_domain_check(&cube, &z3, 4000, 1).unwrap();
        assert!(r.pass, "{r:?}");
        assert_eq!(r.max_overlap_fraction, 0.0);

        let fcc = catalog(CatalogName::Fcc, 3).unwrap();
        let rd = voronoi_cell(&fcc).unwrap();
        let r = fundamental_domain_check(&rd, &fcc, 4000, 2).unwrap();
        assert!(r.pass, "{r:?}");
        assert!((r.volume - 2.0).abs() < 1e-9);

        let r = fundamental_domain_check(&cube, &fcc, 4000, 3).unwrap();
        assert!(!r.covering_ok && !r.pass);
        assert!((r.uncovered_fraction - 0.5).abs() < 0.05);
    }

    #[test]
    fn skeleton_chamber_counts() {
        let z2 = tiling_skeleton(&catalog(CatalogName::Z, 2).unwrap()).unwrap();
        let v = z2
            .faces_of_dim(0)
            .find(|f| (f.representative() - DVector::from_vec(vec![0.5, 0.5])).norm() < 1e-9)
            .unwrap();
        assert_eq!(v.chamber_count(), 4);

        let fcc = tiling_skeleton(&catalog(CatalogName::Fcc, 3).unwrap()).unwrap();
        assert_eq!(fcc.face_counts(), vec![14, 24, 12]);
        for f in fcc.faces_of_dim(0) {
            let r = f.representative();
            let expected = if (r.norm() - 1.0).abs() < 1e-9 { 6 } else { 4 };
            assert_eq!(f.chamber_count(), expected);
        }
        for f in &fcc.faces {
            assert!(f.stable, "{f:?}");
            let rep = f.representative();
            let d: Vec<f64> = f.centers().iter().map(|c| (c - &rep).norm()).collect();
            assert!(d.iter().all(|x| (x - d[0]).abs() < 1e-9));
        }
        assert!(fcc.faces_of_dim(2).all(|f| f.chamber_count() == 2));
        assert!(fcc.faces_of_dim(1).all(|f| f.chamber_count() >= 3));

        let d4 = tiling_skeleton(&catalog(CatalogName::D, 4).unwrap()).unwrap();
        assert_eq!(d4.face_counts(), vec![24, 96, 96, 24]);
        assert!(d4.faces_of_dim(0).all(|f| f.chamber_count() == 8));
        assert!(d4.faces_of_dim(3).all(|f| f.chamber_count() == 2));
    }

    #[test]
    fn tiling_json_has_faces() {
        let hex = tiling_skeleton(&catalog(CatalogName::Hex, 2).unwrap()).unwrap();
        let v = hex.to_json();
        assert_eq!(v["face_counts"], serde_json::json!([6, 6]));
        assert_eq!(v["faces"].as_array().unwrap().len(), 12);
    }
}
