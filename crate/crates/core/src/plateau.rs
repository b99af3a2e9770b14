//! Local structure of lattice tilings compared with the admissible singular
//! cones of perimeter-minimizing partitions.

use std::collections::BTreeMap;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{catalog, CatalogName, Lattice, LatticeFile};
use crate::linalg;
use crate::voronoi::{tiling_skeleton, TilingFace};

pub const DEFAULT_TOL_DEG: f64 = 0.1;

fn tetrahedral_deg() -> f64 {
    (-1.0f64 / 3.0).acos().to_degrees()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    PassPlanar,
    #[serde(rename = "PASS_TRIPLE_120")]
    PassTriple120,
    PassTetrahedral,
    PassHypercubeCone,
    Violation,
}

impl Verdict {
    pub fn is_pass(self) -> bool {
        self != Verdict::Violation
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::PassPlanar => "PASS_PLANAR",
            Verdict::PassTriple120 => "PASS_TRIPLE_120",
            Verdict::PassTetrahedral => "PASS_TETRAHEDRAL",
            Verdict::PassHypercubeCone => "PASS_HYPERCUBE_CONE",
            Verdict::Violation => "VIOLATION",
        }
    }
}

/// Measured local geometry at one tiling face.
#[derive(Clone, Debug, Serialize)]
pub struct ConeSignature {
    pub face_dim: usize,
    pub chamber_count: usize,
    /// Dimension of the span of the chamber centers relative to each other.
    pub normal_dim: usize,
    /// Codimension 2: chamber wedge angles in cyclic order. Codimension 3:
    /// pairwise angles between edge directions. Codimension 4: pairwise
    /// angles between chamber directions.
    pub angles_deg: Vec<f64>,
    /// Unit edge directions in the normal space (codimension ≥ 3).
    pub edge_directions: Vec<Vec<f64>>,
}

/// Chamber directions of `face` in coordinates of its normal space.
fn normal_coordinates(face: &TilingFace, scale: f64) -> (Vec<DVector<f64>>, usize) {
    let rep = face.representative();
    let centers = face.centers();
    let diffs: Vec<DVector<f64>> = centers.iter().map(|c| c - &centers[0]).collect();
    let basis = linalg::orthonormal_span(&diffs, 1e-8 * scale);
    let m = basis.len();
    let coords = centers
        .iter()
        .map(|c| {
            let d = c - &rep;
            DVector::from_fn(m, |i, _| basis[i].dot(&d))
        })
        .collect();
    (coords, m)
}

fn angle_deg(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a.dot(b) / (a.norm() * b.norm())).clamp(-1.0, 1.0).acos().to_degrees()
}

pub fn classify_face(lattice: &Lattice, face: &TilingFace) -> Result<ConeSignature> {
    let n = lattice.dim();
    let k = face.chamber_count();
    if k < 2 {
        return Err(Error::DegenerateFace(format!(
            "face of dimension {} has {k} chambers",
            face.face_dim
        )));
    }
    let scale = lattice.minimal_norm()?;
    let (q, m) = normal_coordinates(face, scale);
    let codim = n - face.face_dim;
    if m != codim {
        return Err(Error::DegenerateFace(format!(
            "face of dimension {} in R^{n}: chamber centers span {m} dimensions",
            face.face_dim
        )));
    }
    let mut sig = ConeSignature {
        face_dim: face.face_dim,
        chamber_count: k,
        normal_dim: m,
        angles_deg: Vec::new(),
        edge_directions: Vec::new(),
    };
    match m {
        1 => {}
        2 => {
            let mut phi: Vec<f64> = q.iter().map(|v| v[1].atan2(v[0])).collect();
            phi.sort_by(f64::total_cmp);
            let tau = std::f64::consts::TAU;
            sig.angles_deg = (0..k)
                .map(|i| {
                    let prev = if i == 0 { phi[k - 1] - tau } else { phi[i - 1] };
                    let next = if i + 1 == k { phi[0] + tau } else { phi[i + 1] };
                    ((next - prev) / 2.0).to_degrees()
                })
                .collect();
        }
        3 => {
            let edges = edge_rays(&q, scale);
            for i in 0..edges.len() {
                for j in i + 1..edges.len() {
                    sig.angles_deg.push(angle_deg(&edges[i], &edges[j]));
                }
            }
            sig.edge_directions = edges.iter().map(|e| e.iter().copied().collect()).collect();
        }
        _ => {
            for i in 0..k {
                for j in i + 1..k {
                    sig.angles_deg.push(angle_deg(&q[i], &q[j]));
                }
            }
        }
    }
    Ok(sig)
}

/// Rays u in the 3-dimensional normal space along which at least three
/// chambers meet, i.e. argmax_i u·q_i has at least three elements.
fn edge_rays(q: &[DVector<f64>], scale: f64) -> Vec<DVector<f64>> {
    let tol = 1e-8 * scale;
    let mut rays: Vec<DVector<f64>> = Vec::new();
    let k = q.len();
    for a in 0..k {
        for b in a + 1..k {
            for c in b + 1..k {
                let u = (&q[b] - &q[a]).cross(&(&q[c] - &q[a]));
                let len = u.norm();
                if len < tol * scale {
                    continue;
                }
                for sign in [1.0, -1.0] {
                    let u = &u * (sign / len);
                    let top = u.dot(&q[a]);
                    if q.iter().all(|v| u.dot(v) <= top + tol)
                        && !rays.iter().any(|r| (r - &u).norm() < 1e-6)
                    {
                        rays.push(u);
                    }
                }
            }
        }
    }
    rays
}

/// Verdict for a single face from its own geometry, with the largest angular
/// deviation from the nearest admissible cone.
pub fn face_verdict(sig: &ConeSignature, dim: usize, tol_deg: f64) -> (Verdict, f64) {
    let max_dev = |target: &dyn Fn(f64) -> f64| {
        sig.angles_deg
            .iter()
            .map(|&a| (a - target(a)).abs())
            .fold(0.0, f64::max)
    };
    match sig.normal_dim {
        1 => {
            if sig.chamber_count == 2 {
                (Verdict::PassPlanar, 0.0)
            } else {
                (Verdict::Violation, 0.0)
            }
        }
        2 => {
            let dev = max_dev(&|_| 120.0);
            if sig.chamber_count == 3 && dev <= tol_deg {
                (Verdict::PassTriple120, dev)
            } else {
                (Verdict::Violation, dev)
            }
        }
        3 => {
            let t = tetrahedral_deg();
            let dev = max_dev(&|_| t);
            if sig.chamber_count == 4 && sig.edge_directions.len() == 4 && dev <= tol_deg {
                (Verdict::PassTetrahedral, dev)
            } else {
                (Verdict::Violation, dev)
            }
        }
        4 if dim == 4 => {
            // Chamber directions of the cone over the hypercube 2-skeleton
            // are four orthogonal antipodal pairs.
            let dev = max_dev(&|a| if a > 135.0 { 180.0 } else { 90.0 });
            let antipodal = sig.angles_deg.iter().filter(|&&a| a > 135.0).count();
            if sig.chamber_count == 8 && antipodal == 4 && dev <= tol_deg {
                (Verdict::PassHypercubeCone, dev)
            } else {
                (Verdict::Violation, dev)
            }
        }
        _ => (Verdict::Violation, f64::NAN),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FaceOrbit {
    pub face_dim: usize,
    pub chambers: usize,
    pub angles_deg: Vec<f64>,
    pub verdict: Verdict,
    pub deviation_deg: f64,
    /// Number of faces of the cell in this class.
    pub count: usize,
    pub representative_point: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct PlateauReport {
    pub lattice: LatticeFile,
    pub dim: usize,
    pub tol_deg: f64,
    pub orbits: Vec<FaceOrbit>,
    pub faces_checked: usize,
    pub pass: bool,
    pub notes: Vec<String>,
}

impl PlateauReport {
    pub fn violations(&self) -> impl Iterator<Item = &FaceOrbit> {
        self.orbits.iter().filter(|o| !o.verdict.is_pass())
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serializes")
    }
}

pub fn plateau_check(lattice: &Lattice, tol_deg: f64) -> Result<PlateauReport> {
    let n = lattice.dim();
    if !(2..=4).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    if !(tol_deg >= 0.0) {
        return Err(Error::InvalidInput("tol_deg must be non-negative".into()));
    }
    let complex = tiling_skeleton(lattice)?;
    let classified: Vec<(ConeSignature, Verdict, f64)> = complex
        .faces
        .par_iter()
        .map(|f| {
            let sig = classify_face(lattice, f)?;
            let (v, d) = face_verdict(&sig, n, tol_deg);
            Ok((sig, v, d))
        })
        .collect::<Result<_>>()?;

    let mut verdicts: Vec<Verdict> = classified.iter().map(|c| c.1).collect();
    let mut notes = Vec::new();
    if n == 4 {
        notes.push(
            "4D vertex verdicts use chamber count, chamber directions and incident faces only"
                .to_string(),
        );
        for (i, f) in complex.faces.iter().enumerate() {
            if f.face_dim != 0 || !verdicts[i].is_pass() {
                continue;
            }
            let v = f.cell_vertices[0];
            let incident_fail = complex.faces.iter().zip(&classified).any(|(g, c)| {
                g.face_dim > 0 && g.cell_vertices.contains(&v) && !c.1.is_pass()
            });
            if incident_fail {
                verdicts[i] = Verdict::Violation;
            }
        }
    }

    let mut groups: BTreeMap<(usize, usize, Verdict, Vec<i64>), FaceOrbit> = BTreeMap::new();
    for ((f, (sig, _, dev)), verdict) in complex.faces.iter().zip(&classified).zip(&verdicts) {
        let mut sorted = sig.angles_deg.clone();
        sorted.sort_by(f64::total_cmp);
        let key_angles: Vec<i64> = sorted.iter().map(|a| (a * 1e4).round() as i64).collect();
        let key = (f.face_dim, sig.chamber_count, *verdict, key_angles);
        groups
            .entry(key)
            .and_modify(|o| {
                o.count += 1;
                o.deviation_deg = o.deviation_deg.max(*dev);
            })
            .or_insert_with(|| FaceOrbit {
                face_dim: f.face_dim,
                chambers: sig.chamber_count,
                angles_deg: sig.angles_deg.clone(),
                verdict: *verdict,
                deviation_deg: *dev,
                count: 1,
                representative_point: f.representative_point.clone(),
            });
    }
    let orbits: Vec<FaceOrbit> = groups.into_values().collect();
    let pass = orbits.iter().all(|o| o.verdict.is_pass());
    Ok(PlateauReport {
        lattice: lattice.to_file(),
        dim: n,
        tol_deg,
        orbits,
        faces_checked: complex.faces.len(),
        pass,
        notes,
    })
}

/// Dihedral angles of the three flat truncated octahedra around an edge of
/// the BCC Voronoi tiling.
pub fn bcc_edge_angles() -> Result<(ConeSignature, Verdict, f64)> {
    let bcc = catalog(CatalogName::Bcc, 3)?;
    let complex = tiling_skeleton(&bcc)?;
    let edge = complex
        .faces_of_dim(1)
        .find(|f| f.chamber_count() == 3)
        .ok_or_else(|| Error::DegenerateFace("no triple edge in the BCC tiling".into()))?;
    let sig = classify_face(&bcc, edge)?;
    let (v, d) = face_verdict(&sig, 3, DEFAULT_TOL_DEG);
    Ok((sig, v, d))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orbit_with(r: &PlateauReport, dim: usize, chambers: usize) -> Option<&FaceOrbit> {
        r.orbits.iter().find(|o| o.face_dim == dim && o.chambers == chambers)
    }

    #[test]
    fn square_grid_vertex() {
        let z2 = catalog(CatalogName::Z, 2).unwrap();
        let r = plateau_check(&z2, DEFAULT_TOL_DEG).unwrap();
        assert!(!r.pass);
        let v = orbit_with(&r, 0, 4).unwrap();
        assert_eq!(v.verdict, Verdict::Violation);
        for a in &v.angles_deg {
            assert!((a - 90.0).abs() < 1e-9);
        }
        assert!((v.deviation_deg - 30.0).abs() < 1e-9);
    }

    #[test]
    fn hexagonal_passes_tightly() {
        let hex = catalog(CatalogName::Hex, 2).unwrap();
        let r = plateau_check(&hex, 1e-6).unwrap();
        assert!(r.pass, "{r:?}");
        let v = orbit_with(&r, 0, 3).unwrap();
        assert_eq!(v.verdict, Verdict::PassTriple120);
        assert_eq!(v.count, 6);
    }

    #[test]
    fn fcc_vertex_classes() {
        let fcc = catalog(CatalogName::Fcc, 3).unwrap();
        let r = plateau_check(&fcc, DEFAULT_TOL_DEG).unwrap();
        assert!(!r.pass);
        let six = orbit_with(&r, 0, 6).unwrap();
        assert_eq!(six.verdict, Verdict::Violation);
        assert_eq!(six.count, 6);
        let four = orbit_with(&r, 0, 4).unwrap();
        assert_eq!(four.verdict, Verdict::PassTetrahedral);
        assert_eq!(four.count, 8);
        assert!(r
            .orbits
            .iter()
            .filter(|o| o.face_dim == 1)
            .all(|o| o.verdict == Verdict::PassTriple120));
    }

    #[test]
    fn bcc_edges() {
        let (sig, verdict, dev) = bcc_edge_angles().unwrap();
        let mut a = sig.angles_deg.clone();
        a.sort_by(f64::total_cmp);
        assert!((a[0] - tetrahedral_deg()).abs() < 1e-6);
        assert!((a[1] - 125.26438968).abs() < 1e-6);
        assert!((a[2] - 125.26438968).abs() < 1e-6);
        assert!((a.iter().sum::<f64>() - 360.0).abs() < 1e-9);
        assert_eq!(verdict, Verdict::Violation);
        assert!((dev - 10.5288).abs() < 1e-3);
    }

    #[test]
    fn d4_passes() {
        let d4 = catalog(CatalogName::D, 4).unwrap();
        let r = plateau_check(&d4, DEFAULT_TOL_DEG).unwrap();
        assert!(r.pass, "{:#?}", r.orbits);
        let v = orbit_with(&r, 0, 8).unwrap();
        assert_eq!(v.verdict, Verdict::PassHypercubeCone);
        assert_eq!(v.count, 24);
        let c2 = orbit_with(&r, 2, 3).unwrap();
        assert_eq!(c2.verdict, Verdict::PassTriple120);
        assert!(c2.deviation_deg < 1e-6);
    }

    #[test]
    fn unsupported_dimension() {
        let z5 = catalog(CatalogName::Z, 5).unwrap();
        assert_eq!(plateau_check(&z5, 0.1).unwrap_err(), Error::UnsupportedDimension(5));
    }
}
