//! Bounded convex polytopes built from half-space data.
//!
//! Vertices come from enumerating every N-subset of bounding hyperplanes,
//! keeping feasible intersection points, and merging duplicates at a
//! tolerance proportional to the polytope's own scale (twice its Chebyshev
//! radius). Facets are the half-spaces whose incident vertices span an
//! (N−1)-dimensional affine set; redundant constraints drop out there.
//!
//! Measures of faces are computed recursively with the pyramid formula
//! `vol_k(F) = (1/k) Σ_ridges dist(c_F, ridge) · vol_{k−1}(ridge)` where
//! `c_F` is the vertex centroid of `F`.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::lp::{self, LpOutcome};

/// Vertex enumeration is unrestricted up to this dimension.
pub const MAX_VERTEX_ENUM_DIM: usize = 4;
/// Above [`MAX_VERTEX_ENUM_DIM`], at most this many half-spaces are accepted.
pub const MAX_HALFSPACES: usize = 30;
/// Relative tolerance for feasibility, vertex merging, incidence and rank
/// decisions, in units of the polytope scale.
pub const VERTEX_TOLERANCE: f64 = 1e-7;
const SINGULAR_DET: f64 = 1e-10;

/// `{x : normal·x ≤ offset}` with a unit normal.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfSpace {
    normal: DVector<f64>,
    offset: f64,
}

impl HalfSpace {
    /// Normalizes `normal` to unit length (scaling `offset` accordingly).
    pub fn new(normal: DVector<f64>, offset: f64) -> Result<Self> {
        let len = normal.norm();
        if !(len > 0.0) || !len.is_finite() || !offset.is_finite() {
            return Err(Error::InvalidInput(
                "half-space needs a nonzero finite normal and finite offset".into(),
            ));
        }
        Ok(Self {
            normal: normal / len,
            offset: offset / len,
        })
    }

    pub fn normal(&self) -> &DVector<f64> {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Signed slack `offset − normal·x` (non-negative inside).
    pub fn slack(&self, x: &DVector<f64>) -> f64 {
        self.offset - self.normal.dot(x)
    }
}

#[derive(Clone, Debug)]
pub struct Facet {
    pub halfspace: HalfSpace,
    /// Sorted indices into [`Polytope::vertices`].
    pub vertices: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct Polytope {
    dim: usize,
    vertices: Vec<DVector<f64>>,
    facets: Vec<Facet>,
    tolerance: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FacetFile {
    pub normal: Vec<f64>,
    pub offset: f64,
    pub vertices: Vec<usize>,
}

/// JSON export layout.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolytopeFile {
    pub vertices: Vec<Vec<f64>>,
    pub facets: Vec<FacetFile>,
}

/// Intersects half-spaces into a bounded polytope with full incidence data.
pub fn halfspace_intersection(halfspaces: &[HalfSpace]) -> Result<Polytope> {
    let Some(first) = halfspaces.first() else {
        return Err(Error::Unbounded);
    };
    let n = first.normal.len();
    if halfspaces.iter().any(|h| h.normal.len() != n) {
        return Err(Error::DimensionMismatch("half-spaces of mixed dimension".into()));
    }
    if n > MAX_VERTEX_ENUM_DIM && halfspaces.len() > MAX_HALFSPACES {
        return Err(Error::TooManyHalfSpaces {
            count: halfspaces.len(),
            dim: n,
        });
    }
    let a = DMatrix::from_fn(halfspaces.len(), n, |i, j| halfspaces[i].normal[j]);
    let b = DVector::from_iterator(halfspaces.len(), halfspaces.iter().map(|h| h.offset));
    for j in 0..n {
        for sign in [1.0, -1.0] {
            let mut c = DVector::zeros(n);
            c[j] = sign;
            match lp::maximize(&c, &a, &b) {
                LpOutcome::Optimal { .. } => {}
                LpOutcome::Unbounded => return Err(Error::Unbounded),
                LpOutcome::Infeasible => return Err(Error::EmptyInterior),
            }
        }
    }
    let (radius, _) = chebyshev(&a, &b)?;
    if !(radius > 0.0) {
        return Err(Error::EmptyInterior);
    }
    let tol = VERTEX_TOLERANCE * 2.0 * radius;

    let mut vertices: Vec<DVector<f64>> = Vec::new();
    for subset in Combinations::new(halfspaces.len(), n) {
        let m = DMatrix::from_fn(n, n, |i, j| halfspaces[subset[i]].normal[j]);
        let lu = m.clone().lu();
        if lu.determinant().abs() < SINGULAR_DET {
            continue;
        }
        let rhs = DVector::from_iterator(n, subset.iter().map(|&i| halfspaces[i].offset));
        let Some(x) = lu.solve(&rhs) else { continue };
        if halfspaces.iter().any(|h| h.slack(&x) < -tol) {
            continue;
        }
        if !vertices.iter().any(|v| (v - &x).norm() <= tol) {
            vertices.push(x);
        }
    }

    let mut facets: Vec<Facet> = Vec::new();
    let mut seen: BTreeSet<Vec<usize>> = BTreeSet::new();
    for h in halfspaces {
        let incident: Vec<usize> = (0..vertices.len())
            .filter(|&i| h.slack(&vertices[i]).abs() <= tol)
            .collect();
        if incident.len() < n {
            continue;
        }
        let pts: Vec<&DVector<f64>> = incident.iter().map(|&i| &vertices[i]).collect();
        if linalg::affine_rank(&pts, tol) != n - 1 {
            continue;
        }
        if seen.insert(incident.clone()) {
            facets.push(Facet {
                halfspace: h.clone(),
                vertices: incident,
            });
        }
    }
    if facets.len() < n + 1 {
        return Err(Error::DegenerateFacet(format!(
            "only {} facets recovered in dimension {n}",
            facets.len()
        )));
    }
    Ok(Polytope {
        dim: n,
        vertices,
        facets,
        tolerance: tol,
    })
}

fn chebyshev(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
    let (m, n) = (a.nrows(), a.ncols());
    let mut aa = DMatrix::zeros(m + 1, n + 1);
    let mut bb = DVector::zeros(m + 1);
    for i in 0..m {
        let norm = a.row(i).norm();
        for j in 0..n {
            aa[(i, j)] = a[(i, j)];
        }
        aa[(i, n)] = norm;
        bb[i] = b[i];
    }
    aa[(m, n)] = -1.0;
    let mut c = DVector::zeros(n + 1);
    c[n] = 1.0;
    match lp::maximize(&c, &aa, &bb) {
        LpOutcome::Optimal { x, value } => Ok((value, x.rows(0, n).into_owned())),
        LpOutcome::Unbounded => Err(Error::LpFailure("Chebyshev program unbounded".into())),
        LpOutcome::Infeasible => Err(Error::LpFailure("Chebyshev program infeasible".into())),
    }
}

impl Polytope {
    /// Rebuilds a polytope from exported parts, validating incidence.
    pub fn from_parts(vertices: Vec<DVector<f64>>, facets: Vec<Facet>) -> Result<Self> {
        let dim = vertices
            .first()
            .map(|v| v.len())
            .ok_or_else(|| Error::InvalidInput("polytope without vertices".into()))?;
        let a = DMatrix::from_fn(facets.len(), dim, |i, j| facets[i].halfspace.normal[j]);
        let b = DVector::from_iterator(facets.len(), facets.iter().map(|f| f.halfspace.offset));
        let (radius, _) = chebyshev(&a, &b)?;
        let tolerance = VERTEX_TOLERANCE * 2.0 * radius;
        for f in &facets {
            if f.halfspace.normal.len() != dim || f.vertices.iter().any(|&i| i >= vertices.len()) {
                return Err(Error::InvalidInput("facet references are inconsistent".into()));
            }
            for v in &vertices {
                if f.halfspace.slack(v) < -tolerance * 10.0 {
                    return Err(Error::InvalidInput("vertex violates a facet".into()));
                }
            }
        }
        Ok(Self {
            dim,
            vertices,
            facets,
            tolerance,
        })
    }

    pub fn from_file(file: &PolytopeFile) -> Result<Self> {
        let vertices: Vec<DVector<f64>> = file
            .vertices
            .iter()
            .map(|v| DVector::from_column_slice(v))
            .collect();
        let facets = file
            .facets
            .iter()
            .map(|f| {
                let normal = DVector::from_column_slice(&f.normal);
                let norm = normal.norm();
                if (norm - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidInput(format!("facet normal has norm {norm}")));
                }
                Ok(Facet {
                    halfspace: HalfSpace {
                        normal,
                        offset: f.offset,
                    },
                    vertices: f.vertices.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(vertices, facets)
    }

    pub fn to_file(&self) -> PolytopeFile {
        PolytopeFile {
            vertices: self.vertices.iter().map(|v| v.iter().copied().collect()).collect(),
            facets: self
                .facets
                .iter()
                .map(|f| FacetFile {
                    normal: f.halfspace.normal.iter().copied().collect(),
                    offset: f.halfspace.offset,
                    vertices: f.vertices.clone(),
                })
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[DVector<f64>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Facet] {
        &self.facets
    }

    /// Absolute tolerance used for incidence tests on this polytope.
    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    pub fn halfspaces(&self) -> Vec<HalfSpace> {
        self.facets.iter().map(|f| f.halfspace.clone()).collect()
    }

    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.facets.iter().all(|f| f.halfspace.slack(x) >= -tol)
    }

    /// Largest vertex norm (distance from the origin).
    pub fn circumradius(&self) -> f64 {
        self.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn centroid_of_vertices(&self) -> DVector<f64> {
        let refs: Vec<&DVector<f64>> = self.vertices.iter().collect();
        linalg::centroid(&refs)
    }

    pub fn bounding_box(&self) -> (DVector<f64>, DVector<f64>) {
        let mut lo = self.vertices[0].clone();
        let mut hi = self.vertices[0].clone();
        for v in &self.vertices {
            for i in 0..self.dim {
                lo[i] = lo[i].min(v[i]);
                hi[i] = hi[i].max(v[i]);
            }
        }
        (lo, hi)
    }

    /// Smallest ball around the vertex centroid containing every vertex.
    pub fn bounding_ball(&self) -> (DVector<f64>, f64) {
        let c = self.centroid_of_vertices();
        let r = self.vertices.iter().map(|v| (v - &c).norm()).fold(0.0, f64::max);
        (c, r)
    }

    /// Uniform sample by rejection from the bounding box.
    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        let (lo, hi) = self.bounding_box();
        loop {
            let x = DVector::from_fn(self.dim, |i, _| lo[i] + (hi[i] - lo[i]) * rng.random::<f64>());
            if self.contains(&x, 0.0) {
                return x;
            }
        }
    }

    pub fn is_centrally_symmetric(&self, tol: f64) -> bool {
        self.vertices
            .iter()
            .all(|v| self.vertices.iter().any(|w| (v + w).norm() <= tol))
    }

    /// Vertex-index sets of all k-faces, for k in 0..dim (index = k).
    pub fn face_lattice(&self) -> Vec<Vec<Vec<usize>>> {
        let n = self.dim;
        let rank_tol = self.rank_tolerance();
        let mut levels: Vec<Vec<Vec<usize>>> = vec![Vec::new(); n];
        levels[n - 1] = self.facets.iter().map(|f| f.vertices.clone()).collect();
        for k in (0..n - 1).rev() {
            let mut found: BTreeSet<Vec<usize>> = BTreeSet::new();
            for face in &levels[k + 1] {
                for facet in &self.facets {
                    let inter = intersect_sorted(face, &facet.vertices);
                    if inter.len() < k + 1 || inter.len() == face.len() {
                        continue;
                    }
                    let pts: Vec<&DVector<f64>> = inter.iter().map(|&i| &self.vertices[i]).collect();
                    if linalg::affine_rank(&pts, rank_tol) == k {
                        found.insert(inter);
                    }
                }
            }
            levels[k] = found.into_iter().collect();
        }
        levels
    }

    pub fn faces(&self, k: usize) -> Vec<Vec<usize>> {
        assert!(k < self.dim, "face dimension {k} out of range");
        if k == self.dim - 1 {
            return self.facets.iter().map(|f| f.vertices.clone()).collect();
        }
        self.face_lattice().swap_remove(k)
    }

    fn rank_tolerance(&self) -> f64 {
        self.tolerance
    }

    /// k-dimensional measure of a k-face given by its vertex indices.
    pub fn face_measure(&self, face: &[usize], k: usize) -> Result<f64> {
        match k {
            0 => Ok(1.0),
            1 => {
                let mut best: f64 = 0.0;
                for (a, &i) in face.iter().enumerate() {
                    for &j in &face[a + 1..] {
                        best = best.max((&self.vertices[i] - &self.vertices[j]).norm());
                    }
                }
                Ok(best)
            }
            _ => {
                let rank_tol = self.rank_tolerance();
                let pts: Vec<&DVector<f64>> = face.iter().map(|&i| &self.vertices[i]).collect();
                let c = linalg::centroid(&pts);
                let mut ridges: BTreeSet<Vec<usize>> = BTreeSet::new();
                for facet in &self.facets {
                    let inter = intersect_sorted(face, &facet.vertices);
                    if inter.len() < k || inter.len() == face.len() {
                        continue;
                    }
                    let rp: Vec<&DVector<f64>> = inter.iter().map(|&i| &self.vertices[i]).collect();
                    if linalg::affine_rank(&rp, rank_tol) == k - 1 {
                        ridges.insert(inter);
                    }
                }
                if ridges.len() < k + 1 {
                    return Err(Error::DegenerateFacet(format!(
                        "{k}-face with only {} ridges",
                        ridges.len()
                    )));
                }
                let mut total = 0.0;
                for ridge in &ridges {
                    let rp: Vec<&DVector<f64>> = ridge.iter().map(|&i| &self.vertices[i]).collect();
                    let h = linalg::distance_to_affine_hull(&c, &rp, rank_tol);
                    total += h * self.face_measure(ridge, k - 1)?;
                }
                let measure = total / k as f64;
                if !measure.is_finite() {
                    return Err(Error::DegenerateFacet("non-finite face measure".into()));
                }
                Ok(measure)
            }
        }
    }

    pub fn facet_area(&self, index: usize) -> Result<f64> {
        self.face_measure(&self.facets[index].vertices, self.dim - 1)
    }

    /// Sum of facet (N−1)-measures.
    pub fn surface_area(&self) -> Result<f64> {
        (0..self.facets.len()).map(|i| self.facet_area(i)).sum()
    }

    /// Pyramid decomposition from the vertex centroid.
    pub fn volume(&self) -> Result<f64> {
        let c = self.centroid_of_vertices();
        let mut total = 0.0;
        for i in 0..self.facets.len() {
            let h = self.facets[i].halfspace.slack(&c);
            total += h * self.facet_area(i)?;
        }
        Ok(total / self.dim as f64)
    }

    /// Largest inscribed ball (radius, center) via linear programming.
    pub fn chebyshev_inradius(&self) -> Result<(f64, DVector<f64>)> {
        let a = DMatrix::from_fn(self.facets.len(), self.dim, |i, j| {
            self.facets[i].halfspace.normal[j]
        });
        let b = DVector::from_iterator(self.facets.len(), self.facets.iter().map(|f| f.halfspace.offset));
        chebyshev(&a, &b)
    }

    /// `x ↦ scale·x + translation`.
    pub fn transform(&self, scale: f64, translation: &DVector<f64>) -> Result<Polytope> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidInput(format!("scale must be > 0, got {scale}")));
        }
        if translation.len() != self.dim {
            return Err(Error::DimensionMismatch("translation length".into()));
        }
        Ok(Polytope {
            dim: self.dim,
            vertices: self.vertices.iter().map(|v| v * scale + translation).collect(),
            facets: self
                .facets
                .iter()
                .map(|f| Facet {
                    halfspace: HalfSpace {
                        normal: f.halfspace.normal.clone(),
                        offset: scale * f.halfspace.offset + f.halfspace.normal.dot(translation),
                    },
                    vertices: f.vertices.clone(),
                })
                .collect(),
            tolerance: self.tolerance * scale,
        })
    }

    pub fn scaled(&self, scale: f64) -> Result<Polytope> {
        self.transform(scale, &DVector::zeros(self.dim))
    }

    /// Facet vertex indices ordered counter-clockwise seen from outside (dim 3).
    pub fn ordered_facet_cycle(&self, index: usize) -> Vec<usize> {
        let f = &self.facets[index];
        let nrm = nalgebra::Vector3::new(
            f.halfspace.normal[0],
            f.halfspace.normal[1],
            f.halfspace.normal[2],
        );
        let pts: Vec<&DVector<f64>> = f.vertices.iter().map(|&i| &self.vertices[i]).collect();
        let c = linalg::centroid(&pts);
        let seed = if nrm.x.abs() < 0.9 {
            nalgebra::Vector3::x()
        } else {
            nalgebra::Vector3::y()
        };
        let u = (seed - nrm * nrm.dot(&seed)).normalize();
        let w = nrm.cross(&u);
        let mut order: Vec<(f64, usize)> = f
            .vertices
            .iter()
            .map(|&i| {
                let d = &self.vertices[i] - &c;
                let d3 = nalgebra::Vector3::new(d[0], d[1], d[2]);
                (d3.dot(&w).atan2(d3.dot(&u)), i)
            })
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0));
        order.into_iter().map(|(_, i)| i).collect()
    }

    /// Object File Format mesh (dimension 3 only).
    pub fn to_off(&self) -> Result<String> {
        if self.dim != 3 {
            return Err(Error::UnsupportedFormatForDim {
                format: "off".into(),
                dim: self.dim,
            });
        }
        let mut out = String::new();
        let edges = self.faces(1).len();
        writeln!(out, "OFF").unwrap();
        writeln!(out, "{} {} {}", self.vertices.len(), self.facets.len(), edges).unwrap();
        for v in &self.vertices {
            writeln!(out, "{} {} {}", fmt12(v[0]), fmt12(v[1]), fmt12(v[2])).unwrap();
        }
        for i in 0..self.facets.len() {
            let cycle = self.ordered_facet_cycle(i);
            let ids: Vec<String> = cycle.iter().map(|i| i.to_string()).collect();
            writeln!(out, "{} {}", cycle.len(), ids.join(" ")).unwrap();
        }
        Ok(out)
    }
}

/// Formats with 12 significant digits.
pub fn fmt12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let v: f64 = format!("{:.11e}", x).parse().unwrap_or(x);
    let exp = v.abs().log10().floor();
    if (-5.0..15.0).contains(&exp) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn intersect_sorted(a: &[usize], b: &[usize]) -> Vec<usize> {
    let (mut i, mut j) = (0, 0);
    let mut out = Vec::new();
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Lexicographic k-subsets of 0..n.
struct Combinations {
    n: usize,
    idx: Vec<usize>,
    done: bool,
}

impl Combinations {
    fn new(n: usize, k: usize) -> Self {
        Self {
            n,
            idx: (0..k).collect(),
            done: k > n || k == 0,
        }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let out = self.idx.clone();
        let k = self.idx.len();
        let mut i = k;
        loop {
            if i == 0 {
                self.done = true;
                break;
            }
            i -= 1;
            if self.idx[i] < self.n - k + i {
                self.idx[i] += 1;
                for j in i + 1..k {
                    self.idx[j] = self.idx[j - 1] + 1;
                }
                break;
            }
        }
        Some(out)
    }
}
