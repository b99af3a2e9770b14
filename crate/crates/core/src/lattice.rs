//! Full-rank lattices in R^N: construction, catalog, invariants, short-vector
//! enumeration, pairwise basis reduction and Voronoi-relevant vectors.
//!
//! A lattice is stored by a basis matrix whose *columns* are the generators.
//! Enumeration always runs on a pairwise-reduced copy of the basis and maps
//! coefficients back to the caller's basis, so every reported coefficient
//! vector is expressed in the basis the lattice was built from.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maximum number of enumeration nodes before giving up.
pub const ENUMERATION_BUDGET: u64 = 10_000_000;
/// Largest dimension accepted by the enumeration-based operations.
pub const MAX_ENUMERATION_DIM: usize = 8;
/// Relative tolerance used to decide that two lattice-vector norms tie.
pub const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct Lattice {
    basis: DMatrix<f64>,
    gram: DMatrix<f64>,
    determinant: f64,
}

/// A nonzero lattice vector with its coefficients in the lattice basis.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShortVector {
    pub coeffs: Vec<i64>,
    pub vector: Vec<f64>,
    pub norm: f64,
}

impl ShortVector {
    pub fn as_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.vector)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ShortVectorSet {
    pub radius: f64,
    pub vectors: Vec<ShortVector>,
}

impl ShortVectorSet {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn norms(&self) -> Vec<f64> {
        self.vectors.iter().map(|v| v.norm).collect()
    }
}

/// Result of [`Lattice::reduce_basis`].
#[derive(Clone, Debug)]
pub struct Reduction {
    pub lattice: Lattice,
    /// Π|v_i| / d(G) for the reduced generators.
    pub product_ratio: f64,
    /// Integer change of basis: `reduced = original * transform`.
    pub transform: DMatrix<i64>,
}

/// On-disk representation: each inner array is one generator.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LatticeFile {
    pub dim: usize,
    pub basis: Vec<Vec<f64>>,
}

impl Lattice {
    /// Builds a lattice from a square basis matrix whose columns are generators.
    pub fn new(basis: DMatrix<f64>) -> Result<Self> {
        let n = basis.nrows();
        if n == 0 || basis.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "basis must be square, got {}x{}",
                basis.nrows(),
                basis.ncols()
            )));
        }
        if basis.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("basis has non-finite entries".into()));
        }
        let max_col = (0..n)
            .map(|j| basis.column(j).norm())
            .fold(0.0_f64, f64::max);
        let det = basis.determinant();
        let threshold = 1e-10 * max_col.powi(n as i32);
        if !(det.abs() >= threshold) || det == 0.0 {
            return Err(Error::SingularBasis {
                det: det.abs(),
                threshold,
            });
        }
        let gram = basis.transpose() * &basis;
        Ok(Self {
            basis,
            gram,
            determinant: det.abs(),
        })
    }

    /// Builds a lattice from a list of generator vectors.
    pub fn from_generators(generators: &[Vec<f64>]) -> Result<Self> {
        let n = generators.len();
        if generators.iter().any(|g| g.len() != n) {
            return Err(Error::InvalidInput(format!(
                "need {n} generators of length {n}"
            )));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| generators[j][i]))
    }

    pub fn from_file(file: &LatticeFile) -> Result<Self> {
        if file.basis.len() != file.dim {
            return Err(Error::DimensionMismatch(format!(
                "dim = {} but {} generators given",
                file.dim,
                file.basis.len()
            )));
        }
        Self::from_generators(&file.basis)
    }

    pub fn to_file(&self) -> LatticeFile {
        LatticeFile {
            dim: self.dim(),
            basis: self.generators().iter().map(|g| g.iter().copied().collect()).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn generators(&self) -> Vec<DVector<f64>> {
        (0..self.dim()).map(|j| self.basis.column(j).into_owned()).collect()
    }

    /// d(G) = |det(basis)|.
    pub fn determinant(&self) -> f64 {
        self.determinant
    }

    pub fn point(&self, coeffs: &[i64]) -> DVector<f64> {
        let k = DVector::from_iterator(coeffs.len(), coeffs.iter().map(|&c| c as f64));
        &self.basis * k
    }

    pub fn scaled(&self, factor: f64) -> Result<Lattice> {
        Lattice::new(&self.basis * factor)
    }

    /// Applies a linear map to every lattice point (rotations, shears).
    pub fn transformed(&self, map: &DMatrix<f64>) -> Result<Lattice> {
        if map.nrows() != self.dim() || map.ncols() != self.dim() {
            return Err(Error::DimensionMismatch("transform must be N x N".into()));
        }
        Lattice::new(map * &self.basis)
    }

    /// Spectral condition number of the Gram matrix.
    pub fn gram_condition(&self) -> f64 {
        let eig = self.gram.clone().symmetric_eigenvalues();
        let max = eig.iter().copied().fold(f64::MIN, f64::max);
        let min = eig.iter().copied().fold(f64::MAX, f64::min);
        if min <= 0.0 {
            f64::INFINITY
        } else {
            max / min
        }
    }

    /// Greedy pairwise (Lagrange-style) reduction. Each accepted step strictly
    /// shortens one generator, so Π|v_i| never increases.
    pub fn reduce_basis(&self) -> Reduction {
        let (basis, transform) = pairwise_reduce(&self.basis);
        let product: f64 = (0..self.dim()).map(|j| basis.column(j).norm()).product();
        let determinant = self.determinant;
        let gram = basis.transpose() * &basis;
        Reduction {
            lattice: Lattice {
                basis,
                gram,
                determinant,
            },
            product_ratio: product / determinant,
            transform,
        }
    }

    fn enumerator(&self) -> Result<Enumerator> {
        Enumerator::new(self)
    }

    /// All nonzero lattice vectors of norm at most `radius`.
    pub fn short_vectors(&self, radius: f64) -> Result<ShortVectorSet> {
        self.check_enum_dim("short_vectors")?;
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidInput(format!("radius must be > 0, got {radius}")));
        }
        let en = self.enumerator()?;
        let mut vectors = en.ball(None, radius)?;
        vectors.retain(|v| v.norm > 0.0);
        sort_vectors(&mut vectors);
        Ok(ShortVectorSet { radius, vectors })
    }

    /// λ(G): the smallest norm of a nonzero lattice vector.
    pub fn minimal_norm(&self) -> Result<f64> {
        let en = self.enumerator()?;
        let bound = (0..self.dim())
            .map(|j| en.reduced.column(j).norm())
            .fold(f64::MAX, f64::min);
        let vectors = en.ball(None, bound)?;
        vectors
            .iter()
            .map(|v| v.norm)
            .filter(|&n| n > 0.0)
            .min_by(f64::total_cmp)
            .ok_or_else(|| Error::InvalidInput("no nonzero vector found".into()))
    }

    /// ρ_G = λ(G)/2.
    pub fn inradius(&self) -> Result<f64> {
        Ok(self.minimal_norm()? / 2.0)
    }

    /// Facet-defining vectors of the Voronoi cell: v is relevant iff ±v are
    /// the only shortest vectors of the coset v + 2G.
    pub fn relevant_vectors(&self) -> Result<ShortVectorSet> {
        self.check_enum_dim("relevant_vectors")?;
        let n = self.dim();
        let cosets = (1usize << n) - 1;
        let en = self.enumerator()?;
        let lambda = self.minimal_norm()?;
        let mut radius = lambda * 1.5;
        loop {
            let vectors = en.ball(None, radius)?;
            let mut groups: BTreeMap<usize, Vec<ShortVector>> = BTreeMap::new();
            for v in vectors.into_iter().filter(|v| v.norm > 0.0) {
                let mask = en.parity_mask(&v);
                if mask != 0 {
                    groups.entry(mask).or_default().push(v);
                }
            }
            if groups.len() == cosets {
                let worst = groups
                    .values()
                    .map(|g| g.iter().map(|v| v.norm).fold(f64::MAX, f64::min))
                    .fold(0.0_f64, f64::max);
                let needed = worst * (1.0 + 10.0 * TIE_TOLERANCE);
                if needed > radius {
                    radius = needed;
                    continue;
                }
                let mut relevant = Vec::new();
                let mut max_norm: f64 = 0.0;
                for group in groups.into_values() {
                    let min = group.iter().map(|v| v.norm).fold(f64::MAX, f64::min);
                    let minimal: Vec<ShortVector> = group
                        .into_iter()
                        .filter(|v| v.norm <= min * (1.0 + TIE_TOLERANCE))
                        .collect();
                    if minimal.len() == 2 {
                        max_norm = max_norm.max(min);
                        relevant.extend(minimal);
                    }
                }
                sort_vectors(&mut relevant);
                return Ok(ShortVectorSet {
                    radius: max_norm,
                    vectors: relevant,
                });
            }
            radius *= 1.3;
        }
    }

    /// r_G as the largest vertex norm of the Voronoi cell (exact mode, dim ≤ 4).
    pub fn covering_radius(&self) -> Result<f64> {
        if self.dim() > crate::polytope::MAX_VERTEX_ENUM_DIM {
            return Err(Error::DimensionTooLarge {
                operation: "covering_radius",
                dim: self.dim(),
                max: crate::polytope::MAX_VERTEX_ENUM_DIM,
            });
        }
        let cell = crate::voronoi::voronoi_cell(self)?;
        Ok(cell.circumradius())
    }

    /// All lattice points at minimal distance from `p` (ties at 1e-9·λ).
    pub fn closest_points(&self, p: &DVector<f64>) -> Result<Vec<ShortVector>> {
        self.check_enum_dim("cells_at_point")?;
        if p.len() != self.dim() || p.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput("point must be finite and match the dimension".into()));
        }
        let en = self.enumerator()?;
        let babai = en.babai(p);
        let d0 = (babai - p).norm();
        let lambda = self.minimal_norm()?;
        let tie = TIE_TOLERANCE * lambda;
        let mut found = en.ball(Some(p), d0 + 2.0 * tie)?;
        for v in &mut found {
            v.norm = (v.as_dvector() - p).norm();
        }
        let min = found.iter().map(|v| v.norm).fold(f64::MAX, f64::min);
        found.retain(|v| v.norm <= min + tie);
        sort_vectors(&mut found);
        Ok(found)
    }

    /// All lattice points within `radius` of `center` (norm field holds the distance).
    pub fn points_near(&self, center: &DVector<f64>, radius: f64) -> Result<Vec<ShortVector>> {
        let en = self.enumerator()?;
        let mut found = en.ball(Some(center), radius)?;
        for v in &mut found {
            v.norm = (v.as_dvector() - center).norm();
        }
        Ok(found)
    }

    /// One-sided equivalence certificate up to rotation and scale: compares
    /// normalized determinants, the norm spectrum up to 2λ and the multiset
    /// of inner products among minimal vectors.
    pub fn is_equivalent(&self, other: &Lattice, tol: f64) -> Result<bool> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        let n = self.dim() as i32;
        let (la, lb) = (self.minimal_norm()?, other.minimal_norm()?);
        let (da, db) = (self.determinant / la.powi(n), other.determinant / lb.powi(n));
        if (da - db).abs() > tol * da.max(db) {
            return Ok(false);
        }
        let spec_a = self.short_vectors(la * (2.0 + tol))?;
        let spec_b = other.short_vectors(lb * (2.0 + tol))?;
        let a: Vec<f64> = spec_a.norms().iter().map(|x| x / la).collect();
        let b: Vec<f64> = spec_b.norms().iter().map(|x| x / lb).collect();
        if !spectra_match(&a, &b, tol) {
            return Ok(false);
        }
        let ia = minimal_inner_products(&spec_a, la, tol);
        let ib = minimal_inner_products(&spec_b, lb, tol);
        if ia.len() != ib.len() {
            return Ok(false);
        }
        Ok(ia.iter().zip(&ib).all(|(x, y)| (x - y).abs() <= tol))
    }

    fn check_enum_dim(&self, operation: &'static str) -> Result<()> {
        if self.dim() > MAX_ENUMERATION_DIM {
            return Err(Error::DimensionTooLarge {
                operation,
                dim: self.dim(),
                max: MAX_ENUMERATION_DIM,
            });
        }
        Ok(())
    }
}

fn spectra_match(a: &[f64], b: &[f64], tol: f64) -> bool {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    // Entries near the cutoff 2 may be present in one list and not the other.
    while a.len() > b.len() && a.last().is_some_and(|&x| x > 2.0 - tol) {
        a.pop();
    }
    while b.len() > a.len() && b.last().is_some_and(|&x| x > 2.0 - tol) {
        b.pop();
    }
    a.len() == b.len() && a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= tol)
}

fn minimal_inner_products(set: &ShortVectorSet, lambda: f64, tol: f64) -> Vec<f64> {
    let minimal: Vec<DVector<f64>> = set
        .vectors
        .iter()
        .filter(|v| v.norm <= lambda * (1.0 + tol))
        .map(|v| v.as_dvector() / lambda)
        .collect();
    let mut out = Vec::new();
    for i in 0..minimal.len() {
        for j in i + 1..minimal.len() {
            out.push(minimal[i].dot(&minimal[j]));
        }
    }
    out.sort_by(f64::total_cmp);
    out
}

fn sort_vectors(v: &mut [ShortVector]) {
    v.sort_by(|a, b| {
        a.norm
            .total_cmp(&b.norm)
            .then_with(|| a.coeffs.cmp(&b.coeffs))
    });
}

fn pairwise_reduce(basis: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<i64>) {
    let n = basis.nrows();
    let mut b = basis.clone();
    let mut u = DMatrix::<i64>::identity(n, n);
    for _ in 0..10_000 {
        // Sort generators by norm, keeping the transform in sync.
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| b.column(i).norm_squared().total_cmp(&b.column(j).norm_squared()));
        b = DMatrix::from_fn(n, n, |r, c| b[(r, order[c])]);
        u = DMatrix::from_fn(n, n, |r, c| u[(r, order[c])]);

        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let bj2 = b.column(j).norm_squared();
                let q = (b.column(i).dot(&b.column(j)) / bj2).round();
                if q == 0.0 {
                    continue;
                }
                let candidate = b.column(i) - b.column(j) * q;
                if candidate.norm_squared() < b.column(i).norm_squared() * (1.0 - 1e-12) {
                    b.set_column(i, &candidate);
                    let qi = q as i64;
                    let uj = u.column(j).into_owned();
                    for r in 0..n {
                        u[(r, i)] -= qi * uj[r];
                    }
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    (b, u)
}

/// Fincke–Pohst enumeration over a reduced basis.
struct Enumerator {
    reduced: DMatrix<f64>,
    reduced_inv: DMatrix<f64>,
    transform: DMatrix<i64>,
    /// Upper-triangular factor with reduced Gram = Rᵀ R.
    r: DMatrix<f64>,
}

impl Enumerator {
    fn new(lattice: &Lattice) -> Result<Self> {
        let (reduced, transform) = pairwise_reduce(&lattice.basis);
        let gram = reduced.transpose() * &reduced;
        let chol = gram
            .cholesky()
            .ok_or_else(|| Error::InvalidInput("Gram matrix is not positive definite".into()))?;
        let r = chol.l().transpose();
        let reduced_inv = reduced
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::InvalidInput("reduced basis is singular".into()))?;
        Ok(Self {
            reduced,
            reduced_inv,
            transform,
            r,
        })
    }

    fn dim(&self) -> usize {
        self.reduced.nrows()
    }

    fn babai(&self, p: &DVector<f64>) -> DVector<f64> {
        let t = &self.reduced_inv * p;
        let k = t.map(|x| x.round());
        &self.reduced * k
    }

    /// Parity class in (Z/2)^N; basis-independent as a coset of 2G.
    fn parity_mask(&self, v: &ShortVector) -> usize {
        // Original coefficients are an integer unimodular image of the reduced ones,
        // so parities of either set identify the same coset.
        v.coeffs
            .iter()
            .enumerate()
            .fold(0usize, |m, (i, c)| m | (((c & 1) as usize) << i))
    }

    /// Lattice points within `radius` of `center` (origin when `None`),
    /// including the origin itself when it qualifies.
    fn ball(&self, center: Option<&DVector<f64>>, radius: f64) -> Result<Vec<ShortVector>> {
        let n = self.dim();
        let t = match center {
            Some(c) => &self.reduced_inv * c,
            None => DVector::zeros(n),
        };
        let slack = radius * (1.0 + TIE_TOLERANCE) + 1e-300;
        let r2 = slack * slack;
        let mut k = vec![0i64; n];
        let mut out = Vec::new();
        let mut nodes = 0u64;
        self.recurse(n - 1, 0.0, r2, &t, &mut k, &mut nodes, &mut |k| {
            let kv = DVector::from_iterator(n, k.iter().map(|&c| c as f64));
            let vector = &self.reduced * &kv;
            let dist = match center {
                Some(c) => (&vector - c).norm(),
                None => vector.norm(),
            };
            if dist <= slack {
                let orig = &self.transform * DVector::from_column_slice(k);
                out.push(ShortVector {
                    coeffs: orig.iter().copied().collect(),
                    norm: vector.norm(),
                    vector: vector.iter().copied().collect(),
                });
            }
        })?;
        Ok(out)
    }

    #[allow(clippy::too_many_arguments)]
    fn recurse(
        &self,
        level: usize,
        partial: f64,
        r2: f64,
        t: &DVector<f64>,
        k: &mut [i64],
        nodes: &mut u64,
        visit: &mut dyn FnMut(&[i64]),
    ) -> Result<()> {
        let n = self.dim();
        let rll = self.r[(level, level)];
        let mut c = t[level];
        for j in level + 1..n {
            c -= self.r[(level, j)] / rll * (k[j] as f64 - t[j]);
        }
        let rem = r2 - partial;
        if rem < 0.0 {
            return Ok(());
        }
        let w = rem.sqrt() / rll.abs();
        let lo = (c - w).ceil() as i64;
        let hi = (c + w).floor() as i64;
        for ki in lo..=hi {
            *nodes += 1;
            if *nodes > ENUMERATION_BUDGET {
                return Err(Error::EnumerationBudgetExceeded {
                    budget: ENUMERATION_BUDGET,
                });
            }
            k[level] = ki;
            let d = rll * (ki as f64 - c);
            let next = partial + d * d;
            if next > r2 {
                continue;
            }
            if level == 0 {
                visit(k);
            } else {
                self.recurse(level - 1, next, r2, t, k, nodes, visit)?;
            }
        }
        k[level] = 0;
        Ok(())
    }
}

/// Named lattices with published invariants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CatalogName {
    Z,
    A,
    Astar,
    D,
    Dplus,
    E8,
    Hex,
    Fcc,
    Bcc,
}

impl CatalogName {
    pub const ALL: [CatalogName; 9] = [
        CatalogName::Z,
        CatalogName::A,
        CatalogName::Astar,
        CatalogName::D,
        CatalogName::Dplus,
        CatalogName::E8,
        CatalogName::Hex,
        CatalogName::Fcc,
        CatalogName::Bcc,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            CatalogName::Z => "z",
            CatalogName::A => "a",
            CatalogName::Astar => "astar",
            CatalogName::D => "d",
            CatalogName::Dplus => "dplus",
            CatalogName::E8 => "e8",
            CatalogName::Hex => "hex",
            CatalogName::Fcc => "fcc",
            CatalogName::Bcc => "bcc",
        }
    }

    /// Dimension forced by the name, if any.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            CatalogName::E8 => Some(8),
            CatalogName::Hex => Some(2),
            CatalogName::Fcc | CatalogName::Bcc => Some(3),
            _ => None,
        }
    }
}

impl fmt::Display for CatalogName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CatalogName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CatalogName::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::UnknownCatalogEntry(s.to_string()))
    }
}

/// Builds a catalog lattice in the given dimension.
pub fn catalog(name: CatalogName, dim: usize) -> Result<Lattice> {
    if let Some(fixed) = name.fixed_dim() {
        if dim != fixed {
            return Err(Error::DimensionMismatch(format!(
                "{name} requires dim {fixed}, got {dim}"
            )));
        }
    }
    if dim < 2 {
        return Err(Error::DimensionMismatch(format!("{name} requires dim >= 2, got {dim}")));
    }
    let n = dim;
    match name {
        CatalogName::Z => Lattice::new(DMatrix::identity(n, n)),
        CatalogName::Hex => {
            Lattice::from_generators(&[vec![1.0, 0.0], vec![-0.5, 3f64.sqrt() / 2.0]])
        }
        CatalogName::Fcc => Lattice::from_generators(&[
            vec![-1.0, -1.0, 0.0],
            vec![1.0, -1.0, 0.0],
            vec![0.0, 1.0, -1.0],
        ]),
        CatalogName::Bcc => Lattice::from_generators(&[
            vec![2.0, 0.0, 0.0],
            vec![0.0, 2.0, 0.0],
            vec![1.0, 1.0, 1.0],
        ]),
        CatalogName::A => Lattice::new(root_lattice_a(n)),
        CatalogName::Astar => {
            let a = root_lattice_a(n);
            let dual = a
                .try_inverse()
                .ok_or_else(|| Error::InvalidInput("A_N basis singular".into()))?
                .transpose();
            Lattice::new(dual)
        }
        CatalogName::D => {
            let mut gens = Vec::with_capacity(n);
            for i in 0..n - 1 {
                let mut v = vec![0.0; n];
                v[i] = 1.0;
                v[i + 1] = -1.0;
                gens.push(v);
            }
            let mut last = vec![0.0; n];
            last[n - 2] = 1.0;
            last[n - 1] = 1.0;
            gens.push(last);
            Lattice::from_generators(&gens)
        }
        CatalogName::Dplus | CatalogName::E8 => {
            if n < 8 || n % 2 != 0 {
                return Err(Error::DimensionMismatch(format!(
                    "dplus requires an even dim >= 8, got {n}"
                )));
            }
            let mut gens = Vec::with_capacity(n);
            let mut first = vec![0.0; n];
            first[0] = 2.0;
            gens.push(first);
            for i in 1..n - 1 {
                let mut v = vec![0.0; n];
                v[i - 1] = -1.0;
                v[i] = 1.0;
                gens.push(v);
            }
            gens.push(vec![0.5; n]);
            Lattice::from_generators(&gens)
        }
    }
}

/// A_N expressed in the orthonormal frame of Σx_i = 0 obtained by
/// Gram–Schmidt on e_i − e_{i+1}; coordinates are the R factor of that QR.
fn root_lattice_a(n: usize) -> DMatrix<f64> {
    let m = n + 1;
    let diffs = DMatrix::from_fn(m, n, |i, j| {
        if i == j {
            1.0
        } else if i == j + 1 {
            -1.0
        } else {
            0.0
        }
    });
    let mut q: Vec<DVector<f64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v = diffs.column(j).into_owned();
        for qk in &q {
            let c = qk.dot(&v);
            v.axpy(-c, qk, 1.0);
        }
        let norm = v.norm();
        q.push(v / norm);
    }
    DMatrix::from_fn(n, n, |i, j| q[i].dot(&diffs.column(j)))
}
