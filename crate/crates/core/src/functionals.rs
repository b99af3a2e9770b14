//! Perimeter-type functionals of convex polytopes and the isoperimetric ratio.
//!
//! The nonlocal functionals are written as chord-power integrals. For a convex
//! body P and a line with direction θ through the point z ∈ θ⊥, let ℓ be the
//! chord length. Then
//!
//! ```text
//! ∫_P ∫_{ℝᴺ∖P} |x−y|^{−(N+s)} = 1/(s(1−s)) ∫_{S^{N−1}} ∫_{θ⊥} ℓ^{1−s}
//! ∫_P ∫_P |x−y|^{α−N}          = 1/(α(1+α)) ∫_{S^{N−1}} ∫_{θ⊥} ℓ^{1+α}
//! ```
//!
//! and the right-hand sides are estimated by sampling random lines.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{catalog, CatalogName};
use crate::linalg;
use crate::polytope::Polytope;
use crate::voronoi::voronoi_cell;

pub const MIN_SAMPLES: usize = 10_000;
pub const KELVIN_FACTOR: f64 = 0.998;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonteCarloConfig {
    pub samples: usize,
    pub seed: u64,
    /// Number of batches; batch means give the standard error.
    pub batch: usize,
}

impl MonteCarloConfig {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed,
            batch: 20,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < MIN_SAMPLES {
            return Err(Error::InvalidInput(format!(
                "samples must be at least {MIN_SAMPLES}, got {}",
                self.samples
            )));
        }
        if self.batch < 2 || self.samples % self.batch != 0 {
            return Err(Error::InvalidInput(format!(
                "batch count {} must be at least 2 and divide samples {}",
                self.batch, self.samples
            )));
        }
        Ok(())
    }
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        Self::new(200_000, 0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub samples_used: usize,
}

impl Estimate {
    /// Whether `other` lies within `k` standard errors (combined) of this estimate.
    pub fn agrees_with(&self, other: f64, k: f64) -> bool {
        (self.value - other).abs() <= k * self.stderr
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Normalization {
    ByInradius,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSpec {
    /// Power of the inradius; `None` means N−1.
    pub exponent: Option<f64>,
    pub normalization: Normalization,
}

impl Default for RatioSpec {
    fn default() -> Self {
        Self {
            exponent: None,
            normalization: Normalization::ByInradius,
        }
    }
}

impl RatioSpec {
    pub fn with_exponent(exponent: f64) -> Self {
        Self {
            exponent: Some(exponent),
            ..Self::default()
        }
    }

    pub fn exponent_for(&self, dim: usize) -> f64 {
        self.exponent.unwrap_or(dim as f64 - 1.0)
    }
}

pub fn classical_perimeter(p: &Polytope) -> Result<f64> {
    p.surface_area()
}

/// Monte Carlo estimate of ∫_P∫_{P^c} |x−y|^{−(N+s)}.
pub fn fractional_perimeter(p: &Polytope, s: f64, cfg: &MonteCarloConfig) -> Result<Estimate> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::SNotInRange(s));
    }
    let est = chord_power(p, 1.0 - s, cfg)?;
    Ok(scale_estimate(est, 1.0 / (s * (1.0 - s))))
}

/// Monte Carlo estimate of ∫_P∫_P |x−y|^{α−N}.
pub fn riesz_energy(p: &Polytope, alpha: f64, cfg: &MonteCarloConfig) -> Result<Estimate> {
    let n = p.dim();
    if !(alpha > 0.0 && alpha < n as f64) {
        return Err(Error::AlphaNotInRange { alpha, dim: n });
    }
    let est = chord_power(p, 1.0 + alpha, cfg)?;
    Ok(scale_estimate(est, 1.0 / (alpha * (1.0 + alpha))))
}

fn scale_estimate(e: Estimate, f: f64) -> Estimate {
    Estimate {
        value: e.value * f,
        stderr: e.stderr * f,
        samples_used: e.samples_used,
    }
}

/// Estimates ∫_{S^{N−1}} ∫_{θ⊥} ℓ^p over random lines meeting the bounding ball.
fn chord_power(poly: &Polytope, power: f64, cfg: &MonteCarloConfig) -> Result<Estimate> {
    cfg.validate()?;
    let n = poly.dim();
    let (center, radius) = poly.bounding_ball();
    let normals: Vec<&DVector<f64>> = poly.facets().iter().map(|f| f.halfspace.normal()).collect();
    let offsets: Vec<f64> = poly
        .facets()
        .iter()
        .map(|f| f.halfspace.offset() - f.halfspace.normal().dot(&center))
        .collect();
    let measure = linalg::sphere_area(n) * linalg::ball_volume(n - 1) * radius.powi(n as i32 - 1);
    let per_batch = cfg.samples / cfg.batch;

    let means: Vec<f64> = (0..cfg.batch)
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(b as u64);
            let mut sum = 0.0;
            for _ in 0..per_batch {
                let theta = linalg::random_unit_vector(&mut rng, n);
                let z = random_in_disk(&mut rng, &theta, radius);
                let l = chord_length(&normals, &offsets, &z, &theta);
                if l > 0.0 {
                    sum += l.powf(power);
                }
            }
            measure * sum / per_batch as f64
        })
        .collect();

    let k = means.len() as f64;
    let mean = means.iter().sum::<f64>() / k;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (k - 1.0);
    Ok(Estimate {
        value: mean,
        stderr: (var / k).sqrt(),
        samples_used: per_batch * cfg.batch,
    })
}

/// Uniform point of the (N−1)-disk of radius `r` in θ⊥.
fn random_in_disk<R: Rng>(rng: &mut R, theta: &DVector<f64>, r: f64) -> DVector<f64> {
    let n = theta.len();
    loop {
        let mut v = linalg::random_unit_vector(rng, n);
        let c = v.dot(theta);
        v.axpy(-c, theta, 1.0);
        let len = v.norm();
        if len > 1e-9 {
            let t: f64 = rng.random();
            return v * (r * t.powf(1.0 / (n as f64 - 1.0)) / len);
        }
    }
}

fn chord_length(
    normals: &[&DVector<f64>],
    offsets: &[f64],
    z: &DVector<f64>,
    theta: &DVector<f64>,
) -> f64 {
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for (nrm, &b) in normals.iter().zip(offsets) {
        let a = nrm.dot(theta);
        let rhs = b - nrm.dot(z);
        if a.abs() < 1e-15 {
            if rhs < 0.0 {
                return 0.0;
            }
        } else if a > 0.0 {
            hi = hi.min(rhs / a);
        } else {
            lo = lo.max(rhs / a);
        }
    }
    (hi - lo).max(0.0)
}

/// Perimeter over inradius^exponent.
pub fn iso_ratio(p: &Polytope, spec: &RatioSpec) -> Result<f64> {
    let exponent = spec.exponent_for(p.dim());
    if !(exponent > 0.0) {
        return Err(Error::InvalidInput("ratio exponent must be positive".into()));
    }
    let (r, _) = p.chebyshev_inradius()?;
    if !(r > p.tolerance()) {
        return Err(Error::ZeroInradius);
    }
    Ok(classical_perimeter(p)? / r.powf(exponent))
}

#[derive(Clone, Debug, Serialize)]
pub struct KelvinReport {
    pub ratio_truncated_octahedron: f64,
    pub ratio_rhombic_dodecahedron: f64,
    pub factor: f64,
    pub kelvin_lower_bound: f64,
    pub bound_exceeds_rhombic_dodecahedron: bool,
}

/// Compares the Kelvin-cell lower bound (factor × flat truncated octahedron
/// ratio) with the rhombic dodecahedron ratio.
pub fn kelvin_bound_check() -> Result<KelvinReport> {
    let spec = RatioSpec::default();
    let t = iso_ratio(&voronoi_cell(&catalog(CatalogName::Bcc, 3)?)?, &spec)?;
    let rd = iso_ratio(&voronoi_cell(&catalog(CatalogName::Fcc, 3)?)?, &spec)?;
    let bound = KELVIN_FACTOR * t;
    Ok(KelvinReport {
        ratio_truncated_octahedron: t,
        ratio_rhombic_dodecahedron: rd,
        factor: KELVIN_FACTOR,
        kelvin_lower_bound: bound,
        bound_exceeds_rhombic_dodecahedron: bound > rd,
    })
}

/// CLI-facing result record.
pub fn estimate_json(functional: &str, est: &Estimate, cfg: &MonteCarloConfig, extra: serde_json::Value) -> serde_json::Value {
    let mut config = serde_json::to_value(cfg).expect("config serializes");
    if let (Some(obj), serde_json::Value::Object(more)) = (config.as_object_mut(), extra) {
        obj.extend(more);
    }
    serde_json::json!({
        "functional": functional,
        "value": est.value,
        "stderr": est.stderr,
        "samples_used": est.samples_used,
        "config": config,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polytope::{halfspace_intersection, HalfSpace};

    fn cube(side: f64, n: usize) -> Polytope {
        let mut hs = Vec::new();
        for i in 0..n {
            for sign in [1.0, -1.0] {
                let mut v = DVector::zeros(n);
                v[i] = sign;
                hs.push(HalfSpace::new(v, side / 2.0).unwrap());
            }
        }
        halfspace_intersection(&hs).unwrap()
    }

    #[test]
    fn chord_of_square() {
        let sq = cube(1.0, 2);
        let normals: Vec<&DVector<f64>> = sq.facets().iter().map(|f| f.halfspace.normal()).collect();
        let offsets: Vec<f64> = sq.facets().iter().map(|f| f.halfspace.offset()).collect();
        let z = DVector::from_vec(vec![0.0, 0.25]);
        let th = DVector::from_vec(vec![1.0, 0.0]);
        assert!((chord_length(&normals, &offsets, &z, &th) - 1.0).abs() < 1e-12);
        let z = DVector::from_vec(vec![0.0, 0.75]);
        assert_eq!(chord_length(&normals, &offsets, &z, &th), 0.0);
    }

    #[test]
    fn chord_integral_gives_volume() {
        // ∫_{θ⊥} ℓ = |P| for every θ.
        let c = cube(1.0, 3);
        let cfg = MonteCarloConfig::new(200_000, 5);
        let e = chord_power(&c, 1.0, &cfg).unwrap();
        let expected = linalg::sphere_area(3);
        assert!(e.agrees_with(expected, 4.0), "{e:?} vs {expected}");
    }

    #[test]
    fn config_validation() {
        let sq = cube(1.0, 2);
        let bad = MonteCarloConfig { samples: 100, seed: 0, batch: 10 };
        assert!(fractional_perimeter(&sq, 0.5, &bad).is_err());
        let bad = MonteCarloConfig { samples: 10_001, seed: 0, batch: 10 };
        assert!(fractional_perimeter(&sq, 0.5, &bad).is_err());
        let cfg = MonteCarloConfig::new(10_000, 0);
        assert_eq!(fractional_perimeter(&sq, 1.0, &cfg).unwrap_err(), Error::SNotInRange(1.0));
        assert!(matches!(
            riesz_energy(&sq, 2.0, &cfg),
            Err(Error::AlphaNotInRange { .. })
        ));
    }

    #[test]
    fn ratios_of_known_cells() {
        let spec = RatioSpec::default();
        let r = iso_ratio(&cube(7.0, 3), &spec).unwrap();
        assert!((r - 24.0).abs() < 1e-9);
        let hex = voronoi_cell(&catalog(CatalogName::Hex, 2).unwrap()).unwrap();
        assert!((iso_ratio(&hex, &spec).unwrap() - 4.0 * 3f64.sqrt()).abs() < 1e-9);
        let rd = voronoi_cell(&catalog(CatalogName::Fcc, 3).unwrap()).unwrap();
        assert!((iso_ratio(&rd, &spec).unwrap() - 12.0 * 2f64.sqrt()).abs() < 1e-9);
        let squared = iso_ratio(&cube(2.0, 2), &RatioSpec::with_exponent(2.0)).unwrap();
        assert!((squared - 8.0).abs() < 1e-12);
    }

    #[test]
    fn kelvin_numbers() {
        let k = kelvin_bound_check().unwrap();
        assert!((k.ratio_truncated_octahedron - 4.0 * (2.0 * 3f64.sqrt() + 1.0)).abs() < 1e-9);
        assert!((k.kelvin_lower_bound - 17.82).abs() < 5e-3);
        assert!(k.bound_exceeds_rhombic_dodecahedron);
    }

    #[test]
    fn json_record() {
        let cfg = MonteCarloConfig::new(10_000, 3);
        let e = Estimate { value: 1.5, stderr: 0.1, samples_used: 10_000 };
        let v = estimate_json("fracper", &e, &cfg, serde_json::json!({"s": 0.5}));
        assert_eq!(v["functional"], "fracper");
        assert_eq!(v["config"]["seed"], 3);
        assert_eq!(v["config"]["s"], 0.5);
    }
}
