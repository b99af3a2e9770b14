//! Derivative-free search over lattices for the smallest Voronoi-cell
//! isoperimetric ratio at unit inradius.

use std::time::Instant;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::functionals::classical_perimeter;
use crate::lattice::{catalog, CatalogName, Lattice, LatticeFile};
use crate::polytope::MAX_VERTEX_ENUM_DIM;
use crate::voronoi::voronoi_cell;

pub const PENALTY: f64 = 1e9;
const MAX_ROUNDS: usize = 8;
pub const DEFAULT_CONDITION_CAP: f64 = 1e6;
pub const FCC_COUNTEREXAMPLE_FLAG: &str = "FCC_CONJECTURE_COUNTEREXAMPLE";
pub const UPPER_BOUND_NOTE: &str = "search is restricted to Voronoi cells of lattices; \
the best ratio is an upper bound for the minimum over all periodic fundamental domains";

/// Scales `lattice` so that its inradius equals `rho0`.
pub fn normalize_to_inradius(lattice: &Lattice, rho0: f64) -> Result<Lattice> {
    if !(rho0 > 0.0 && rho0.is_finite()) {
        return Err(Error::InvalidInput("rho0 must be positive".into()));
    }
    let rho = lattice.inradius()?;
    lattice.scaled(rho0 / rho)
}

/// Perimeter of the Voronoi cell after rescaling to unit inradius.
pub fn objective(lattice: &Lattice) -> Result<f64> {
    objective_with_cap(lattice, DEFAULT_CONDITION_CAP)
}

pub fn objective_with_cap(lattice: &Lattice, cap: f64) -> Result<f64> {
    if lattice.dim() > MAX_VERTEX_ENUM_DIM {
        return Err(Error::DimensionTooLarge {
            operation: "objective",
            dim: lattice.dim(),
            max: MAX_VERTEX_ENUM_DIM,
        });
    }
    let reduced = lattice.reduce_basis().lattice;
    let condition = reduced.gram_condition();
    if !(condition <= cap) {
        return Err(Error::DegenerateLattice { condition, cap });
    }
    let normalized = normalize_to_inradius(&reduced, 1.0)?;
    let cell = voronoi_cell(&normalized)?;
    let (volume, det) = (cell.volume()?, normalized.determinant());
    if (volume - det).abs() > 1e-6 * det {
        return Err(Error::DegenerateFacet(format!(
            "cell volume {volume} does not match determinant {det}"
        )));
    }
    classical_perimeter(&cell)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub enum InitialLattice {
    Catalog(CatalogName),
    /// Catalog lattice with its Gram matrix perturbed by the given relative size.
    Perturbed(CatalogName, f64),
    Random,
}

impl InitialLattice {
    fn label(&self) -> String {
        match self {
            InitialLattice::Catalog(c) => c.to_string(),
            InitialLattice::Perturbed(c, eps) => format!("{c}~{eps}"),
            InitialLattice::Random => "random".to_string(),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizerConfig {
    pub dim: usize,
    pub restarts: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub simplex_tol: f64,
    /// Starting points for the first restarts; the rest start from random Gram matrices.
    pub initial: Vec<InitialLattice>,
    pub condition_cap: f64,
}

impl OptimizerConfig {
    pub fn new(dim: usize, restarts: usize, seed: u64) -> Self {
        Self {
            dim,
            restarts,
            seed,
            max_iters: 4000,
            simplex_tol: 1e-10,
            initial: Vec::new(),
            condition_cap: DEFAULT_CONDITION_CAP,
        }
    }

    fn start(&self, i: usize) -> InitialLattice {
        self.initial.get(i).cloned().unwrap_or(InitialLattice::Random)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct RestartTrace {
    pub restart: usize,
    pub start: String,
    pub evaluations: usize,
    pub best_ratio: f64,
    /// Best-so-far ratio after each iteration.
    pub trace: Vec<(usize, f64)>,
    #[serde(skip)]
    best_params: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Equivalence {
    pub lattice: String,
    pub equivalent: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OptimizationReport {
    pub config: OptimizerConfig,
    pub best_lattice: LatticeFile,
    pub best_gram: Vec<Vec<f64>>,
    pub best_ratio: f64,
    pub best_restart: usize,
    pub restarts: Vec<RestartTrace>,
    pub equivalences: Vec<Equivalence>,
    pub flags: Vec<String>,
    pub note: String,
    pub wall_time_s: f64,
}

impl OptimizationReport {
    pub fn best(&self) -> Result<Lattice> {
        Lattice::from_file(&self.best_lattice)
    }

    pub fn is_equivalent_to(&self, name: CatalogName) -> bool {
        self.equivalences
            .iter()
            .any(|e| e.equivalent && e.lattice == name.as_str())
    }

    /// CSV rows `restart,iter,ratio`.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("restart,iter,ratio\n");
        for r in &self.restarts {
            for (it, v) in &r.trace {
                out.push_str(&format!("{},{},{}\n", r.restart, it, crate::polytope::fmt12(*v)));
            }
        }
        out
    }
}

fn param_count(n: usize) -> usize {
    n * (n + 1) / 2
}

/// Lower-triangular Cholesky entries, row by row.
fn params_from_lattice(lattice: &Lattice) -> Result<Vec<f64>> {
    let n = lattice.dim();
    let chol = lattice
        .gram()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::DegenerateLattice { condition: f64::INFINITY, cap: 0.0 })?;
    let l = chol.l();
    let mut x = Vec::with_capacity(param_count(n));
    for i in 0..n {
        for j in 0..=i {
            x.push(l[(i, j)]);
        }
    }
    Ok(x)
}

fn lattice_from_params(n: usize, x: &[f64]) -> Result<Lattice> {
    let mut l = DMatrix::zeros(n, n);
    let mut k = 0;
    for i in 0..n {
        for j in 0..=i {
            l[(i, j)] = x[k];
            k += 1;
        }
    }
    Lattice::new(l.transpose())
}

fn lattice_from_gram(g: &DMatrix<f64>) -> Result<Lattice> {
    let chol = g.clone().cholesky().ok_or_else(|| {
        Error::DegenerateLattice {
            condition: f64::INFINITY,
            cap: DEFAULT_CONDITION_CAP,
        }
    })?;
    Lattice::new(chol.l().transpose())
}

fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    let a = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
    (&a + a.transpose()) / 2.0
}

fn perturb_gram(g: &DMatrix<f64>, eps: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let s = random_symmetric(rng, g.nrows());
    let f = eps * g.norm() / s.norm();
    g + s * f
}

fn start_lattice(cfg: &OptimizerConfig, start: &InitialLattice, rng: &mut ChaCha8Rng) -> Result<Lattice> {
    let n = cfg.dim;
    let l = match start {
        InitialLattice::Catalog(c) => catalog(*c, n)?,
        InitialLattice::Perturbed(c, eps) => {
            let base = catalog(*c, n)?;
            lattice_from_gram(&perturb_gram(base.gram(), *eps, rng))?
        }
        InitialLattice::Random => loop {
            let b = DMatrix::from_fn(n, n, |_, _| StandardNormal.sample(rng));
            if let Ok(l) = Lattice::new(b) {
                let r = l.reduce_basis().lattice;
                if r.gram_condition() < cfg.condition_cap / 10.0 {
                    break r;
                }
            }
        },
    };
    let r = l.reduce_basis().lattice;
    normalize_to_inradius(&lattice_from_gram(r.gram())?, 1.0)
}

fn penalized(n: usize, x: &[f64], cap: f64) -> f64 {
    lattice_from_params(n, x)
        .and_then(|l| objective_with_cap(&l, cap))
        .unwrap_or(PENALTY)
}

fn run_restart(cfg: &OptimizerConfig, index: usize) -> Result<RestartTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let start = cfg.start(index);
    let n = cfg.dim;
    let lattice = start_lattice(cfg, &start, &mut rng)?;
    let mut x0 = params_from_lattice(&lattice)?;
    let mut evaluations = 1usize;
    let mut best_x = x0.clone();
    let mut best = penalized(n, &x0, cfg.condition_cap);
    let mut trace = vec![(0, best)];
    let mut iter = 0usize;
    let mut step = 0.2;
    for round in 0..MAX_ROUNDS {
        if iter >= cfg.max_iters {
            break;
        }
        let before = best;
        let mut f = |x: &[f64]| {
            evaluations += 1;
            penalized(n, x, cfg.condition_cap)
        };
        let (x, fx, used) = nelder_mead(&mut f, &x0, step, cfg.simplex_tol, cfg.max_iters - iter, |fx| {
            best = best.min(fx);
            iter += 1;
            trace.push((iter, best));
        });
        if fx <= best {
            best = fx;
            best_x = x;
        }
        if used == 0 || (round > 0 && best > before - cfg.simplex_tol) {
            break;
        }
        // Fresh simplex around a reduced, renormalized basis of the best point.
        let l = lattice_from_params(n, &best_x)?.reduce_basis().lattice;
        x0 = params_from_lattice(&normalize_to_inradius(&l, 1.0)?)?;
        step = (step / 2.0).max(0.02);
    }
    let best_ratio = penalized(n, &best_x, cfg.condition_cap);
    if best_ratio >= PENALTY {
        return Err(Error::AllRestartsFailed(1));
    }
    Ok(RestartTrace {
        restart: index,
        start: start.label(),
        evaluations,
        best_ratio,
        trace,
        best_params: best_x,
    })
}

/// Nelder–Mead minimization. Calls `on_iter` with the current best value after
/// every iteration and returns (x, f(x), iterations used).
fn nelder_mead<F, C>(
    f: &mut F,
    x0: &[f64],
    step: f64,
    tol: f64,
    max_iters: usize,
    mut on_iter: C,
) -> (Vec<f64>, f64, usize)
where
    F: FnMut(&[f64]) -> f64,
    C: FnMut(f64),
{
    let m = x0.len();
    let scale = x0.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
    let mut simplex: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..m {
        let mut x = x0.to_vec();
        x[i] += step * scale;
        simplex.push(x);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| f(x)).collect();
    let mut iters = 0;
    while iters < max_iters {
        let mut order: Vec<usize> = (0..=m).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();
        let spread = values[m] - values[0];
        let size = simplex[1..]
            .iter()
            .map(|x| x.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread <= tol && size <= 1e-9 * scale {
            break;
        }
        iters += 1;

        let centroid: Vec<f64> = (0..m)
            .map(|j| simplex[..m].iter().map(|x| x[j]).sum::<f64>() / m as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[m])
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };
        let xr = along(1.0);
        let fr = f(&xr);
        if fr < values[0] {
            let xe = along(2.0);
            let fe = f(&xe);
            if fe < fr {
                simplex[m] = xe;
                values[m] = fe;
            } else {
                simplex[m] = xr;
                values[m] = fr;
            }
        } else if fr < values[m - 1] {
            simplex[m] = xr;
            values[m] = fr;
        } else {
            let (xc, fc) = if fr < values[m] {
                let xc = along(0.5);
                let fc = f(&xc);
                (xc, fc)
            } else {
                let xc = along(-0.5);
                let fc = f(&xc);
                (xc, fc)
            };
            if fc < values[m].min(fr) {
                simplex[m] = xc;
                values[m] = fc;
            } else {
                for i in 1..=m {
                    let xi: Vec<f64> = simplex[i]
                        .iter()
                        .zip(&simplex[0])
                        .map(|(a, b)| b + 0.5 * (a - b))
                        .collect();
                    values[i] = f(&xi);
                    simplex[i] = xi;
                }
            }
        }
        on_iter(values.iter().copied().fold(f64::INFINITY, f64::min));
    }
    let best = (0..=m).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap();
    (simplex[best].clone(), values[best], iters)
}

pub fn optimize(cfg: &OptimizerConfig) -> Result<OptimizationReport> {
    if !(2..=4).contains(&cfg.dim) {
        return Err(Error::UnsupportedDimension(cfg.dim));
    }
    if cfg.restarts == 0 || !(cfg.condition_cap > 1.0) || cfg.max_iters == 0 {
        return Err(Error::InvalidInput(
            "restarts and max_iters must be positive and condition_cap > 1".into(),
        ));
    }
    let clock = Instant::now();
    let results: Vec<Result<RestartTrace>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|i| run_restart(cfg, i))
        .collect();
    let restarts: Vec<RestartTrace> = results.into_iter().filter_map(|r| r.ok()).collect();
    let (best_restart, best_trace) = restarts
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.best_ratio.total_cmp(&b.1.best_ratio))
        .ok_or(Error::AllRestartsFailed(cfg.restarts))?;
    let best_ratio = best_trace.best_ratio;
    let raw = lattice_from_params(cfg.dim, &best_trace.best_params)?;
    let best = normalize_to_inradius(&raw.reduce_basis().lattice, 1.0)?;

    let mut equivalences = Vec::new();
    for name in CatalogName::ALL {
        if let Ok(c) = catalog(name, cfg.dim) {
            equivalences.push(Equivalence {
                lattice: name.as_str().to_string(),
                equivalent: best.is_equivalent(&c, 1e-3)?,
            });
        }
    }
    let mut flags = Vec::new();
    if cfg.dim == 3 && best_ratio < 12.0 * 2f64.sqrt() - 1e-3 {
        flags.push(FCC_COUNTEREXAMPLE_FLAG.to_string());
    }
    let g = best.gram();
    Ok(OptimizationReport {
        config: cfg.clone(),
        best_lattice: best.to_file(),
        best_gram: (0..cfg.dim).map(|i| g.row(i).iter().copied().collect()).collect(),
        best_ratio,
        best_restart: restarts[best_restart].restart,
        restarts,
        equivalences,
        flags,
        note: UPPER_BOUND_NOTE.to_string(),
        wall_time_s: clock.elapsed().as_secs_f64(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct PerturbReport {
    pub base: f64,
    pub eps: f64,
    pub trials: usize,
    pub evaluated: usize,
    pub min: f64,
    pub mean: f64,
    pub improved: bool,
    pub best_gram: Option<Vec<Vec<f64>>>,
}

/// Objective at random Gram perturbations G + eps·‖G‖·S/‖S‖ with S symmetric Gaussian.
pub fn perturb_test(lattice: &Lattice, eps: f64, trials: usize, seed: u64) -> Result<PerturbReport> {
    if !(eps >= 0.0) || trials == 0 {
        return Err(Error::InvalidInput("eps must be non-negative and trials positive".into()));
    }
    let base = objective(lattice)?;
    let g = lattice.gram().clone();
    let values: Vec<(f64, DMatrix<f64>)> = (0..trials)
        .into_par_iter()
        .filter_map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(t as u64);
            let gp = perturb_gram(&g, eps, &mut rng);
            let l = lattice_from_gram(&gp).ok()?;
            objective(&l).ok().map(|v| (v, gp))
        })
        .collect();
    if values.is_empty() {
        return Err(Error::AllRestartsFailed(trials));
    }
    let (min, arg) = values
        .iter()
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(v, gp)| (*v, gp.clone()))
        .unwrap();
    let mean = values.iter().map(|v| v.0).sum::<f64>() / values.len() as f64;
    let improved = min < base - 1e-9;
    Ok(PerturbReport {
        base,
        eps,
        trials,
        evaluated: values.len(),
        min,
        mean,
        improved,
        best_gram: improved.then(|| (0..g.nrows()).map(|i| arg.row(i).iter().copied().collect()).collect()),
    })
}
