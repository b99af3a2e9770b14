//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::f64::consts::FRAC_PI_4;
use std::process::Command;
use std::time::{Duration, Instant};

use foamlab::functionals::{fractional_perimeter, iso_ratio, kelvin_bound_check, MonteCarloConfig, RatioSpec};
use foamlab::lattice::{catalog, CatalogName, Lattice};
use foamlab::linalg::random_rotation;
use foamlab::optimizer::{objective, optimize, perturb_test, InitialLattice, OptimizerConfig, FCC_COUNTEREXAMPLE_FLAG};
use foamlab::plateau::{bcc_edge_angles, plateau_check, PlateauReport, Verdict};
use foamlab::polytope::{halfspace_intersection, HalfSpace, Polytope};
use foamlab::voronoi::{cells_at_point, tiling_skeleton, voronoi_cell};
use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(failures: &mut Vec<String>, ok: bool, msg: impl Into<String>) {
    if !ok {
        failures.push(msg.into());
    }
}

fn finish(failures: Vec<String>, summary: String, elapsed: Duration, limit: Duration) -> Outcome {
    let mut failures = failures;
    if elapsed > limit {
        failures.push(format!("runtime {:.2}s exceeds {:.0}s", elapsed.as_secs_f64(), limit.as_secs_f64()));
    }
    let pass = failures.is_empty();
    let detail = if pass {
        format!("{summary} [{:.2}s]", elapsed.as_secs_f64())
    } else {
        format!("{summary} [{:.2}s]; {}", elapsed.as_secs_f64(), failures.join("; "))
    };
    Outcome { pass, detail }
}

fn sqrt(x: f64) -> f64 {
    x.sqrt()
}

fn criterion_1() -> Outcome {
    let t = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_foamlab"))
        .args(["ratio", "fcc"])
        .output()
        .expect("run foamlab");
    let elapsed = t.elapsed();
    let text = String::from_utf8_lossy(&out.stdout).trim().to_string();
    let value: f64 = text.parse().unwrap_or(f64::NAN);
    let target = 12.0 * sqrt(2.0);
    let mut f = Vec::new();
    check(&mut f, out.status.success(), "nonzero exit");
    check(&mut f, (value - target).abs() <= 1e-6, format!("ratio fcc = {text}"));
    finish(f, format!("`ratio fcc` = {text}, 12√2 = {target:.10}, tol 1e-6"), elapsed, Duration::from_secs(1))
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let spec = RatioSpec::default();
    let mut f = Vec::new();
    let to = voronoi_cell(&catalog(CatalogName::Bcc, 3).unwrap()).and_then(|c| iso_ratio(&c, &spec));
    let target = 4.0 * (2.0 * sqrt(3.0) + 1.0);
    let to = to.unwrap_or(f64::NAN);
    check(&mut f, (to - target).abs() <= 1e-6, format!("I(T) = {to}"));
    let k = kelvin_bound_check().unwrap();
    check(&mut f, (k.kelvin_lower_bound - 17.82).abs() < 5e-3, format!("bound {}", k.kelvin_lower_bound));
    check(&mut f, k.bound_exceeds_rhombic_dodecahedron && k.kelvin_lower_bound > 16.97, "bound does not exceed I(RD)");
    finish(
        f,
        format!(
            "I(T) = {to:.10} (target {target:.10}, tol 1e-6); 0.998·I(T) = {:.4} > I(RD) = {:.4}",
            k.kelvin_lower_bound, k.ratio_rhombic_dodecahedron
        ),
        t.elapsed(),
        Duration::from_secs(1),
    )
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let mut f = Vec::new();
    let tol = 1e-9;
    let mut near = |label: &str, got: f64, want: f64| {
        check(&mut f, (got - want).abs() <= tol, format!("{label}: {got} vs {want}"));
    };
    let table = [
        (CatalogName::Hex, 2, sqrt(3.0) / 2.0, 1.0, 0.5, 1.0 / sqrt(3.0)),
        (CatalogName::Fcc, 3, 2.0, sqrt(2.0), 1.0 / sqrt(2.0), 1.0),
        (CatalogName::Bcc, 3, 4.0, sqrt(3.0), sqrt(3.0) / 2.0, sqrt(5.0) / 2.0),
    ];
    for (name, n, d, lambda, rho, r) in table {
        let l = catalog(name, n).unwrap();
        near(&format!("{name} d"), l.determinant(), d);
        near(&format!("{name} λ"), l.minimal_norm().unwrap(), lambda);
        near(&format!("{name} ρ"), l.inradius().unwrap(), rho);
        near(&format!("{name} r"), l.covering_radius().unwrap(), r);
    }
    for n in 2..=6 {
        let astar = catalog(CatalogName::Astar, n).unwrap();
        let want = 0.5 * (n as f64 / (n as f64 + 1.0)).sqrt();
        near(&format!("A{n}* ρ"), astar.inradius().unwrap(), want);
        let a = catalog(CatalogName::A, n).unwrap();
        near(&format!("A{n} λ"), a.minimal_norm().unwrap(), sqrt(2.0));
    }
    let d4 = catalog(CatalogName::D, 4).unwrap();
    near("D4 r", d4.covering_radius().unwrap(), 1.0);
    finish(
        f,
        "HEX/FCC/BCC (d, λ, ρ, r), A_N* inradius and A_N minimal norm for N=2..6, D4 covering radius, tol 1e-9".into(),
        t.elapsed(),
        Duration::from_secs(10),
    )
}

fn criterion_4() -> Outcome {
    let t = Instant::now();
    let mut f = Vec::new();
    let mut checked = 0;
    let mut worst = 0.0f64;
    for name in CatalogName::ALL {
        for n in 1..=4 {
            let Ok(l) = catalog(name, n) else { continue };
            match voronoi_cell(&l).and_then(|c| c.volume()) {
                Ok(v) => {
                    let rel = (v - l.determinant()).abs() / l.determinant();
                    worst = worst.max(rel);
                    check(&mut f, rel <= 1e-6, format!("{name}{n}: volume {v} vs d {}", l.determinant()));
                    checked += 1;
                }
                Err(e) if n == 1 => {
                    let _ = e;
                }
                Err(e) => check(&mut f, false, format!("{name}{n}: {e}")),
            }
        }
    }
    let mut facets = Vec::new();
    for n in 2..=4 {
        let c = voronoi_cell(&catalog(CatalogName::Astar, n).unwrap()).unwrap();
        let want = 2 * ((1usize << n) - 1);
        facets.push(format!("N={n}: {}", c.facets().len()));
        check(&mut f, c.facets().len() == want, format!("A{n}* facets {} != {want}", c.facets().len()));
    }
    finish(
        f,
        format!(
            "vol(V_G) = d(G) for {checked} catalog lattices (max rel err {worst:.1e}, tol 1e-6); permutohedron facets {}",
            facets.join(", ")
        ),
        t.elapsed(),
        Duration::from_secs(60),
    )
}

fn criterion_5() -> Outcome {
    let t = Instant::now();
    let mut f = Vec::new();
    let cell = voronoi_cell(&catalog(CatalogName::D, 4).unwrap()).unwrap();
    let (r, _) = cell.chebyshev_inradius().unwrap();
    check(&mut f, cell.facets().len() == 24, format!("{} facets", cell.facets().len()));
    check(&mut f, cell.vertices().len() == 24, format!("{} vertices", cell.vertices().len()));
    check(&mut f, (r - sqrt(2.0) / 2.0).abs() <= 1e-9, format!("inradius {r}"));
    finish(
        f,
        format!("D4 cell: {} facets, {} vertices, inradius {r:.12}", cell.facets().len(), cell.vertices().len()),
        t.elapsed(),
        Duration::from_secs(10),
    )
}

fn oracle_consistent(l: &Lattice) -> Result<usize, String> {
    let complex = tiling_skeleton(l).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let lambda = l.minimal_norm().unwrap();
    for face in &complex.faces {
        let rep = face.representative();
        let brute = cells_at_point(l, &rep).map_err(|e| e.to_string())?;
        if brute.len() != face.chamber_count() {
            return Err(format!("face at {:?}: {} vs {}", face.representative_point, brute.len(), face.chamber_count()));
        }
        for _ in 0..10 {
            let d = foamlab::linalg::random_unit_vector(&mut rng, l.dim()) * (1e-3 * lambda);
            let near = cells_at_point(l, &(&rep + d)).map_err(|e| e.to_string())?;
            if !near.iter().all(|p| face.equidistant_coeffs.contains(&p.coeffs)) {
                return Err("nearby point sees a cell outside the equidistant set".into());
            }
        }
    }
    Ok(complex.faces.len())
}

fn has_orbit(r: &PlateauReport, dim: usize, chambers: usize, verdict: Verdict) -> bool {
    r.orbits
        .iter()
        .any(|o| o.face_dim == dim && o.chambers == chambers && o.verdict == verdict)
}

fn criterion_6() -> Outcome {
    let t = Instant::now();
    let mut f = Vec::new();
    let tol = 0.1;
    let hex = plateau_check(&catalog(CatalogName::Hex, 2).unwrap(), tol).unwrap();
    check(&mut f, hex.pass, "HEX does not pass");
    let z3 = plateau_check(&catalog(CatalogName::Z, 3).unwrap(), tol).unwrap();
    check(&mut f, !z3.pass, "Z3 passes");
    let fcc = plateau_check(&catalog(CatalogName::Fcc, 3).unwrap(), tol).unwrap();
    check(&mut f, !fcc.pass && has_orbit(&fcc, 0, 6, Verdict::Violation), "FCC lacks a failing 6-chamber vertex class");

    let (sig, verdict, _) = bcc_edge_angles().unwrap();
    let mut a = sig.angles_deg.clone();
    a.sort_by(f64::total_cmp);
    let want = [109.471, 125.264, 125.264];
    let bcc = plateau_check(&catalog(CatalogName::Bcc, 3).unwrap(), tol).unwrap();
    check(&mut f, !bcc.pass && verdict == Verdict::Violation, "BCC passes");
    check(
        &mut f,
        a.len() == 3 && a.iter().zip(want).all(|(x, y)| (x - y).abs() <= 1e-3),
        format!("BCC edge angles {a:?}"),
    );
    check(&mut f, (a.iter().sum::<f64>() - 360.0).abs() <= 1e-6, "BCC angles do not sum to 360");

    let d4 = plateau_check(&catalog(CatalogName::D, 4).unwrap(), tol).unwrap();
    check(&mut f, d4.pass, "D4 does not pass");
    let c2_ok = d4
        .orbits
        .iter()
        .filter(|o| o.face_dim == 2)
        .all(|o| o.chambers == 3 && o.angles_deg.iter().all(|x| (x - 120.0).abs() <= 1e-6));
    check(&mut f, c2_ok, "D4 codim-2 faces not 3 cells at 120°");
    check(
        &mut f,
        d4.orbits.iter().filter(|o| o.face_dim == 0).all(|o| o.chambers == 8),
        "D4 vertices not 8-cell",
    );

    let mut faces = 0;
    for (name, n) in [(CatalogName::Hex, 2), (CatalogName::Z, 3), (CatalogName::Fcc, 3), (CatalogName::Bcc, 3), (CatalogName::D, 4)] {
        match oracle_consistent(&catalog(name, n).unwrap()) {
            Ok(k) => faces += k,
            Err(e) => check(&mut f, false, format!("{name}: {e}")),
        }
    }
    finish(
        f,
        format!(
            "HEX pass, Z3 fail, FCC fail (6-chamber vertex), BCC edge angles {:.3}/{:.3}/{:.3}, D4 pass; {faces} faces match nearest-point oracle",
            a[0], a[1], a[2]
        ),
        t.elapsed(),
        Duration::from_secs(30),
    )
}

fn criterion_7() -> Outcome {
    let t = Instant::now();
    let mut f = Vec::new();
    let report = optimize(&OptimizerConfig::new(2, 10, 2024)).unwrap();
    let target = 4.0 * sqrt(3.0);
    check(&mut f, (report.best_ratio - target).abs() <= 1e-3, format!("best {}", report.best_ratio));
    check(&mut f, report.is_equivalent_to(CatalogName::Hex), "best lattice not equivalent to HEX");
    finish(
        f,
        format!("dim 2, 10 restarts: best {:.10} vs 4√3 = {target:.10}, HEX-equivalent {}", report.best_ratio, report.is_equivalent_to(CatalogName::Hex)),
        t.elapsed(),
        Duration::from_secs(60),
    )
}

fn criterion_8() -> Outcome {
    let t = Instant::now();
    let mut f = Vec::new();
    let mut cfg = OptimizerConfig::new(3, 10, 42);
    cfg.initial = vec![
        InitialLattice::Catalog(CatalogName::Z),
        InitialLattice::Perturbed(CatalogName::Bcc, 0.05),
    ];
    let report = optimize(&cfg).unwrap();
    let target = 12.0 * sqrt(2.0);
    check(&mut f, (report.best_ratio - target).abs() <= 1e-2, format!("best {}", report.best_ratio));
    check(
        &mut f,
        report.best_ratio >= target - 1e-3 && !report.flags.iter().any(|x| x == FCC_COUNTEREXAMPLE_FLAG),
        format!("{FCC_COUNTEREXAMPLE_FLAG}: best {} (manual review required)", report.best_ratio),
    );
    let bcc = objective(&catalog(CatalogName::Bcc, 3).unwrap()).unwrap();
    check(&mut f, report.best_ratio <= bcc - 0.5, "best does not beat BCC by 0.5");
    finish(
        f,
        format!(
            "dim 3, starts Z3 + perturbed BCC + 8 random: best {:.8} vs 12√2 = {target:.8}, FCC-equivalent {}",
            report.best_ratio,
            report.is_equivalent_to(CatalogName::Fcc)
        ),
        t.elapsed(),
        Duration::from_secs(600),
    )
}

fn box_polytope(side: f64, n: usize) -> Polytope {
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

fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    let m = (a + b) / 2.0;
    let whole = (b - a) / 6.0 * (f(a) + 4.0 * f(m) + f(b));
    let left = (m - a) / 6.0 * (f(a) + 4.0 * f((a + m) / 2.0) + f(m));
    let right = (b - m) / 6.0 * (f(m) + 4.0 * f((m + b) / 2.0) + f(b));
    if depth == 0 || (left + right - whole).abs() < 15.0 * tol {
        left + right + (left + right - whole) / 15.0
    } else {
        simpson(f, a, m, tol / 2.0, depth - 1) + simpson(f, m, b, tol / 2.0, depth - 1)
    }
}

/// Unit-square s-perimeter by covariogram quadrature over the angle.
fn square_oracle(s: f64) -> f64 {
    let f = |phi: f64| {
        let (c, si) = (phi.cos(), phi.sin());
        let a = 1.0 / c;
        (c + si) * a.powf(1.0 - s) / (1.0 - s) - c * si * a.powf(2.0 - s) / (2.0 - s) + c.powf(s) / s
    };
    8.0 * simpson(&f, 0.0, FRAC_PI_4, 1e-13, 30)
}

fn criterion_9() -> Outcome {
    let t = Instant::now();
    let mut f = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let spec = RatioSpec::default();

    // Scaling of volume and perimeter, central symmetry, Euler relation.
    let mut lattices: Vec<Lattice> = Vec::new();
    for name in CatalogName::ALL {
        for n in 2..=4 {
            if let Ok(l) = catalog(name, n) {
                lattices.push(l);
            }
        }
    }
    for _ in 0..20 {
        let b = DMatrix::<f64>::identity(3, 3)
            + DMatrix::from_fn(3, 3, |_, _| rand::Rng::random_range(&mut rng, -0.5..0.5));
        lattices.push(Lattice::new(b).unwrap());
    }
    for l in &lattices {
        let cell = voronoi_cell(l).unwrap();
        let n = l.dim() as i32;
        check(&mut f, cell.is_centrally_symmetric(1e-8), "cell not centrally symmetric");
        for lam in [0.5, 2.0, 5.0] {
            let big = cell.scaled(lam).unwrap();
            let (v0, v1) = (cell.volume().unwrap(), big.volume().unwrap());
            let (p0, p1) = (cell.surface_area().unwrap(), big.surface_area().unwrap());
            check(&mut f, (v1 - lam.powi(n) * v0).abs() <= 1e-9 * v1, "volume scaling");
            check(&mut f, (p1 - lam.powi(n - 1) * p0).abs() <= 1e-9 * p1, "perimeter scaling");
            let (i0, i1) = (iso_ratio(&cell, &spec).unwrap(), iso_ratio(&big, &spec).unwrap());
            check(&mut f, (i1 - i0).abs() <= 1e-9 * i0, "ratio scale invariance");
        }
        if n == 3 {
            let fl = cell.face_lattice();
            check(&mut f, fl[0].len() + fl[2].len() == fl[1].len() + 2, "Euler relation");
        }
    }

    // Fractional perimeter scaling λ^{N−s}, independent seeds.
    let s = 0.5;
    let a = fractional_perimeter(&box_polytope(1.0, 3), s, &MonteCarloConfig::new(200_000, 1)).unwrap();
    let b = fractional_perimeter(&box_polytope(2.0, 3), s, &MonteCarloConfig::new(200_000, 2)).unwrap();
    let ratio = b.value / a.value;
    let err = ratio * (a.stderr / a.value + b.stderr / b.value);
    check(&mut f, (ratio - 2f64.powf(3.0 - s)).abs() <= 3.0 * err, format!("Per_s scaling {ratio}"));

    // Objective invariance under rotations and unimodular changes.
    for l in lattices.iter().filter(|l| l.dim() == 3).take(12) {
        let base = objective(l).unwrap();
        let r = random_rotation(&mut rng, 3);
        let rot = objective(&l.transformed(&r).unwrap()).unwrap();
        let u = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.0, 1.0, -1.0, 1.0, 1.0, 0.0]);
        let uni = objective(&Lattice::new(l.basis() * u).unwrap()).unwrap();
        let red = objective(&l.reduce_basis().lattice).unwrap();
        check(&mut f, (rot - base).abs() <= 1e-9 && (uni - base).abs() <= 1e-9 && (red - base).abs() <= 1e-9, "objective invariance");
    }

    // Determinism.
    let cfg = MonteCarloConfig::new(50_000, 77);
    let sq = box_polytope(1.0, 2);
    let x = fractional_perimeter(&sq, 0.4, &cfg).unwrap();
    let y = fractional_perimeter(&sq, 0.4, &cfg).unwrap();
    check(&mut f, x == y, "MC not deterministic");

    // Quadrature oracle agreement.
    let mut errs = Vec::new();
    for s in [0.25, 0.5, 0.75] {
        let oracle = square_oracle(s);
        let est = fractional_perimeter(&sq, s, &MonteCarloConfig::new(1_000_000, 17)).unwrap();
        let rel = (est.value - oracle).abs() / oracle;
        errs.push(format!("s={s}: {rel:.1e}"));
        check(&mut f, rel <= 0.01, format!("s={s}: MC {} vs oracle {oracle}", est.value));
    }
    finish(
        f,
        format!("{} cells: symmetry, scaling, Euler, invariance, determinism; square oracle rel err {}", lattices.len(), errs.join(", ")),
        t.elapsed(),
        Duration::from_secs(300),
    )
}

fn criterion_10() -> Outcome {
    let t = Instant::now();
    let mut f = Vec::new();
    let fcc = perturb_test(&catalog(CatalogName::Fcc, 3).unwrap(), 1e-2, 200, 10).unwrap();
    let z3 = perturb_test(&catalog(CatalogName::Z, 3).unwrap(), 5e-2, 200, 10).unwrap();
    check(&mut f, !fcc.improved, format!("FCC improved to {}", fcc.min));
    check(&mut f, z3.improved, "Z3 not improved");
    finish(
        f,
        format!(
            "FCC eps 1e-2: min {:.6} ≥ base {:.6}; Z3 eps 5e-2: min {:.6} < base {:.6}",
            fcc.min, fcc.base, z3.min, z3.base
        ),
        t.elapsed(),
        Duration::from_secs(120),
    )
}

fn main() {
    // Honour `cargo test -- --list` style probes without running the suite.
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("rhombic dodecahedron ratio", criterion_1),
        ("truncated octahedron ratio and Kelvin bound", criterion_2),
        ("catalog invariants", criterion_3),
        ("fundamental-domain volume and permutohedron facets", criterion_4),
        ("D4 cell is the 24-cell", criterion_5),
        ("Plateau reports", criterion_6),
        ("optimizer dim 2", criterion_7),
        ("optimizer dim 3", criterion_8),
        ("property suites", criterion_9),
        ("perturbation tests", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|p| Outcome {
            pass: false,
            detail: format!(
                "panicked: {}",
                p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
            ),
        });
        if !outcome.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {}: {}: {}",
            i + 1,
            if outcome.pass { "PASS" } else { "FAIL" },
            name,
            outcome.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
