use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use foamlab::functionals::{self, MonteCarloConfig, RatioSpec};
use foamlab::lattice::{catalog, CatalogName, Lattice, LatticeFile};
use foamlab::optimizer::{self, InitialLattice, OptimizerConfig};
use foamlab::plateau::{self, PlateauReport};
use foamlab::polytope::{fmt12, Polytope, PolytopeFile};
use foamlab::voronoi::{self, tiling_skeleton, voronoi_cell};
use foamlab::Error;
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "foamlab", version, about = "Lattice Voronoi cells, perimeters and Plateau checks")]
struct Cli {
    /// Output format
    #[arg(long, value_enum, default_value_t = Format::Table, global = true)]
    format: Format,
    /// Write the result to this file instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Off,
    Table,
}

impl Format {
    fn name(self) -> &'static str {
        match self {
            Format::Json => "json",
            Format::Csv => "csv",
            Format::Off => "off",
            Format::Table => "table",
        }
    }
}

#[derive(clap::Args)]
struct Source {
    /// Catalog name (z, a, astar, d, dplus, e8, hex, fcc, bcc; digits give the
    /// dimension, e.g. d4) or a path to a lattice JSON file
    lattice: String,
    /// Dimension for catalog families
    #[arg(long)]
    dim: Option<usize>,
}

#[derive(clap::Args)]
struct McArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200_000)]
    samples: usize,
    /// Number of batches used for the standard error
    #[arg(long, default_value_t = 20)]
    batch: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Lattice invariants
    Info(Source),
    /// Voronoi cell export, normalized to inradius 1
    Voronoi {
        #[command(flatten)]
        source: Source,
        /// Dump the tiling face structure instead of the cell (JSON)
        #[arg(long)]
        skeleton: bool,
    },
    /// Isoperimetric ratio of the Voronoi cell
    Ratio {
        #[command(flatten)]
        source: Source,
        /// Inradius exponent (default N-1)
        #[arg(long)]
        exponent: Option<f64>,
    },
    /// Plateau-condition check of the Voronoi tiling
    Plateau {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = plateau::DEFAULT_TOL_DEG)]
        tol_deg: f64,
    },
    /// Fractional s-perimeter of the Voronoi cell (or a polytope JSON file)
    Fracper {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 0.5)]
        s: f64,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Riesz energy of the Voronoi cell (or a polytope JSON file)
    Riesz {
        #[command(flatten)]
        source: Source,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[command(flatten)]
        mc: McArgs,
    },
    /// Nelder-Mead search over lattices for the smallest ratio
    Optimize {
        #[arg(long)]
        dim: usize,
        #[arg(long, default_value_t = 10)]
        restarts: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 4000)]
        max_iters: usize,
        /// Catalog starting lattices, comma separated; remaining restarts are random
        #[arg(long, value_delimiter = ',')]
        start: Vec<String>,
        /// Also write the trace CSV (restart, iter, ratio) here
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Check that a polytope tiles space under a lattice
    CheckDomain {
        /// Polytope JSON file, or a lattice whose Voronoi cell is used
        cell: String,
        /// Lattice source
        #[arg(long)]
        lattice: String,
        #[arg(long)]
        dim: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
    },
    /// Recompute published constants and compare with stored values
    Reproduce {
        /// Target: prop5
        target: String,
    },
}

enum Failure {
    Usage(String),
    Compute(Error),
    Drift(String),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Compute(e)
    }
}

type CliResult<T> = Result<T, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("FOAMLAB_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
    {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let result = run(&cli).and_then(|text| emit(&cli, &text));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Compute(e)) => {
            eprintln!("{} error: {e}", e.module());
            if e.module() == "input" {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
        Err(Failure::Drift(diff)) => {
            print!("{diff}");
            eprintln!("reproduce: values drifted from the stored constants");
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("io error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn emit(cli: &Cli, text: &str) -> CliResult<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn unsupported(cli: &Cli, what: &str) -> Failure {
    Failure::Usage(format!("format {} is not supported by {what}", cli.format.name()))
}

fn parse_catalog(spec: &str, dim: Option<usize>) -> CliResult<Lattice> {
    let lower = spec.to_ascii_lowercase();
    let split = lower.trim_end_matches(|c: char| c.is_ascii_digit()).len();
    let (name, digits) = lower.split_at(split);
    // "e8" is a name in its own right.
    let (name, digits) = match name.parse::<CatalogName>() {
        Ok(_) => (name.to_string(), digits),
        Err(_) => (lower.clone(), ""),
    };
    let name: CatalogName = name
        .parse()
        .map_err(|_| Failure::Usage(format!("unknown lattice '{spec}'")))?;
    let from_name = if digits.is_empty() {
        None
    } else {
        Some(digits.parse::<usize>().map_err(|_| Failure::Usage(format!("bad dimension in '{spec}'")))?)
    };
    let n = match (from_name, dim, name.fixed_dim()) {
        (Some(a), Some(b), _) if a != b => {
            return Err(Failure::Usage(format!("'{spec}' conflicts with --dim {b}")))
        }
        (Some(a), _, _) | (None, Some(a), _) | (None, None, Some(a)) => a,
        (None, None, None) => return Err(Failure::Usage(format!("'{spec}' needs a dimension (e.g. --dim 3)"))),
    };
    Ok(catalog(name, n)?)
}

fn read_json(path: &Path) -> CliResult<Value> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn is_path(spec: &str) -> bool {
    spec.ends_with(".json") || Path::new(spec).is_file()
}

fn load_lattice(spec: &str, dim: Option<usize>) -> CliResult<Lattice> {
    if is_path(spec) {
        let v = read_json(Path::new(spec))?;
        let file: LatticeFile = serde_json::from_value(v)
            .map_err(|e| Failure::Usage(format!("{spec}: not a lattice file: {e}")))?;
        Ok(Lattice::from_file(&file)?)
    } else {
        parse_catalog(spec, dim)
    }
}

/// A polytope JSON file, or the inradius-1 Voronoi cell of a lattice source.
fn load_body(spec: &str, dim: Option<usize>) -> CliResult<(String, Polytope)> {
    if is_path(spec) {
        let v = read_json(Path::new(spec))?;
        if v.get("facets").is_some() {
            let file: PolytopeFile = serde_json::from_value(v)
                .map_err(|e| Failure::Usage(format!("{spec}: not a polytope file: {e}")))?;
            return Ok((spec.to_string(), Polytope::from_file(&file)?));
        }
    }
    let l = load_lattice(spec, dim)?;
    Ok((spec.to_string(), normalized_cell(&l)?))
}

fn normalized_cell(l: &Lattice) -> CliResult<Polytope> {
    Ok(voronoi_cell(&optimizer::normalize_to_inradius(l, 1.0)?)?)
}

fn table(rows: &[(&str, String)]) -> String {
    let w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    rows.iter().fold(String::new(), |mut s, (k, v)| {
        let _ = writeln!(s, "{k:<w$}  {v}");
        s
    })
}

fn pretty(v: &Value) -> String {
    format!("{}\n", serde_json::to_string_pretty(v).expect("json"))
}

fn run(cli: &Cli) -> CliResult<String> {
    match &cli.command {
        Command::Info(src) => info(cli, src),
        Command::Voronoi { source, skeleton } => export(cli, source, *skeleton),
        Command::Ratio { source, exponent } => ratio(cli, source, *exponent),
        Command::Plateau { source, tol_deg } => plateau_cmd(cli, source, *tol_deg),
        Command::Fracper { source, s, mc } => nonlocal(cli, source, mc, "fractional_perimeter", "s", *s),
        Command::Riesz { source, alpha, mc } => nonlocal(cli, source, mc, "riesz_energy", "alpha", *alpha),
        Command::Optimize {
            dim,
            restarts,
            seed,
            max_iters,
            start,
            trace,
        } => optimize_cmd(cli, *dim, *restarts, *seed, *max_iters, start, trace.as_deref()),
        Command::CheckDomain {
            cell,
            lattice,
            dim,
            seed,
            samples,
        } => check_domain(cli, cell, lattice, *dim, *seed, *samples),
        Command::Reproduce { target } => reproduce(cli, target),
    }
}

fn info(cli: &Cli, src: &Source) -> CliResult<String> {
    let l = load_lattice(&src.lattice, src.dim)?;
    let lambda = l.minimal_norm()?;
    let covering = if l.dim() <= foamlab::polytope::MAX_VERTEX_ENUM_DIM {
        Some(l.covering_radius()?)
    } else {
        None
    };
    let relevant = l.relevant_vectors()?.len();
    let reduction = l.reduce_basis();
    match cli.format {
        Format::Json => Ok(pretty(&json!({
            "lattice": src.lattice,
            "dim": l.dim(),
            "determinant": l.determinant(),
            "minimal_norm": lambda,
            "inradius": lambda / 2.0,
            "covering_radius": covering,
            "relevant_vectors": relevant,
            "reduced_product_ratio": reduction.product_ratio,
            "basis": l.to_file().basis,
        }))),
        Format::Table | Format::Csv => {
            let rows = vec![
                ("lattice", src.lattice.clone()),
                ("dim", l.dim().to_string()),
                ("d", fmt12(l.determinant())),
                ("lambda", fmt12(lambda)),
                ("rho", fmt12(lambda / 2.0)),
                ("r", covering.map(fmt12).unwrap_or_else(|| "n/a (dim > 4)".into())),
                ("relevant", relevant.to_string()),
                ("reduced_ratio", fmt12(reduction.product_ratio)),
            ];
            if cli.format == Format::Csv {
                Ok(rows.iter().fold("key,value\n".to_string(), |mut s, (k, v)| {
                    let _ = writeln!(s, "{k},{v}");
                    s
                }))
            } else {
                Ok(table(&rows))
            }
        }
        Format::Off => Err(unsupported(cli, "info")),
    }
}

fn export(cli: &Cli, src: &Source, skeleton: bool) -> CliResult<String> {
    let l = load_lattice(&src.lattice, src.dim)?;
    if skeleton {
        let scaled = optimizer::normalize_to_inradius(&l, 1.0)?;
        return match cli.format {
            Format::Json | Format::Table => Ok(pretty(&tiling_skeleton(&scaled)?.to_json())),
            _ => Err(unsupported(cli, "voronoi --skeleton")),
        };
    }
    let cell = normalized_cell(&l)?;
    match cli.format {
        Format::Off => Ok(cell.to_off()?),
        Format::Json => Ok(pretty(&serde_json::to_value(cell.to_file()).expect("json"))),
        Format::Table => {
            let counts: Vec<String> = cell.face_lattice().iter().map(|f| f.len().to_string()).collect();
            Ok(table(&[
                ("lattice", src.lattice.clone()),
                ("vertices", cell.vertices().len().to_string()),
                ("facets", cell.facets().len().to_string()),
                ("face_counts", counts.join(" ")),
                ("volume", fmt12(cell.volume()?)),
                ("surface", fmt12(cell.surface_area()?)),
                ("inradius", fmt12(cell.chebyshev_inradius()?.0)),
                ("circumradius", fmt12(cell.circumradius())),
            ]))
        }
        Format::Csv => {
            let mut s = String::new();
            for v in cell.vertices() {
                let row: Vec<String> = v.iter().map(|x| fmt12(*x)).collect();
                let _ = writeln!(s, "{}", row.join(","));
            }
            Ok(s)
        }
    }
}

fn ratio(cli: &Cli, src: &Source, exponent: Option<f64>) -> CliResult<String> {
    let (name, cell) = load_body(&src.lattice, src.dim)?;
    let spec = RatioSpec {
        exponent,
        ..RatioSpec::default()
    };
    let value = functionals::iso_ratio(&cell, &spec)?;
    let e = spec.exponent_for(cell.dim());
    match cli.format {
        Format::Json => Ok(pretty(&json!({
            "lattice": name,
            "ratio": value,
            "exponent": e,
            "perimeter": cell.surface_area()?,
            "inradius": cell.chebyshev_inradius()?.0,
        }))),
        Format::Table => Ok(format!("{}\n", fmt12(value))),
        Format::Csv => Ok(format!("lattice,exponent,ratio\n{name},{},{}\n", fmt12(e), fmt12(value))),
        Format::Off => Err(unsupported(cli, "ratio")),
    }
}

fn plateau_table(r: &PlateauReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:>8} {:>8} {:>5}  {:<20} {:>12}  angles_deg", "face_dim", "chambers", "count", "verdict", "deviation");
    for o in &r.orbits {
        let mut a = o.angles_deg.clone();
        a.sort_by(f64::total_cmp);
        a.dedup_by(|x, y| (*x - *y).abs() < 1e-6);
        let angles: Vec<String> = a.iter().map(|x| fmt12(*x)).collect();
        let _ = writeln!(
            s,
            "{:>8} {:>8} {:>5}  {:<20} {:>12}  {}",
            o.face_dim,
            o.chambers,
            o.count,
            o.verdict.as_str(),
            fmt12(o.deviation_deg),
            angles.join(" ")
        );
    }
    for n in &r.notes {
        let _ = writeln!(s, "note: {n}");
    }
    let _ = writeln!(s, "overall: {}", if r.pass { "PASS" } else { "FAIL" });
    s
}

fn plateau_cmd(cli: &Cli, src: &Source, tol: f64) -> CliResult<String> {
    let l = load_lattice(&src.lattice, src.dim)?;
    let r = plateau::plateau_check(&l, tol)?;
    match cli.format {
        Format::Json => Ok(pretty(&r.to_json())),
        Format::Table => Ok(plateau_table(&r)),
        Format::Csv => {
            let mut s = "face_dim,chambers,count,verdict,deviation_deg\n".to_string();
            for o in &r.orbits {
                let _ = writeln!(s, "{},{},{},{},{}", o.face_dim, o.chambers, o.count, o.verdict.as_str(), fmt12(o.deviation_deg));
            }
            Ok(s)
        }
        Format::Off => Err(unsupported(cli, "plateau")),
    }
}

fn nonlocal(cli: &Cli, src: &Source, mc: &McArgs, name: &str, key: &str, param: f64) -> CliResult<String> {
    let (body, cell) = load_body(&src.lattice, src.dim)?;
    let cfg = MonteCarloConfig {
        samples: mc.samples,
        seed: mc.seed,
        batch: mc.batch,
    };
    let est = if key == "s" {
        functionals::fractional_perimeter(&cell, param, &cfg)?
    } else {
        functionals::riesz_energy(&cell, param, &cfg)?
    };
    let record = functionals::estimate_json(name, &est, &cfg, json!({ key: param, "body": body }));
    match cli.format {
        Format::Json => Ok(pretty(&record)),
        Format::Table => Ok(table(&[
            ("functional", name.to_string()),
            ("body", body),
            (key, fmt12(param)),
            ("value", fmt12(est.value)),
            ("stderr", fmt12(est.stderr)),
            ("samples", est.samples_used.to_string()),
            ("seed", mc.seed.to_string()),
        ])),
        Format::Csv => Ok(format!(
            "functional,{key},value,stderr,samples,seed\n{name},{},{},{},{},{}\n",
            fmt12(param),
            fmt12(est.value),
            fmt12(est.stderr),
            est.samples_used,
            mc.seed
        )),
        Format::Off => Err(unsupported(cli, name)),
    }
}

fn optimize_cmd(
    cli: &Cli,
    dim: usize,
    restarts: usize,
    seed: u64,
    max_iters: usize,
    start: &[String],
    trace: Option<&Path>,
) -> CliResult<String> {
    let mut cfg = OptimizerConfig::new(dim, restarts, seed);
    cfg.max_iters = max_iters;
    for s in start {
        let name: CatalogName = s
            .parse()
            .map_err(|_| Failure::Usage(format!("unknown start lattice '{s}'")))?;
        cfg.initial.push(InitialLattice::Catalog(name));
    }
    let report = optimizer::optimize(&cfg)?;
    if let Some(path) = trace {
        std::fs::write(path, report.trace_csv()).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    }
    match cli.format {
        Format::Json => Ok(pretty(&serde_json::to_value(&report).expect("json"))),
        Format::Csv => Ok(report.trace_csv()),
        Format::Table => {
            let eq: Vec<String> = report
                .equivalences
                .iter()
                .filter(|e| e.equivalent)
                .map(|e| e.lattice.clone())
                .collect();
            Ok(table(&[
                ("dim", dim.to_string()),
                ("restarts", restarts.to_string()),
                ("seed", seed.to_string()),
                ("best_ratio", fmt12(report.best_ratio)),
                ("best_restart", report.best_restart.to_string()),
                ("equivalent_to", if eq.is_empty() { "none".into() } else { eq.join(",") }),
                ("flags", if report.flags.is_empty() { "none".into() } else { report.flags.join(",") }),
                ("note", report.note.clone()),
                ("wall_time_s", fmt12(report.wall_time_s)),
            ]))
        }
        Format::Off => Err(unsupported(cli, "optimize")),
    }
}

fn check_domain(cli: &Cli, cell: &str, lattice: &str, dim: Option<usize>, seed: u64, samples: usize) -> CliResult<String> {
    let l = load_lattice(lattice, dim)?;
    let body = if is_path(cell) {
        load_body(cell, dim)?.1
    } else {
        voronoi_cell(&load_lattice(cell, dim)?)?
    };
    let r = voronoi::fundamental_domain_check(&body, &l, samples, seed)?;
    match cli.format {
        Format::Json => Ok(pretty(&json!({ "report": r, "seed": seed, "samples": samples }))),
        Format::Table | Format::Csv => Ok(table(&[
            ("volume", fmt12(r.volume)),
            ("determinant", fmt12(r.determinant)),
            ("volume_ok", r.volume_ok.to_string()),
            ("max_overlap", fmt12(r.max_overlap_fraction)),
            ("uncovered", fmt12(r.uncovered_fraction)),
            ("threshold", fmt12(r.overlap_threshold)),
            ("verdict", if r.pass { "PASS".into() } else { "FAIL".into() }),
        ])),
        Format::Off => Err(unsupported(cli, "check-domain")),
    }
}

struct Check {
    quantity: &'static str,
    expected: String,
    measured: String,
    ok: bool,
}

fn numeric(quantity: &'static str, expected: f64, measured: f64, tol: f64) -> Check {
    Check {
        quantity,
        expected: fmt12(expected),
        measured: fmt12(measured),
        ok: (expected - measured).abs() <= tol,
    }
}

fn flag(quantity: &'static str, expected: bool, measured: bool) -> Check {
    Check {
        quantity,
        expected: expected.to_string(),
        measured: measured.to_string(),
        ok: expected == measured,
    }
}

fn reproduce(cli: &Cli, target: &str) -> CliResult<String> {
    if target != "prop5" {
        return Err(Failure::Usage(format!("unknown reproduce target '{target}' (available: prop5)")));
    }
    let spec = RatioSpec::default();
    let fcc = catalog(CatalogName::Fcc, 3)?;
    let bcc = catalog(CatalogName::Bcc, 3)?;
    let d4 = catalog(CatalogName::D, 4)?;
    let rd = functionals::iso_ratio(&voronoi_cell(&fcc)?, &spec)?;
    let to = functionals::iso_ratio(&voronoi_cell(&bcc)?, &spec)?;
    let kelvin = functionals::kelvin_bound_check()?;
    let p_fcc = plateau::plateau_check(&fcc, plateau::DEFAULT_TOL_DEG)?;
    let p_d4 = plateau::plateau_check(&d4, plateau::DEFAULT_TOL_DEG)?;
    let six_fail = p_fcc.violations().any(|o| o.face_dim == 0 && o.chambers == 6);

    let checks = vec![
        numeric("ratio_fcc", 12.0 * 2f64.sqrt(), rd, 1e-6),
        numeric("ratio_bcc", 4.0 * (2.0 * 3f64.sqrt() + 1.0), to, 1e-6),
        numeric("kelvin_bound", 0.998 * 4.0 * (2.0 * 3f64.sqrt() + 1.0), kelvin.kelvin_lower_bound, 1e-6),
        flag("kelvin_bound_exceeds_rd", true, kelvin.bound_exceeds_rhombic_dodecahedron),
        flag("plateau_fcc_pass", false, p_fcc.pass),
        flag("plateau_fcc_6_chamber_vertex_violation", true, six_fail),
        flag("plateau_d4_pass", true, p_d4.pass),
    ];
    let all_ok = checks.iter().all(|c| c.ok);
    let text = match cli.format {
        Format::Json => pretty(&json!({
            "target": target,
            "pass": all_ok,
            "checks": checks.iter().map(|c| json!({
                "quantity": c.quantity, "expected": c.expected, "measured": c.measured, "ok": c.ok
            })).collect::<Vec<_>>(),
        })),
        _ => {
            let mut s = format!("{:<40} {:>16} {:>16}  status\n", "quantity", "expected", "measured");
            for c in &checks {
                let _ = writeln!(s, "{:<40} {:>16} {:>16}  {}", c.quantity, c.expected, c.measured, if c.ok { "ok" } else { "DRIFT" });
            }
            s
        }
    };
    if all_ok {
        Ok(text)
    } else {
        Err(Failure::Drift(text))
    }
}
