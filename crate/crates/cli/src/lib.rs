//! Command-line driver: validate definition files, run identity suites,
//! integral checks and geodesic/Clairaut runs over the built-in catalog or
//! user files, with deterministic text and JSON reports.

use std::fs;
use std::io::Write;

use clap::{Args, Parser, Subcommand, ValueEnum};

use oneill_core::catalog;
use oneill_core::error::Error;
use oneill_core::geodesic::{
    clairaut_drift, integrate_geodesic, mixed_ode_residual, trajectory_csv, IntegrateOpts,
};
use oneill_core::identities::{run_case, Case, RunConfig};
use oneill_core::manifold::{dump_submersion, parse_specs};
use oneill_core::quadrature::{run_formulas, QuadConfig};
use oneill_core::report::{fmt_float, render_json, render_text, CaseReport, IdentityReport};

#[derive(Parser, Debug)]
#[command(
    name = "oneill-lab",
    about = "Residual verification for semi-Riemannian submersions with totally umbilic fibres",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Args, Debug)]
pub struct CaseArgs {
    /// Catalog case id (see `list`).
    #[arg(long)]
    pub case: Option<String>,
    /// Definition file with one submersion.
    #[arg(long)]
    pub file: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List the built-in catalog.
    List {
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
    },
    /// Parse and validate a definition file, reporting diagnostics.
    Validate { file: String },
    /// Print a catalog entry's definition text for editing.
    Dump {
        #[arg(long)]
        case: String,
        #[arg(long)]
        out: Option<String>,
    },
    /// Run pointwise identity checks.
    Check {
        #[command(flatten)]
        target: CaseArgs,
        /// Comma-separated identity names, or `all`.
        #[arg(long, default_value = "all")]
        identities: String,
        /// Sample-grid resolution per axis (default sizes for ~64 points).
        #[arg(long)]
        grid: Option<usize>,
        /// Tolerance override for every check.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Write the report here instead of stdout.
        #[arg(long)]
        out: Option<String>,
    },
    /// Run global integral checks.
    Integrate {
        #[command(flatten)]
        target: CaseArgs,
        /// Comma-separated formula names, or `all`.
        #[arg(long, default_value = "all")]
        formula: String,
        /// Nodes per periodic axis (bounded axes use half, at least 8).
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long)]
        out: Option<String>,
    },
    /// Integrate a geodesic; optionally certify the Clairaut girth law or the
    /// mixed-curvature ODE along it.
    Geodesic {
        #[command(flatten)]
        target: CaseArgs,
        /// Launch point, comma-separated coordinates.
        #[arg(long)]
        x0: String,
        /// Launch velocity, comma-separated components.
        #[arg(long)]
        v0: String,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        /// Check constancy of w cosh(phi) with the case's girth function.
        #[arg(long, default_value_t = false)]
        clairaut: bool,
        /// Override the girth log f (w = exp f) as an expression in total coordinates.
        #[arg(long)]
        clairaut_girth: Option<String>,
        /// Check dh/dt = h^2 along a horizontal launch instead.
        #[arg(long, default_value_t = false)]
        mixed_ode: bool,
        /// Drift / residual tolerance (default 1e-5 for Clairaut, 1e-4 for the ODE).
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Write the trajectory CSV here.
        #[arg(long)]
        out: Option<String>,
    },
}

/// Honor the worker cap before any parallel work runs.
pub fn init_threads() {
    if let Ok(v) = std::env::var("ONEILL_LAB_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn load_case(target: &CaseArgs) -> Result<(Case, String), Error> {
    match (&target.case, &target.file) {
        (Some(id), None) => {
            let lc = catalog::load(id)?;
            let case = Case::from_catalog(&lc)?;
            Ok((case, id.clone()))
        }
        (None, Some(path)) => {
            let src = fs::read_to_string(path)
                .map_err(|e| Error::Invalid(format!("cannot read `{path}`: {e}")))?;
            let (ctx, name) = catalog::load_file_source(&src, path)?;
            Ok((Case::from_ctx(&name, ctx), name))
        }
        _ => Err(Error::Invalid(
            "exactly one of --case or --file is required".into(),
        )),
    }
}

fn parse_vec(s: &str, dim: usize, what: &str) -> Result<Vec<f64>, Error> {
    let v: Result<Vec<f64>, _> = s.split(',').map(|p| p.trim().parse::<f64>()).collect();
    let v = v.map_err(|e| Error::Invalid(format!("malformed {what} `{s}`: {e}")))?;
    if v.len() != dim {
        return Err(Error::Invalid(format!(
            "{what} has {} components, expected {dim}",
            v.len()
        )));
    }
    Ok(v)
}

fn emit(text: String, out: &Option<String>) -> Result<(), Error> {
    match out {
        None => {
            print!("{text}");
            std::io::stdout().flush().ok();
            Ok(())
        }
        Some(path) => fs::write(path, text)
            .map_err(|e| Error::Invalid(format!("cannot write `{path}`: {e}"))),
    }
}

fn finish(rows: Vec<CaseReport>, format: Format, out: &Option<String>) -> Result<i32, Error> {
    let all_pass = rows.iter().all(|r| r.pass);
    let text = match format {
        Format::Text => render_text(&rows),
        Format::Json => {
            let mut s = render_json(&rows);
            s.push('\n');
            s
        }
    };
    emit(text, out)?;
    Ok(if all_pass { 0 } else { 1 })
}

/// Run the `check` subcommand and return (rendered report, exit code); the
/// acceptance suite uses this to assert byte-identical reruns.
pub fn run_check(
    target: &CaseArgs,
    identities: &str,
    grid: Option<usize>,
    tol: Option<f64>,
    seed: u64,
) -> Result<(Vec<CaseReport>, i32), Error> {
    let (case, id) = load_case(target)?;
    let names: Vec<String> = identities.split(',').map(|s| s.trim().to_string()).collect();
    let cfg = RunConfig {
        seed,
        tol,
        resolution: grid,
    };
    if let Some(g) = grid {
        if g < 4 {
            return Err(Error::Invalid(format!(
                "grid resolution {g} below the minimum of 4 per axis"
            )));
        }
    }
    if let Some(t) = tol {
        if !(t > 0.0) {
            return Err(Error::Invalid("tolerance must be positive".into()));
        }
    }
    let reports = run_case(&case, &names, cfg)?;
    let rows: Vec<CaseReport> = reports
        .into_iter()
        .map(|r| CaseReport::new(&id, r))
        .collect();
    let code = if rows.iter().all(|r| r.pass) { 0 } else { 1 };
    Ok((rows, code))
}

fn cmd_list(format: Format) -> Result<i32, Error> {
    match format {
        Format::Text => {
            println!(
                "{:<22} {:>5} {:>5} {:>5} {:>6}  tags",
                "case", "dim", "base", "index", "fibre"
            );
            for entry in catalog::CATALOG {
                let lc = catalog::load(entry.id)?;
                let spec = &lc.ctx.spec;
                let tags: Vec<String> = entry.tags.iter().map(|t| format!("{t:?}")).collect();
                println!(
                    "{:<22} {:>5} {:>5} {:>5} {:>6}  {}",
                    entry.id,
                    spec.total.dim,
                    spec.base.dim,
                    spec.total.signature,
                    lc.ctx.r,
                    tags.join(" ")
                );
            }
        }
        Format::Json => {
            let items: Vec<serde_json::Value> = catalog::CATALOG
                .iter()
                .map(|entry| {
                    let lc = catalog::load(entry.id)?;
                    let spec = &lc.ctx.spec;
                    Ok(serde_json::json!({
                        "case": entry.id,
                        "total_dim": spec.total.dim,
                        "base_dim": spec.base.dim,
                        "index": spec.total.signature,
                        "fibre_dim": lc.ctx.r,
                        "aligned": spec.coordinate_aligned,
                        "tags": entry.tags.iter().map(|t| format!("{t:?}")).collect::<Vec<_>>(),
                        "note": entry.note,
                    }))
                })
                .collect::<Result<_, Error>>()?;
            println!("{}", serde_json::to_string_pretty(&items).unwrap());
        }
    }
    Ok(0)
}

fn cmd_validate(file: &str) -> i32 {
    let src = match fs::read_to_string(file) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot read `{file}`: {e}");
            return 2;
        }
    };
    match parse_specs(&src) {
        Err(d) => {
            eprintln!("{file}:{d}");
            2
        }
        Ok(parsed) => {
            let mut ok = true;
            for m in &parsed.manifolds {
                let grid = oneill_core::grid::standard_grid(m);
                if let Err(e) = m.validate_signature(&grid) {
                    eprintln!("error: {e}");
                    ok = false;
                }
            }
            for s in &parsed.submersions {
                let ctx = oneill_core::submersion::SubCtx::new(s.clone());
                let grid = oneill_core::grid::standard_grid(&s.total);
                if let Err(e) =
                    oneill_core::submersion::validate_submersion(&ctx, &grid[..grid.len().min(16)])
                {
                    eprintln!("error: submersion `{}`: {e}", s.name);
                    ok = false;
                }
            }
            if ok {
                println!(
                    "{file}: {} manifold(s), {} submersion(s) validated",
                    parsed.manifolds.len(),
                    parsed.submersions.len()
                );
                0
            } else {
                2
            }
        }
    }
}

fn cmd_geodesic(args: GeodesicArgs<'_>) -> Result<i32, Error> {
    let (case, id) = load_case(args.target)?;
    let ctx = &case.ctx;
    let x0 = parse_vec(args.x0, ctx.m, "--x0")?;
    let v0 = parse_vec(args.v0, ctx.m, "--v0")?;
    if args.dt <= 0.0 || args.steps == 0 {
        return Err(Error::Invalid("dt and steps must be positive".into()));
    }

    let mut rows: Vec<CaseReport> = Vec::new();
    let mut csv: Option<String> = None;

    if args.mixed_ode {
        let tol = args.tol.unwrap_or(1e-4);
        let run = mixed_ode_residual(ctx, &x0, &v0, args.dt, args.steps)?;
        let report = match run.skipped {
            Some(reason) => IdentityReport::skipped("mixed_ode", "dh/dt = h^2", tol, reason),
            None => IdentityReport::from_residuals("mixed_ode", "dh/dt = h^2", &[run.residual], tol),
        };
        rows.push(CaseReport::new(&id, report));
    } else if args.clairaut || args.girth_override.is_some() {
        let tol = args.tol.unwrap_or(1e-5);
        let girth = match args.girth_override {
            Some(src) => oneill_core::dsl::parser::parse_expr(src, &ctx.spec.total.coords)
                .map_err(Error::from)?,
            None => case.girth_log.clone().ok_or_else(|| {
                Error::Invalid(format!("case `{id}` carries no girth; use --clairaut-girth"))
            })?,
        };
        let run = clairaut_drift(ctx, &girth, &x0, &v0, args.dt, args.steps)?;
        let mut report = IdentityReport::from_residuals(
            "clairaut_drift",
            "w cosh(phi) constant along timelike geodesics",
            &[run.drift],
            tol,
        );
        report.samples = run.samples.len();
        if run.trajectory.exited.is_some() {
            report.pass = false;
        }
        rows.push(CaseReport::new(&id, report));
        let energy = IdentityReport::from_residuals(
            "energy_drift",
            "g(v,v) conserved along geodesics",
            &[run.trajectory.energy_drift / (1.0 + run.trajectory.energy0.abs())],
            1e-6,
        );
        rows.push(CaseReport::new(&id, energy));
        if args.out.is_some() {
            csv = Some(trajectory_csv(ctx, &run.trajectory, Some(&girth))?);
        }
        if let Some(exit) = &run.trajectory.exited {
            eprintln!(
                "warning: chart exit at step {} ({} = {})",
                exit.step, exit.coord, exit.value
            );
        }
    } else {
        let traj = integrate_geodesic(
            &ctx.total,
            &ctx.spec.total.coords,
            &x0,
            &v0,
            args.dt,
            args.steps,
            IntegrateOpts::default(),
        )?;
        let energy = IdentityReport::from_residuals(
            "energy_drift",
            "g(v,v) conserved along geodesics",
            &[traj.energy_drift / (1.0 + traj.energy0.abs())],
            1e-6,
        );
        let mut row = CaseReport::new(&id, energy);
        if let Some(exit) = &traj.exited {
            row.skipped = Some(format!(
                "chart exit at step {} ({} = {})",
                exit.step,
                exit.coord,
                fmt_float(exit.value)
            ));
        }
        rows.push(row);
        if args.out.is_some() {
            let girth = case.girth_log.clone();
            csv = Some(trajectory_csv(ctx, &traj, girth.as_ref())?);
        }
    }

    if let (Some(path), Some(csv)) = (args.out, &csv) {
        fs::write(path, csv).map_err(|e| Error::Invalid(format!("cannot write `{path}`: {e}")))?;
    }
    let code = if rows.iter().all(|r| r.pass) { 0 } else { 1 };
    let text = match args.format {
        Format::Text => render_text(&rows),
        Format::Json => {
            let mut s = render_json(&rows);
            s.push('\n');
            s
        }
    };
    print!("{text}");
    Ok(code)
}

struct GeodesicArgs<'a> {
    target: &'a CaseArgs,
    x0: &'a str,
    v0: &'a str,
    dt: f64,
    steps: usize,
    clairaut: bool,
    girth_override: Option<&'a str>,
    mixed_ode: bool,
    tol: Option<f64>,
    format: Format,
    out: Option<&'a str>,
}

pub fn run(cli: Cli) -> i32 {
    let outcome: Result<i32, Error> = match &cli.command {
        Command::List { format } => cmd_list(*format),
        Command::Validate { file } => Ok(cmd_validate(file)),
        Command::Dump { case, out } => (|| {
            let lc = catalog::load(case)?;
            let text = dump_submersion(&lc.ctx.spec);
            emit(text, out)?;
            Ok(0)
        })(),
        Command::Check {
            target,
            identities,
            grid,
            tol,
            seed,
            format,
            out,
        } => run_check(target, identities, *grid, *tol, *seed)
            .and_then(|(rows, _)| finish(rows, *format, out)),
        Command::Integrate {
            target,
            formula,
            grid,
            seed,
            format,
            out,
        } => (|| {
            let (case, id) = load_case(target)?;
            if *grid < 4 {
                return Err(Error::Invalid("grid must be at least 4".into()));
            }
            let cfg = QuadConfig {
                periodic_nodes: *grid,
                bounded_nodes: (*grid / 2).max(8),
                seed: *seed,
            };
            let names: Vec<String> = formula.split(',').map(|s| s.trim().to_string()).collect();
            let reports = run_formulas(&case, &names, &cfg)?;
            let rows: Vec<CaseReport> = reports
                .into_iter()
                .map(|r| CaseReport::new(&id, r))
                .collect();
            finish(rows, *format, out)
        })(),
        Command::Geodesic {
            target,
            x0,
            v0,
            dt,
            steps,
            clairaut,
            clairaut_girth,
            mixed_ode,
            tol,
            format,
            out,
        } => cmd_geodesic(GeodesicArgs {
            target,
            x0,
            v0,
            dt: *dt,
            steps: *steps,
            clairaut: *clairaut,
            girth_override: clairaut_girth.as_deref(),
            mixed_ode: *mixed_ode,
            tol: *tol,
            format: *format,
            out: out.as_deref(),
        }),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
