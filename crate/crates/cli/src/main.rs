//! `mellin`: evaluate K, E, their saddle-point asymptotics and the
//! verification suites for a moment function given as JSON.
//!
//! Exit codes: 0 success, 1 a `verify` suite failed, 2 bad arguments or
//! spec, 3 numerical failure.

mod args;
mod commands;
mod output;

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use mellin_core::catalog::{build_positive_type, EllKind, PositiveTypeSpec, SlowlyVaryingEll};
use mellin_core::verification::{
    default_positivity_grid, scan_ratio, verify_carleman, verify_moments, verify_positivity, verify_theorem3_limits,
    VerificationReport, Which,
};
use mellin_core::{build, AdmissibleFunction, FunctionSpec, LogSurfacePoint, MellinError};

use args::{parse_at, parse_contour, parse_grid, Grid};
use commands::Context;
use output::{sink, write_csv, write_json, write_records, Format, Record};

#[derive(Parser)]
#[command(name = "mellin", version, about = "Inverse Mellin transforms and moment series with their asymptotics")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,

    /// FunctionSpec as a JSON file path or inline JSON.
    #[arg(long, global = true)]
    spec: Option<String>,

    /// Grid over |z|: r=A..B,n=N[,psi=P or psi=P1..P2[,m=M]][,spacing=log|linear].
    #[arg(long, global = true, conflicts_with = "at")]
    grid: Option<String>,

    /// Single point: r=R,psi=P or log_r=L,psi=P.
    #[arg(long, global = true)]
    at: Option<String>,

    /// Contour for eval-K: lalpha:ALPHA[,vertex=V] or vertical:C.
    #[arg(long, global = true)]
    contour: Option<String>,

    /// Relative tolerance for quadrature, series and root finding.
    #[arg(long, global = true, value_name = "REL")]
    tol: Option<f64>,

    /// Write to this file instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Subcommand)]
enum Verb {
    /// K(z) by contour quadrature.
    #[command(name = "eval-K")]
    EvalK,
    /// E(z) by its power series.
    #[command(name = "eval-E")]
    EvalE,
    /// Saddle-point formula for K.
    #[command(name = "asym-K")]
    AsymK,
    /// Saddle-point formula for z E(z) + 1/γ(0).
    #[command(name = "asym-E")]
    AsymE,
    /// Solve Φ(s) = log z.
    Saddle,
    /// Abel–Plana right-hand side for z E(z) + 1/γ(0).
    #[command(name = "abel-plana")]
    AbelPlana,
    /// Moments ∫ t^n K(t) dt for n = 0..=N.
    Moment {
        #[arg(default_value_t = 10)]
        n_max: u32,
    },
    /// arg z at which the saddle reaches |θ_z| = ALPHA, over the grid in r.
    Boundary {
        /// Defaults to π/2.
        alpha: Option<String>,
    },
    /// Run a verification suite; exit 1 if it fails.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        /// Suite size: n_max for moments, N for carleman.
        size: Option<u64>,
    },
    /// Numeric value, asymptotic formula and their ratio over the grid.
    Table {
        #[arg(value_enum, default_value_t = Which2::K)]
        which: Which2,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Moments,
    Positivity,
    Carleman,
    Theorem3,
    RatioK,
    RatioE,
}

#[derive(Clone, Copy, ValueEnum)]
enum Which2 {
    K,
    E,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Numeric(String),
    SuiteFailed,
}

impl Failure {
    fn from_mellin(context: &str, e: MellinError) -> Self {
        if e.is_input_error() {
            Failure::Input(format!("{context}: {e}"))
        } else {
            Failure::Numeric(format!("{context}: {e}"))
        }
    }

    fn code(&self) -> u8 {
        match self {
            Failure::SuiteFailed => 1,
            Failure::Input(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }
}

type Outcome = Result<(), Failure>;

fn io_failure(e: std::io::Error) -> Failure {
    Failure::Input(format!("output: {e}"))
}

fn load_spec(source: Option<&str>) -> Result<FunctionSpec, Failure> {
    let source = source.ok_or_else(|| Failure::Input("--spec is required".into()))?;
    let text = if source.trim_start().starts_with('{') {
        source.to_string()
    } else {
        fs::read_to_string(source).map_err(|e| Failure::Input(format!("--spec {source}: {e}")))?
    };
    FunctionSpec::from_json(&text).map_err(|e| Failure::from_mellin("--spec", e))
}

fn load_function(spec: &FunctionSpec) -> Result<AdmissibleFunction, Failure> {
    build(spec).map_err(|e| Failure::from_mellin("--spec", e))
}

/// Points from `--at` or `--grid`; `single` marks the `--at` form.
fn points(cli: &Cli) -> Result<(Vec<LogSurfacePoint>, bool), Failure> {
    let bad = |flag: &str, e: String| Failure::Input(format!("{flag}: {e}"));
    if let Some(at) = &cli.at {
        let (log_r, psi) = parse_at(at).map_err(|e| bad("--at", e))?;
        let z = LogSurfacePoint::new(log_r, psi).map_err(|e| Failure::from_mellin("--at", e))?;
        return Ok((vec![z], true));
    }
    let grid = cli.grid.as_deref().ok_or_else(|| Failure::Input("one of --grid or --at is required".into()))?;
    let g = parse_grid(grid).map_err(|e| bad("--grid", e))?;
    let zs = g
        .points()
        .into_iter()
        .map(|(r, psi)| LogSurfacePoint::from_polar(r, psi).map_err(|e| Failure::from_mellin("--grid", e)))
        .collect::<Result<_, _>>()?;
    Ok((zs, false))
}

fn grid_values(cli: &Cli) -> Result<Option<Grid>, Failure> {
    cli.grid.as_deref().map(|g| parse_grid(g).map_err(|e| Failure::Input(format!("--grid: {e}")))).transpose()
}

fn context(cli: &Cli) -> Result<Context, Failure> {
    let max_nodes = match std::env::var("MELLIN_MAX_NODES") {
        Ok(v) => Some(v.trim().parse::<usize>().map_err(|_| Failure::Input(format!("MELLIN_MAX_NODES: not a count: '{v}'")))?),
        Err(_) => None,
    };
    if let Some(t) = cli.tol {
        if !(t > 0.0 && t < 1.0) {
            return Err(Failure::Input(format!("--tol must lie in (0, 1), got {t}")));
        }
    }
    let contour = cli.contour.as_deref().map(parse_contour).transpose().map_err(|e| Failure::Input(format!("--contour: {e}")))?;
    Ok(Context { rel_tol: cli.tol, max_nodes, contour })
}

fn describe(z: &LogSurfacePoint) -> String {
    format!("at log_r={}, psi={}", z.log_r, z.psi)
}

/// Evaluates every point in parallel and keeps grid order; the first
/// failing point (in grid order) is reported.
fn per_point<T: Send>(
    zs: &[LogSurfacePoint],
    eval: impl Fn(LogSurfacePoint) -> mellin_core::Result<T> + Sync,
) -> Result<Vec<T>, Failure> {
    let results: Vec<_> = zs.par_iter().map(|&z| eval(z)).collect();
    zs.iter().zip(results).map(|(z, r)| r.map_err(|e| Failure::from_mellin(&describe(z), e))).collect()
}

fn run_points(cli: &Cli, eval: fn(&AdmissibleFunction, LogSurfacePoint, &Context) -> mellin_core::Result<Record>) -> Outcome {
    let f = load_function(&load_spec(cli.spec.as_deref())?)?;
    let ctx = context(cli)?;
    let (zs, single) = points(cli)?;
    let records = per_point(&zs, |z| eval(&f, z, &ctx))?;
    let mut w = sink(cli.out.as_deref()).map_err(io_failure)?;
    write_records(&mut *w, &records, cli.format, single).map_err(io_failure)
}

fn write_rows<T: serde::Serialize>(cli: &Cli, rows: &[T]) -> Outcome {
    let mut w = sink(cli.out.as_deref()).map_err(io_failure)?;
    match cli.format {
        Format::Csv => write_csv(&mut *w, rows),
        Format::Json => write_json(&mut *w, rows),
    }
    .map_err(io_failure)
}

fn theorem3_ell(spec: &FunctionSpec) -> Result<SlowlyVaryingEll, Failure> {
    if spec.kind != mellin_core::catalog::FunctionKind::Theorem3 {
        return Err(Failure::Input("verify theorem3 needs a spec of kind theorem3".into()));
    }
    let num = |k: &str, d: f64| -> Result<f64, Failure> {
        match spec.params.get(k) {
            None => Ok(d),
            Some(v) => v.as_f64().ok_or_else(|| Failure::Input(format!("--spec: theorem3 parameter '{k}' must be a number"))),
        }
    };
    let kind = match spec.params.get("ell").and_then(|v| v.as_str()).unwrap_or("power") {
        "power" => EllKind::Power,
        "exp_sqrt_log" => EllKind::ExpSqrtLog,
        "log" => EllKind::Log,
        other => return Err(Failure::Input(format!("--spec: unknown ell '{other}'"))),
    };
    Ok(SlowlyVaryingEll::new(kind, num("a", 1.0)?, num("c", 1.0)?))
}

fn verify(cli: &Cli, suite: Suite, size: Option<u64>) -> Outcome {
    let spec = load_spec(cli.spec.as_deref())?;
    let grid = grid_values(cli)?;
    let grid_r = grid.as_ref().map(|g| g.points().into_iter().map(|p| p.0).collect::<Vec<_>>());
    let report: mellin_core::Result<VerificationReport> = match suite {
        Suite::Moments => verify_moments(&load_function(&spec)?, size.unwrap_or(10) as u32),
        Suite::Positivity => {
            // A positive_type spec carries its own representation; anything else must build as one.
            let f = if spec.kind == mellin_core::catalog::FunctionKind::PositiveType {
                load_function(&spec)?
            } else {
                build_positive_type(&PositiveTypeSpec::gamma_plus_one()).map_err(|e| Failure::from_mellin("positivity", e))?
            };
            let t = grid_r.unwrap_or_else(|| default_positivity_grid(&f));
            verify_positivity(&f, &t)
        }
        Suite::Carleman => verify_carleman(&load_function(&spec)?, size.unwrap_or(4096)),
        Suite::Theorem3 => {
            let ladder = grid_r.unwrap_or_else(|| (5..=10).map(|k| 10f64.powi(k)).collect());
            verify_theorem3_limits(&theorem3_ell(&spec)?, &ladder)
        }
        Suite::RatioK | Suite::RatioE => {
            let which = if matches!(suite, Suite::RatioK) { Which::K } else { Which::E };
            let psi = grid.as_ref().map_or(0.0, |g| g.psi_min);
            let targets = grid_r.unwrap_or_else(|| vec![10.0, 20.0, 40.0, 80.0]);
            scan_ratio(&load_function(&spec)?, which, psi, &targets)
        }
    };
    let report = report.map_err(|e| Failure::from_mellin("verify", e))?;
    let mut w = sink(cli.out.as_deref()).map_err(io_failure)?;
    match cli.format {
        Format::Json => {
            w.write_all(report.to_json().as_bytes()).and_then(|_| writeln!(w)).and_then(|_| w.flush()).map_err(io_failure)?
        }
        Format::Csv => write_csv(&mut *w, &report.cases).map_err(io_failure)?,
    }
    if report.pass {
        Ok(())
    } else {
        Err(Failure::SuiteFailed)
    }
}

fn run(cli: &Cli) -> Outcome {
    match &cli.verb {
        Verb::EvalK => run_points(cli, commands::eval_k),
        Verb::EvalE => run_points(cli, commands::eval_e),
        Verb::AsymK => run_points(cli, commands::asym_k),
        Verb::AsymE => run_points(cli, commands::asym_e),
        Verb::Saddle => run_points(cli, commands::saddle),
        Verb::AbelPlana => run_points(cli, commands::abel_plana),
        Verb::Moment { n_max } => {
            let f = load_function(&load_spec(cli.spec.as_deref())?)?;
            let rows = commands::moments(&f, *n_max, &context(cli)?).map_err(|e| Failure::from_mellin("moment", e))?;
            write_rows(cli, &rows)
        }
        Verb::Boundary { alpha } => {
            let f = load_function(&load_spec(cli.spec.as_deref())?)?;
            let alpha = alpha.as_deref().map(args::number).transpose().map_err(|e| Failure::Input(format!("alpha: {e}")))?;
            let (zs, _) = points(cli)?;
            let rows = per_point(&zs, |z| commands::boundary(&f, z.log_r, alpha))?;
            write_rows(cli, &rows)
        }
        Verb::Verify { suite, size } => verify(cli, *suite, *size),
        Verb::Table { which } => {
            let f = load_function(&load_spec(cli.spec.as_deref())?)?;
            let ctx = context(cli)?;
            let (zs, _) = points(cli)?;
            let e = matches!(which, Which2::E);
            let rows = per_point(&zs, |z| commands::table(&f, z, e, &ctx))?;
            write_rows(cli, &rows)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            match &f {
                Failure::Input(m) | Failure::Numeric(m) => eprintln!("error: {m}"),
                Failure::SuiteFailed => eprintln!("verification failed"),
            }
            ExitCode::from(f.code())
        }
    }
}
