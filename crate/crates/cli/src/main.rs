//! `fracharm` — verification CLI for the fractional-harmonic library.
//!
//! Three subcommands cover the library surface: `kernel` evaluates the
//! closed-form kernels (optionally checking their unit mass), `fraclap`
//! evaluates the nonlocal operator or runs the mean-value convergence study,
//! and `verify` runs the aggregated verification suite. Every run emits one
//! machine-readable report — JSON (default) or CSV — with the exact run
//! configuration embedded, and exits 0 (success), 2 (argument or validation
//! error), or 3 (numerical non-convergence or failed checks); no other exit
//! codes are used.
//!
//! JSON reports are emitted with keys in a fixed order, so identical runs
//! produce byte-identical documents and a parse → re-emit round trip is the
//! identity. The environment variable `FRACHARM_THREADS` caps the worker
//! pool (default: machine parallelism).

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use fracharm::exec::par_map;
use fracharm::fraclap::{frac_laplacian, mv_truncated_reference_study, pv_integral};
use fracharm::halfspace::{poisson_extend, LiouvilleSolution};
use fracharm::kernels::{mean_value_kernel, poisson_kernel, riesz_kernel};
use fracharm::suite;
use fracharm::{Ball, Error, FracOrder, Point, QuadratureSpec, ScalarField, SpaceDim};

/// Tolerance of the `--norm-check` mass comparison against 1.
const NORM_TOLERANCE: f64 = 1e-6;

#[derive(Parser)]
#[command(
    name = "fracharm",
    version,
    about = "Evaluate fractional-harmonic kernels and operators, and run the verification suite"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a kernel at given points, optionally checking its unit mass
    Kernel(KernelArgs),
    /// Evaluate the nonlocal operator or run the mean-value convergence study
    Fraclap(FraclapArgs),
    /// Run the verification suite and report per-check pass/fail rows
    Verify(VerifyArgs),
}

#[derive(Args)]
struct OutputArgs {
    /// Report format
    #[arg(long, value_enum, default_value_t = OutFormat::Json)]
    out: OutFormat,
    /// Write the report to this file instead of stdout
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Json,
    Csv,
}

impl OutFormat {
    fn name(self) -> &'static str {
        match self {
            OutFormat::Json => "json",
            OutFormat::Csv => "csv",
        }
    }
}

#[derive(Args)]
struct KernelArgs {
    /// Which kernel to evaluate
    #[arg(long, value_enum)]
    which: WhichKernel,
    /// Ambient dimension n
    #[arg(long)]
    dim: usize,
    /// Fractional order alpha, inside the open interval (0, 2)
    #[arg(long)]
    alpha: f64,
    /// Ball as center:radius with a comma-separated center, e.g. 0,0:1
    /// (poisson kernel only)
    #[arg(long)]
    ball: Option<String>,
    /// First point (comma-separated coordinates): the interior point for
    /// poisson, the kernel center for epsilon (default: origin), the pole
    /// for riesz
    #[arg(long)]
    x: Option<String>,
    /// Second point: the exterior point for poisson, the evaluation point
    /// for epsilon and riesz
    #[arg(long)]
    y: Option<String>,
    /// Kernel radius r of the mean-value kernel (epsilon only)
    #[arg(long, default_value_t = 1.0)]
    radius: f64,
    /// Also integrate the kernel and report its total mass against 1
    #[arg(long)]
    norm_check: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum WhichKernel {
    Poisson,
    Epsilon,
    Riesz,
}

impl WhichKernel {
    fn name(self) -> &'static str {
        match self {
            WhichKernel::Poisson => "poisson",
            WhichKernel::Epsilon => "epsilon",
            WhichKernel::Riesz => "riesz",
        }
    }
}

#[derive(Args)]
struct FraclapArgs {
    /// Test field the operator acts on
    #[arg(long, value_enum)]
    field: FieldKind,
    /// Operation to evaluate
    #[arg(long, value_enum)]
    op: OpKind,
    /// Ambient dimension n
    #[arg(long)]
    dim: usize,
    /// Fractional order alpha, inside the open interval (0, 2)
    #[arg(long)]
    alpha: f64,
    /// Evaluation point (comma-separated coordinates); repeat the flag to
    /// evaluate at several points
    #[arg(long = "point", required = true)]
    points: Vec<String>,
    /// Amplitude C of the half-space solution family (liouville field only)
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Radii grid of the mean-value study, comma-separated
    /// [default: 2^-3 .. 2^-8]
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    /// Relative quadrature tolerance [default: 1e-6]
    #[arg(long)]
    rel_tol: Option<f64>,
    /// Absolute quadrature tolerance [default: 1e-9; 2e-5 for the liouville
    /// field, whose boundary kink sets a coarser attainable floor]
    #[arg(long)]
    abs_tol: Option<f64>,
    /// Quadrature budget in integrand evaluations, at least 1000
    /// [default: 10000000; 40000000 for the liouville field]
    #[arg(long)]
    max_evals: Option<u64>,
    /// Safety multiplier on analytic tail-truncation radii [default: 4]
    #[arg(long)]
    tail_safety: Option<f64>,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum FieldKind {
    Liouville,
    Gaussian,
    Bump,
}

impl FieldKind {
    fn name(self) -> &'static str {
        match self {
            FieldKind::Liouville => "liouville",
            FieldKind::Gaussian => "gaussian",
            FieldKind::Bump => "bump",
        }
    }
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum OpKind {
    /// Bare principal-value integral
    Pv,
    /// Normalized fractional Laplacian
    Laplacian,
    /// Mean-value deviation study over a radii grid, with a fitted rate
    MvStudy,
}

impl OpKind {
    fn name(self) -> &'static str {
        match self {
            OpKind::Pv => "pv",
            OpKind::Laplacian => "laplacian",
            OpKind::MvStudy => "mv-study",
        }
    }
}

#[derive(Args)]
struct VerifyArgs {
    /// Comma-separated check names (default: every check)
    #[arg(long, value_delimiter = ',')]
    checks: Vec<String>,
    /// Seed offsetting the randomized checks' deterministic streams
    /// [default: 0]
    #[arg(long)]
    seed: Option<u64>,
    /// JSON config file ({"checks": [...], "seed": N}); explicit flags win
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

/// Shape of the `verify --config` file.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct VerifyFileConfig {
    #[serde(default)]
    checks: Option<Vec<String>>,
    #[serde(default)]
    seed: Option<u64>,
}

/// A failure that ends the process without a report: exit 2 for argument and
/// validation errors, 3 for numerical failures that have no partial result
/// to embed.
struct CliFail {
    code: u8,
    message: String,
}

impl CliFail {
    fn validation(message: impl Into<String>) -> Self {
        CliFail {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for CliFail {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::ConvergenceFailure { .. } | Error::Sampler(_) => 3,
            Error::InvalidArgument(_) | Error::Domain(_) => 2,
        };
        CliFail {
            code,
            message: e.to_string(),
        }
    }
}

/// One finished run: the report fields plus where and how to write them.
struct Report {
    command: &'static str,
    config: Value,
    results: Vec<Value>,
    pass: bool,
    out: OutFormat,
    output: Option<PathBuf>,
}

fn main() -> ExitCode {
    if let Err(fail) = init_threads() {
        eprintln!("error: {}", fail.message);
        return ExitCode::from(fail.code);
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(fail) => {
            eprintln!("error: {}", fail.message);
            ExitCode::from(fail.code)
        }
    }
}

/// Apply `FRACHARM_THREADS` before any parallel work starts.
fn init_threads() -> Result<(), CliFail> {
    let Ok(raw) = std::env::var("FRACHARM_THREADS") else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&k| k >= 1)
        .ok_or_else(|| {
            CliFail::validation(format!(
                "FRACHARM_THREADS must be a positive integer, got '{raw}'"
            ))
        })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliFail::validation(format!("thread pool setup failed: {e}")))
}

fn run(cli: Cli) -> Result<u8, CliFail> {
    let report = match cli.command {
        Command::Kernel(args) => cmd_kernel(args)?,
        Command::Fraclap(args) => cmd_fraclap(args)?,
        Command::Verify(args) => cmd_verify(args)?,
    };
    let text = match report.out {
        OutFormat::Json => {
            let doc = json!({
                "command": report.command,
                "config": report.config,
                "results": report.results,
                "pass": report.pass,
                "versions": {
                    "fracharm": fracharm::VERSION,
                    "fracharm-cli": env!("CARGO_PKG_VERSION"),
                },
            });
            let mut s = serde_json::to_string_pretty(&doc)
                .map_err(|e| CliFail::validation(format!("report serialization failed: {e}")))?;
            s.push('\n');
            s
        }
        OutFormat::Csv => csv_text(report.command, &report.results),
    };
    write_report(&text, &report.output)?;
    Ok(if report.pass { 0 } else { 3 })
}

fn cmd_kernel(args: KernelArgs) -> Result<Report, CliFail> {
    let dim = SpaceDim::new(args.dim)?;
    let alpha = FracOrder::new(args.alpha)?;
    let config = json!({
        "which": args.which.name(),
        "dim": args.dim,
        "alpha": args.alpha,
        "ball": args.ball,
        "x": args.x,
        "y": args.y,
        "radius": args.radius,
        "norm_check": args.norm_check,
        "out": args.output.out.name(),
        "output": args.output.output.as_ref().map(|p| p.display().to_string()),
    });
    let mut results = Vec::new();
    let mut pass = true;
    match args.which {
        WhichKernel::Poisson => {
            let ball = parse_ball(required(&args.ball, "--ball", "the poisson kernel")?, dim)?;
            let x = parse_point(required(&args.x, "--x", "the poisson kernel")?, dim)?;
            let y = parse_point(required(&args.y, "--y", "the poisson kernel")?, dim)?;
            let v = poisson_kernel(&ball, &x, &y, alpha)?;
            results.push(json!({ "label": "kernel-value", "value": v }));
            if args.norm_check {
                let one = ScalarField::constant(dim, 1.0)?;
                let spec = QuadratureSpec::default();
                let mass = poisson_extend(&one, &ball, &x, alpha, &spec).map(|e| e.value);
                pass &= push_mass_row(&mut results, mass)?;
            }
        }
        WhichKernel::Epsilon => {
            if args.y.is_none() && !args.norm_check {
                return Err(CliFail::validation(
                    "the epsilon kernel needs --y to evaluate, --norm-check to integrate, or both",
                ));
            }
            let center = match &args.x {
                Some(s) => parse_point(s, dim)?,
                None => Point::zero(dim),
            };
            if let Some(sy) = &args.y {
                let y = parse_point(sy, dim)?;
                let displacement = y.add_scaled(-1.0, &center);
                let v = mean_value_kernel(alpha, args.radius, &displacement)?;
                results.push(json!({ "label": "kernel-value", "value": v }));
            }
            if args.norm_check {
                let mass = suite::mean_value_mass(dim, alpha, args.radius);
                pass &= push_mass_row(&mut results, mass)?;
            }
        }
        WhichKernel::Riesz => {
            if args.norm_check {
                return Err(CliFail::validation(
                    "--norm-check applies to the unit-mass kernels (poisson, epsilon), not riesz",
                ));
            }
            let x = parse_point(required(&args.x, "--x", "the riesz kernel")?, dim)?;
            let y = parse_point(required(&args.y, "--y", "the riesz kernel")?, dim)?;
            let v = riesz_kernel(dim, alpha, &x, &y)?;
            results.push(json!({ "label": "kernel-value", "value": v }));
        }
    }
    Ok(Report {
        command: "kernel",
        config,
        results,
        pass,
        out: args.output.out,
        output: args.output.output,
    })
}

/// Append a mass-vs-1 row; a convergence failure embeds its partial estimate
/// instead of aborting the report. Returns whether the row passes.
fn push_mass_row(results: &mut Vec<Value>, mass: fracharm::Result<f64>) -> Result<bool, CliFail> {
    match mass {
        Ok(m) => {
            let err = (m - 1.0).abs();
            results.push(json!({
                "label": "kernel-mass",
                "value": m,
                "reference": 1.0,
                "abs_error": err,
                "tolerance": NORM_TOLERANCE,
                "converged": true,
            }));
            Ok(err <= NORM_TOLERANCE)
        }
        Err(Error::ConvergenceFailure { partial, context }) => {
            results.push(json!({
                "label": "kernel-mass",
                "value": partial.value,
                "reference": 1.0,
                "abs_error": (partial.value - 1.0).abs(),
                "tolerance": NORM_TOLERANCE,
                "converged": false,
                "error_estimate": partial.error_estimate,
                "n_evals": partial.n_evals,
                "context": context,
            }));
            Ok(false)
        }
        Err(other) => Err(other.into()),
    }
}

fn cmd_fraclap(args: FraclapArgs) -> Result<Report, CliFail> {
    let dim = SpaceDim::new(args.dim)?;
    let alpha = FracOrder::new(args.alpha)?;
    let liouville = args.field == FieldKind::Liouville;
    let spec = QuadratureSpec::new(
        args.rel_tol.unwrap_or(1e-6),
        args.abs_tol.unwrap_or(if liouville { 2e-5 } else { 1e-9 }),
        args.max_evals
            .unwrap_or(if liouville { 40_000_000 } else { 10_000_000 }),
        args.tail_safety.unwrap_or(4.0),
    )?;
    let points: Vec<Point> = args
        .points
        .iter()
        .map(|s| parse_point(s, dim))
        .collect::<Result<_, _>>()?;
    let u = match args.field {
        FieldKind::Liouville => LiouvilleSolution::new(args.c, alpha, dim)?.field(),
        FieldKind::Gaussian => ScalarField::gaussian(dim)?,
        FieldKind::Bump => ScalarField::bump(dim)?,
    };
    // The half-space solutions are annihilated by the operator, so their
    // rows carry the known reference 0; the other fields have no closed
    // form and report the value alone.
    let reference = liouville.then_some(0.0);
    let radii = args
        .radii
        .clone()
        .unwrap_or_else(|| (3..=8).map(|k| 0.5f64.powi(k)).collect());
    let config = json!({
        "field": args.field.name(),
        "op": args.op.name(),
        "dim": args.dim,
        "alpha": args.alpha,
        "c": args.c,
        "points": args.points,
        "radii": if args.op == OpKind::MvStudy { json!(radii) } else { Value::Null },
        "spec": spec,
        "out": args.output.out.name(),
        "output": args.output.output.as_ref().map(|p| p.display().to_string()),
    });
    let mut results = Vec::new();
    let mut pass = true;
    match args.op {
        OpKind::Pv | OpKind::Laplacian => {
            let per = par_map(points.len(), |i| {
                if args.op == OpKind::Pv {
                    pv_integral(&u, &points[i], alpha, &spec)
                } else {
                    frac_laplacian(&u, &points[i], alpha, &spec)
                }
            });
            for (i, res) in per.into_iter().enumerate() {
                let label = format!("p{i}");
                match res {
                    Ok(r) => {
                        let row = match reference {
                            Some(want) => json!({
                                "label": label,
                                "point": points[i].as_slice(),
                                "value": r.eval.value,
                                "reference": want,
                                "abs_error": (r.eval.value - want).abs(),
                                "error_estimate": r.eval.error_estimate,
                                "n_evals": r.eval.n_evals,
                                "converged": true,
                            }),
                            None => json!({
                                "label": label,
                                "point": points[i].as_slice(),
                                "value": r.eval.value,
                                "error_estimate": r.eval.error_estimate,
                                "n_evals": r.eval.n_evals,
                                "converged": true,
                            }),
                        };
                        results.push(row);
                    }
                    Err(Error::ConvergenceFailure { partial, context }) => {
                        pass = false;
                        results.push(json!({
                            "label": label,
                            "point": points[i].as_slice(),
                            "value": partial.value,
                            "error_estimate": partial.error_estimate,
                            "n_evals": partial.n_evals,
                            "converged": false,
                            "context": context,
                        }));
                    }
                    Err(other) => return Err(other.into()),
                }
            }
        }
        OpKind::MvStudy => {
            if points.len() != 1 {
                return Err(CliFail::validation(format!(
                    "--op mv-study evaluates at exactly one point, got {}",
                    points.len()
                )));
            }
            match mv_truncated_reference_study(&u, &points[0], alpha, &radii, &spec) {
                Ok(study) => {
                    let entry = serde_json::to_value(&study).map_err(|e| {
                        CliFail::validation(format!("report serialization failed: {e}"))
                    })?;
                    results.push(entry);
                }
                Err(Error::ConvergenceFailure { partial, context }) => {
                    pass = false;
                    results.push(json!({
                        "label": "partial",
                        "value": partial.value,
                        "error_estimate": partial.error_estimate,
                        "n_evals": partial.n_evals,
                        "converged": false,
                        "context": context,
                    }));
                }
                Err(other) => return Err(other.into()),
            }
        }
    }
    Ok(Report {
        command: "fraclap",
        config,
        results,
        pass,
        out: args.output.out,
        output: args.output.output,
    })
}

fn cmd_verify(args: VerifyArgs) -> Result<Report, CliFail> {
    let file_cfg = match &args.config {
        None => VerifyFileConfig {
            checks: None,
            seed: None,
        },
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliFail::validation(format!("cannot read config file {}: {e}", path.display()))
            })?;
            serde_json::from_str(&text)
                .map_err(|e| CliFail::validation(format!("config file {}: {e}", path.display())))?
        }
    };
    let checks: Vec<String> = if args.checks.is_empty() {
        file_cfg.checks.unwrap_or_default()
    } else {
        args.checks.clone()
    };
    let seed = args.seed.or(file_cfg.seed).unwrap_or(0);
    let config = json!({
        "checks": checks,
        "seed": seed,
        "config_file": args.config.as_ref().map(|p| p.display().to_string()),
        "out": args.output.out.name(),
        "output": args.output.output.as_ref().map(|p| p.display().to_string()),
    });
    let outcomes = suite::run_suite(&checks, seed)?;
    let pass = outcomes.iter().all(|c| c.pass);
    let results = outcomes
        .iter()
        .map(|c| {
            serde_json::to_value(c)
                .map_err(|e| CliFail::validation(format!("report serialization failed: {e}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Report {
        command: "verify",
        config,
        results,
        pass,
        out: args.output.out,
        output: args.output.output,
    })
}

fn required<'a>(opt: &'a Option<String>, flag: &str, what: &str) -> Result<&'a str, CliFail> {
    opt.as_deref()
        .ok_or_else(|| CliFail::validation(format!("{flag} is required for {what}")))
}

fn parse_point(text: &str, dim: SpaceDim) -> Result<Point, CliFail> {
    let mut coords = Vec::new();
    for tok in text.split(',') {
        let c: f64 = tok.trim().parse().map_err(|_| {
            CliFail::validation(format!(
                "point '{text}': cannot parse coordinate '{tok}'"
            ))
        })?;
        coords.push(c);
    }
    if coords.len() != dim.n() {
        return Err(CliFail::validation(format!(
            "point '{text}' has {} coordinates, but --dim is {}",
            coords.len(),
            dim.n()
        )));
    }
    Ok(Point::new(&coords)?)
}

fn parse_ball(text: &str, dim: SpaceDim) -> Result<Ball, CliFail> {
    let (center, radius) = text.rsplit_once(':').ok_or_else(|| {
        CliFail::validation(format!(
            "ball '{text}' must be center:radius, e.g. 0,0:1"
        ))
    })?;
    let center = parse_point(center, dim)?;
    let radius: f64 = radius.trim().parse().map_err(|_| {
        CliFail::validation(format!("ball '{text}': cannot parse radius '{radius}'"))
    })?;
    Ok(Ball::new(center, radius)?)
}

/// CSV rendering: fixed columns parameter,value,reference,abs_error, LF
/// endings, numbers in the same shortest round-trip form the JSON writer
/// uses. Verify rows map pass/fail to 1/0 against the reference 1; rows with
/// no numeric parameter carry their label in the parameter column; absent
/// fields are left empty.
fn csv_text(command: &str, results: &[Value]) -> String {
    let mut out = String::from("parameter,value,reference,abs_error\n");
    for entry in results {
        if command == "verify" {
            let name = entry["name"].as_str().unwrap_or("");
            let (value, abs_error) = if entry["pass"].as_bool().unwrap_or(false) {
                (1, 0)
            } else {
                (0, 1)
            };
            out.push_str(&format!("{name},{value},1,{abs_error}\n"));
        } else if let Some(rows) = entry.get("rows").and_then(Value::as_array) {
            for row in rows {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    cell(row.get("parameter")),
                    cell(row.get("value")),
                    cell(row.get("reference")),
                    cell(row.get("abs_error")),
                ));
            }
        } else {
            let parameter = entry
                .get("parameter")
                .and_then(Value::as_f64)
                .map(num)
                .or_else(|| {
                    entry
                        .get("label")
                        .and_then(Value::as_str)
                        .map(str::to_string)
                })
                .unwrap_or_default();
            out.push_str(&format!(
                "{parameter},{},{},{}\n",
                cell(entry.get("value")),
                cell(entry.get("reference")),
                cell(entry.get("abs_error")),
            ));
        }
    }
    out
}

fn cell(v: Option<&Value>) -> String {
    match v.and_then(Value::as_f64) {
        Some(x) => num(x),
        None => String::new(),
    }
}

/// Shortest round-trip decimal form — the same writer the JSON output uses.
fn num(x: f64) -> String {
    serde_json::to_string(&x).unwrap_or_else(|_| x.to_string())
}

fn write_report(text: &str, output: &Option<PathBuf>) -> Result<(), CliFail> {
    match output {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|()| stdout.flush())
                .map_err(|e| CliFail::validation(format!("cannot write report to stdout: {e}")))
        }
        Some(path) => std::fs::write(path, text).map_err(|e| {
            CliFail::validation(format!("cannot write report to {}: {e}", path.display()))
        }),
    }
}
