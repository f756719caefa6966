//! The `ccauchy` command line.
//!
//! Data go to stdout, logs and the resolved configuration to stderr. Exit
//! codes: 0 success, 2 bad flags or input, 3 domain errors, 4 failed
//! verification.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufReader, Read, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use conformal_cauchy::densities::{pushforward_params, KentD2, Transform};
use conformal_cauchy::estimation::{
    loglik_euclid, mle_numeric, mle_sphere, sphere_loglik, MleConfig, MleResult, SphereMleResult, StationaryDiagnostics,
};
use conformal_cauchy::geometry::ExtendedPoint;
use conformal_cauchy::moebius::{inv_stereographic, stereographic_point};
use conformal_cauchy::moments::mom_estimate;
use conformal_cauchy::oracle::OracleConfig;
use conformal_cauchy::sampling::{
    sample_euclid_cauchy, sample_kent, sample_marginal, sample_sphere_cauchy, sample_uniform_sphere, RngStream,
};
use conformal_cauchy::{Error, Vector};

use crate::formats::{self, Family, FormatError};
use crate::grid::{density_grid, lambert_grid, Grid};
use crate::verify::{all_pass, parse_suite, run_suite, CRITERIA};

pub const SEED_ENV: &str = "CCAUCHY_SEED";
const DEFAULT_SEED: u64 = 7;

pub const EXIT_FLAGS: i32 = 2;
pub const EXIT_DOMAIN: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "ccauchy", version, about = "Cauchy families on R^d and S^d: sampling, fitting, transforms and checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw variates, one per CSV row.
    Sample(SampleArgs),
    /// Estimate parameters from a CSV of points.
    Fit(FitArgs),
    /// Apply a Möbius map to points or push a parameter forward.
    Transform(TransformArgs),
    /// Tabulate a density on a plotting grid.
    DensityGrid(GridArgs),
    /// Tabulate the d = 2, μ = 0 Kent-type density on the equal-area disk.
    LambertGrid(LambertArgs),
    /// Run the acceptance suite and print a JSON report.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FamilyName {
    EuclidCauchy,
    SphereCauchy,
    Kent,
    Marginal,
    UniformSphere,
}

impl FamilyName {
    fn as_str(self) -> &'static str {
        match self {
            FamilyName::EuclidCauchy => "euclid-cauchy",
            FamilyName::SphereCauchy => "sphere-cauchy",
            FamilyName::Kent => "kent",
            FamilyName::Marginal => "marginal",
            FamilyName::UniformSphere => "uniform-sphere",
        }
    }
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long, value_enum)]
    family: FamilyName,
    /// JSON parameters, or @path to a JSON file.
    #[arg(long)]
    params: String,
    #[arg(long)]
    n: usize,
    /// Defaults to $CCAUCHY_SEED, then 7.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 0)]
    stream: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FitFamily {
    Euclid,
    Sphere,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FitMethod {
    Mle,
    Mom,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long, value_enum)]
    family: FitFamily,
    #[arg(long, value_enum, default_value = "mle")]
    method: FitMethod,
    /// CSV of points; stdin when absent.
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    #[arg(long, default_value_t = 10_000)]
    max_evals: usize,
    #[arg(long, default_value_t = 3)]
    restarts: usize,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Debug, Args)]
struct TransformArgs {
    /// JSON map, chain (array, outermost first), sphere map,
    /// "stereographic" or "inverse-stereographic"; or @path.
    #[arg(long)]
    map: String,
    /// Push this JSON parameter forward instead of transforming points.
    #[arg(long)]
    param: Option<String>,
    /// CSV of points; stdin when absent.
    #[arg(long, conflicts_with = "param")]
    input: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GridArgs {
    #[arg(long, value_enum)]
    family: FamilyName,
    #[arg(long)]
    params: String,
    #[arg(long, default_value_t = 201)]
    size: usize,
    /// Lower end of the Euclidean plotting window.
    #[arg(long, default_value_t = -5.0, allow_hyphen_values = true)]
    lo: f64,
    #[arg(long, default_value_t = 5.0, allow_hyphen_values = true)]
    hi: f64,
}

#[derive(Debug, Args)]
struct LambertArgs {
    #[arg(long, allow_hyphen_values = true)]
    a11: f64,
    #[arg(long, allow_hyphen_values = true)]
    a12: f64,
    #[arg(long, allow_hyphen_values = true)]
    a22: f64,
    #[arg(long, default_value_t = 201)]
    size: usize,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// "all" or criterion numbers such as 1,3,5-7.
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long)]
    seed: Option<u64>,
}

/// A failure with its exit code and a message naming the flag involved.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn flag(flag: &str, msg: impl std::fmt::Display) -> Self {
        Self { code: EXIT_FLAGS, message: format!("{flag}: {msg}") }
    }

    /// Malformed values are flag errors; a well-formed value the model
    /// rejects is a domain error.
    fn core(flag: &str, e: Error) -> Self {
        let code = match e {
            Error::InvalidParameter(_) | Error::DimensionMismatch { .. } | Error::KindMismatch | Error::Empty => EXIT_FLAGS,
            _ => EXIT_DOMAIN,
        };
        Self { code, message: format!("{flag}: {e}") }
    }

    fn format(flag: &str, e: FormatError) -> Self {
        match e {
            FormatError::Core(e) => Self::core(flag, e),
            other => Self::flag(flag, other),
        }
    }

    fn io(e: io::Error) -> Self {
        Self { code: 1, message: format!("output: {e}") }
    }
}

type CliResult<T> = Result<T, Failure>;

struct Io<'a> {
    stdin: &'a mut dyn Read,
    stdout: &'a mut dyn Write,
    stderr: &'a mut dyn Write,
}

/// Runs `ccauchy` with the process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let (stdin, stdout, stderr) = (io::stdin(), io::stdout(), io::stderr());
    run_with(argv, &mut stdin.lock(), &mut stdout.lock(), &mut stderr.lock())
}

/// Runs `ccauchy` against the given streams and returns the exit code.
pub fn run_with<I, T>(argv: I, stdin: &mut dyn Read, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_FLAGS } else { 0 };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { write!(stderr, "{text}") } else { write!(stdout, "{text}") };
            return code;
        }
    };
    let mut io = Io { stdin, stdout, stderr };
    match dispatch(cli.command, &mut io) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(io.stderr, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cmd: Command, io: &mut Io) -> CliResult<i32> {
    match cmd {
        Command::Sample(a) => sample(a, io),
        Command::Fit(a) => fit(a, io),
        Command::Transform(a) => transform(a, io),
        Command::DensityGrid(a) => grid_cmd(a, io),
        Command::LambertGrid(a) => lambert(a, io),
        Command::Verify(a) => verify(a, io),
    }
}

fn resolve_seed(flag: Option<u64>) -> CliResult<u64> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match std::env::var(SEED_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| Failure::flag(SEED_ENV, format!("not an unsigned integer: '{v}'"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

/// The flag value itself, or the contents of the file after `@`.
fn inline_or_file(flag: &str, value: &str) -> CliResult<String> {
    match value.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path).map_err(|e| Failure::flag(flag, format!("{path}: {e}"))),
        None => Ok(value.to_string()),
    }
}

fn read_input(io: &mut Io, path: &Option<PathBuf>) -> CliResult<Vec<ExtendedPoint>> {
    let points = match path {
        Some(p) => {
            let f = File::open(p).map_err(|e| Failure::flag("--input", format!("{}: {e}", p.display())))?;
            formats::read_points(BufReader::new(f))
        }
        None => formats::read_points(&mut *io.stdin),
    };
    points.map_err(|e| Failure::format("--input", e))
}

fn finite_input(io: &mut Io, path: &Option<PathBuf>) -> CliResult<Vec<Vector>> {
    read_input(io, path)?
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.into_finite().ok_or_else(|| Failure::flag("--input", format!("row {} is the point at infinity", i + 1))))
        .collect()
}

fn echo(io: &mut Io, config: Value) -> CliResult<()> {
    writeln!(io.stderr, "config: {config}").map_err(Failure::io)
}

fn emit_json(io: &mut Io, v: &Value) -> CliResult<()> {
    let text = serde_json::to_string_pretty(v).expect("JSON values serialize");
    writeln!(io.stdout, "{text}").map_err(Failure::io)
}

fn write_failure(e: FormatError) -> Failure {
    match e {
        FormatError::Csv(c) if c.is_io_error() => Failure { code: 1, message: format!("output: {c}") },
        other => Failure::format("output", other),
    }
}

fn sample(a: SampleArgs, io: &mut Io) -> CliResult<i32> {
    let seed = resolve_seed(a.seed)?;
    let params = inline_or_file("--params", &a.params)?;
    let family = formats::parse_family(a.family.as_str(), &params).map_err(|e| Failure::format("--params", e))?;
    echo(
        io,
        json!({ "command": "sample", "family": a.family.as_str(), "params": serde_json::from_str::<Value>(&params).ok(),
                "n": a.n, "seed": seed, "stream": a.stream }),
    )?;
    let mut rng = RngStream::new(seed, a.stream);
    let rows: Vec<Vec<f64>> = match &family {
        Family::EuclidCauchy(theta) => to_rows(sample_euclid_cauchy(theta, a.n, &mut rng).map_err(|e| Failure::core("--params", e))?),
        Family::SphereCauchy(phi) => to_rows(sample_sphere_cauchy(phi, a.n, &mut rng).map_err(|e| Failure::core("--params", e))?),
        Family::Kent(k) => to_rows(sample_kent(k, a.n, &mut rng)),
        Family::Marginal { varphi, nu } => {
            if !(varphi.abs() < 1.0) {
                return Err(Failure::core("--params", Error::Domain(format!("|varphi| must be below 1, got {varphi}"))));
            }
            sample_marginal(*varphi, *nu, a.n, &mut rng).map_err(|e| Failure::core("--params", e))?.into_iter().map(|y| vec![y]).collect()
        }
        Family::UniformSphere { d } => to_rows(sample_uniform_sphere(*d, a.n, &mut rng)),
    };
    formats::write_rows_plain(&mut *io.stdout, &rows).map_err(write_failure)?;
    Ok(0)
}

fn to_rows(points: Vec<Vector>) -> Vec<Vec<f64>> {
    points.into_iter().map(|v| v.iter().copied().collect()).collect()
}

fn coords(v: &Vector) -> Vec<f64> {
    v.iter().copied().collect()
}

fn diagnostics_json(d: &StationaryDiagnostics) -> Value {
    json!({
        "grad_mu_residual": d.grad_mu_residual,
        "grad_sigma_residual": d.grad_sigma_residual,
        "hessian_max_eigenvalue": d.hessian_max_eigenvalue,
        "coincidence_flag": d.coincidence_flag,
    })
}

fn fit(a: FitArgs, io: &mut Io) -> CliResult<i32> {
    let seed = resolve_seed(a.seed)?;
    if !(a.tol > 0.0) {
        return Err(Failure::flag("--tol", "must be positive"));
    }
    let family = match a.family {
        FitFamily::Euclid => "euclid",
        FitFamily::Sphere => "sphere",
    };
    let method = match a.method {
        FitMethod::Mle => "mle",
        FitMethod::Mom => "mom",
    };
    echo(
        io,
        json!({ "command": "fit", "family": family, "method": method, "input": a.input.as_ref().map(|p| p.display().to_string()),
                "tol": a.tol, "max_evals": a.max_evals, "restarts": a.restarts, "seed": seed }),
    )?;
    let data = finite_input(io, &a.input)?;
    let config = MleConfig { tol: a.tol, max_evals: a.max_evals, seed, restarts: a.restarts };
    let domain = |e: Error| Failure::core("--input", e);
    let out = match (a.family, a.method) {
        (FitFamily::Euclid, FitMethod::Mle) => match mle_numeric(&data, &config).map_err(domain)? {
            MleResult::Estimate { theta, loglik, diagnostics, converged } => json!({
                "variant": "estimate",
                "estimate": { "mu": coords(theta.mu()), "sigma": theta.sigma() },
                "loglik": loglik,
                "diagnostics": diagnostics_json(&diagnostics),
                "converged": converged,
            }),
            MleResult::PointMass(p) => json!({
                "variant": "point_mass",
                "estimate": { "mu": coords(&p), "sigma": 0.0 },
                "loglik": f64::INFINITY.to_string(),
                "diagnostics": Value::Null,
            }),
            MleResult::ContourCircle { center, radius, plane: (u, e) } => {
                let on_circle = conformal_cauchy::geometry::ComplexParam::new(center.clone(), radius).map_err(domain)?;
                json!({
                    "variant": "contour_circle",
                    "estimate": { "center": coords(&center), "radius": radius, "plane": [coords(&u), coords(&e)] },
                    "loglik": loglik_euclid(&on_circle, &data).map_err(domain)?,
                    "diagnostics": Value::Null,
                })
            }
        },
        (FitFamily::Sphere, FitMethod::Mle) => match mle_sphere(&data, &config).map_err(domain)? {
            SphereMleResult::Estimate { phi, loglik, diagnostics, converged } => json!({
                "variant": "estimate",
                "estimate": { "phi": coords(&phi) },
                "loglik": loglik,
                "diagnostics": diagnostics_json(&diagnostics),
                "converged": converged,
            }),
            SphereMleResult::PointMass(p) => json!({
                "variant": "point_mass",
                "estimate": { "phi": coords(&p) },
                "loglik": f64::INFINITY.to_string(),
                "diagnostics": Value::Null,
            }),
            SphereMleResult::ContourCircle { y1, y2 } => json!({
                "variant": "contour_circle",
                "estimate": { "y1": coords(&y1), "y2": coords(&y2) },
                "loglik": Value::Null,
                "diagnostics": Value::Null,
            }),
        },
        (FitFamily::Sphere, FitMethod::Mom) => {
            let m = mom_estimate(&data).map_err(domain)?;
            json!({
                "variant": "estimate",
                "estimate": { "phi": coords(&m.phi) },
                "loglik": sphere_loglik(&m.phi, &data).ok(),
                "diagnostics": { "clamped": m.clamped },
            })
        }
        (FitFamily::Euclid, FitMethod::Mom) => {
            return Err(Failure::flag("--method", "mom is available for --family sphere only"));
        }
    };
    emit_json(io, &out)?;
    Ok(0)
}

fn transform(a: TransformArgs, io: &mut Io) -> CliResult<i32> {
    let map_text = inline_or_file("--map", &a.map)?;
    let t = formats::parse_transform(&map_text).map_err(|e| Failure::format("--map", e))?;
    echo(
        io,
        json!({ "command": "transform", "map": formats::transform_to_json(&t), "param": a.param,
                "input": a.input.as_ref().map(|p| p.display().to_string()) }),
    )?;
    if let Some(p) = &a.param {
        let text = inline_or_file("--param", p)?;
        let param = formats::parse_family_param(&text).map_err(|e| Failure::format("--param", e))?;
        let image = pushforward_params(&t, &param).map_err(|e| Failure::core("--param", e))?;
        emit_json(io, &formats::family_param_to_json(&image))?;
        return Ok(0);
    }
    let points = read_input(io, &a.input)?;
    let out = points
        .iter()
        .map(|p| apply_transform(&t, p))
        .collect::<conformal_cauchy::Result<Vec<_>>>()
        .map_err(|e| Failure::core("--input", e))?;
    formats::write_points(&mut *io.stdout, &out).map_err(write_failure)?;
    Ok(0)
}

fn apply_transform(t: &Transform, p: &ExtendedPoint) -> conformal_cauchy::Result<ExtendedPoint> {
    match t {
        Transform::Euclidean(c) => c.apply(p),
        Transform::Sphere(s) => s.apply(p),
        Transform::InverseStereographic => Ok(ExtendedPoint::Finite(inv_stereographic(p))),
        Transform::Stereographic => match p {
            ExtendedPoint::Finite(y) => {
                if (y.norm() - 1.0).abs() > 1e-10 {
                    return Err(Error::Domain(format!("point of norm {} is not on the unit sphere", y.norm())));
                }
                stereographic_point(y)
            }
            ExtendedPoint::Infinity { .. } => Err(Error::Domain("the point at infinity is not on the sphere".into())),
        },
    }
}

fn emit_grid(io: &mut Io, g: &Grid) -> CliResult<()> {
    formats::write_table(&mut *io.stdout, &g.header, &g.rows).map_err(write_failure)
}

fn grid_cmd(a: GridArgs, io: &mut Io) -> CliResult<i32> {
    if a.size == 0 {
        return Err(Failure::flag("--size", "must be positive"));
    }
    if !(a.lo < a.hi) {
        return Err(Failure::flag("--lo", "must be below --hi"));
    }
    let params = inline_or_file("--params", &a.params)?;
    let family = formats::parse_family(a.family.as_str(), &params).map_err(|e| Failure::format("--params", e))?;
    echo(
        io,
        json!({ "command": "density-grid", "family": a.family.as_str(), "params": serde_json::from_str::<Value>(&params).ok(),
                "size": a.size, "lo": a.lo, "hi": a.hi }),
    )?;
    let g = density_grid(&family, a.size, a.lo, a.hi).map_err(|e| Failure::core("--params", e))?;
    emit_grid(io, &g)?;
    Ok(0)
}

fn lambert(a: LambertArgs, io: &mut Io) -> CliResult<i32> {
    if a.size < 2 {
        return Err(Failure::flag("--size", "must be at least 2"));
    }
    let k = KentD2::new(a.a11, a.a12, a.a22).map_err(|e| Failure::core("--a11/--a12/--a22", e))?;
    echo(io, json!({ "command": "lambert-grid", "a11": a.a11, "a12": a.a12, "a22": a.a22, "size": a.size }))?;
    let g = lambert_grid(&k, a.size).map_err(|e| Failure::core("--a11/--a12/--a22", e))?;
    emit_grid(io, &g)?;
    Ok(0)
}

fn verify(a: VerifyArgs, io: &mut Io) -> CliResult<i32> {
    let seed = resolve_seed(a.seed)?;
    let ids = parse_suite(&a.suite).map_err(|m| Failure::flag("--suite", m))?;
    let cfg = OracleConfig { seed, ..OracleConfig::default() };
    echo(io, json!({ "command": "verify", "suite": ids, "seed": seed }))?;
    let results = run_suite(&ids, &cfg);
    for (id, title) in CRITERIA.iter().filter(|c| ids.contains(&c.0)) {
        let ok = results.iter().filter(|r| r.criterion == *id).all(|r| r.pass);
        writeln!(io.stderr, "criterion {id:>2} {title:<32} {}", if ok { "PASS" } else { "FAIL" }).map_err(Failure::io)?;
    }
    emit_json(io, &serde_json::to_value(&results).expect("report serializes"))?;
    Ok(if all_pass(&results) { 0 } else { EXIT_VERIFY })
}
