//! Command-line front end: one subcommand per analysis, CSV/JSON on stdout
//! or `--out`, a one-line summary on stderr.
//!
//! Exit status: 0 success, 2 bad configuration, 3 numerical failure, 4 I/O.
//! Failures also print `{"category", "kind", "message"}` as one JSON line on
//! stderr.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::bifurcation::{
    argmax_line_fit, theta_profile, theta_surface, uniform_grid, DEFAULT_PROFILE_POINTS, DEFAULT_SURFACE_POINTS,
};
use crate::error::Error;
use crate::frenet::{frenet_of_system, restart_frenet_relations, FrenetFrame};
use crate::geometry::{loop_metrics, loop_metrics_of, scan_curve, scan_self_intersections, CubicFlow, PlanarCurve, LOOP_SAMPLES};
use crate::matrix_ml::{CanonicalSystem, GeneralSystem, Matrix, System, Vector};
use crate::mittag_leffler::{ml_series, FracOrder, SeriesConfig};
use crate::trajectory::{
    fmt_f64, restart, restart_matrix, restart_transform, solve, verify_linear_relation, TimeGrid, DEFAULT_POINTS,
    DEFAULT_T_MIN,
};

/// Environment variable overriding the worker thread count.
pub const THREADS_ENV: &str = "FRACTRAJ_THREADS";

#[derive(Debug)]
enum CliError {
    Config(String),
    Numeric(Error),
    Io(io::Error),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_input_error() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numeric(e)
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.into())
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn report(&self) -> Value {
        let (category, kind, message) = match self {
            CliError::Config(m) => ("config", "invalid-config", m.clone()),
            CliError::Numeric(e) => ("numerical", e.kind(), e.to_string()),
            CliError::Io(e) => ("io", "io", e.to_string()),
        };
        json!({ "category": category, "kind": kind, "message": message })
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "fractraj",
    version,
    about = "Trajectories of linear fractional-order systems D^α X = A X: restarts, Frenet frames, self-intersections, rotation-angle scans"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate E_{α,β}(z)
    Ml(MlArgs),
    /// Solve X(t) = E_α(A t^α) x0 on a time grid
    Traj(TrajArgs),
    /// Solve X and its restart Y from X(t1) and check Y = T X
    Restart(RestartArgs),
    /// Restart transformation T = E_α(A t1^α) and its scaling × rotation split
    Transform(TransformArgs),
    /// Frenet frame table, with cross-trajectory relations for a restart
    Frenet(FrenetArgs),
    /// Self-intersections of a planar trajectory with loop metrics
    Intersect(IntersectArgs),
    /// The non-autonomous flow x' = 6t, y' = 3t² − 3 and its restart
    Cubic(CubicArgs),
    /// Rotation angle of the restart transformation versus α and b
    #[command(subcommand)]
    Bifurcate(BifurcateCommand),
}

#[derive(Subcommand, Debug)]
enum BifurcateCommand {
    /// θ(α) for fixed a, b, t1 with refined local maxima
    Profile(ProfileArgs),
    /// θ on an (α, b) grid for fixed a, t1
    Surface(SurfaceArgs),
    /// Line through the b maximizing θ for each α
    Fit(FitArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum FormName {
    /// diag(λ₁, λ₂[, λ₃]) from --lambdas
    DistinctReal,
    /// [[a, b], [−b, a]] from --a, --b
    ComplexPair,
    /// [[λ, 1], [0, λ]] from --lambda
    Jordan,
    /// complex pair block plus λ from --a, --b, --lambda
    ComplexPairPlusReal,
}

#[derive(Args, Debug)]
struct SystemArgs {
    /// Row-major entries of a 2x2 or 3x3 matrix, e.g. "-2,4,-4,-2"
    #[arg(long, allow_hyphen_values = true, conflicts_with = "form")]
    matrix: Option<String>,
    /// Canonical form of the system
    #[arg(long, value_enum)]
    form: Option<FormName>,
    #[arg(long, allow_hyphen_values = true)]
    a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    b: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    lambda: Option<f64>,
    /// Comma-separated real eigenvalues for distinct-real
    #[arg(long, allow_hyphen_values = true)]
    lambdas: Option<String>,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[arg(long, default_value_t = DEFAULT_T_MIN, allow_hyphen_values = true)]
    t_min: f64,
    #[arg(long, allow_hyphen_values = true)]
    t_max: f64,
    /// Number of sample times
    #[arg(long, default_value_t = DEFAULT_POINTS)]
    n: usize,
    /// Logarithmic instead of uniform spacing
    #[arg(long)]
    log: bool,
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Output file (default: stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
}

#[derive(Args, Debug)]
struct MlArgs {
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    beta: f64,
    /// Argument "re" or "re,im"
    #[arg(long, allow_hyphen_values = true)]
    z: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct TrajArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    /// Initial state, comma-separated
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct RestartArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
    /// Restart time: Y(0) = X(t1)
    #[arg(long, allow_hyphen_values = true)]
    t1: f64,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct TransformArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    t1: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FrenetArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
    /// Tabulate the restart from X(t1) instead of X
    #[arg(long, allow_hyphen_values = true)]
    t1: Option<f64>,
    /// Write the X-versus-Y relation report (JSON) here; needs --t1 and --form
    #[arg(long, requires = "t1")]
    relations: Option<PathBuf>,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct IntersectArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, allow_hyphen_values = true)]
    alpha: f64,
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
    /// Scan the restart from X(t1) instead of X
    #[arg(long, allow_hyphen_values = true)]
    t1: Option<f64>,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct CubicArgs {
    #[arg(long, default_value = "1,1", allow_hyphen_values = true)]
    x0: String,
    /// Also tabulate the flow restarted from X(t1)
    #[arg(long, allow_hyphen_values = true)]
    t1: Option<f64>,
    #[arg(long, default_value_t = -2.5, allow_hyphen_values = true)]
    t_min: f64,
    #[arg(long, default_value_t = 2.5, allow_hyphen_values = true)]
    t_max: f64,
    #[arg(long, default_value_t = DEFAULT_POINTS)]
    n: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct ProfileArgs {
    #[arg(long, default_value_t = 0.983469, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, default_value_t = 0.181075, allow_hyphen_values = true)]
    b: f64,
    #[arg(long, default_value_t = 1.0)]
    t1: f64,
    #[arg(long, default_value_t = 0.001)]
    alpha_min: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha_max: f64,
    #[arg(long, default_value_t = DEFAULT_PROFILE_POINTS)]
    n: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct SurfaceArgs {
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    t1: f64,
    #[arg(long, default_value_t = 0.005)]
    alpha_min: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha_max: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    b_min: f64,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    b_max: f64,
    #[arg(long, default_value_t = DEFAULT_SURFACE_POINTS)]
    n_alpha: usize,
    #[arg(long, default_value_t = DEFAULT_SURFACE_POINTS)]
    n_b: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args, Debug)]
struct FitArgs {
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    a: f64,
    #[arg(long, default_value_t = 1.0)]
    t1: f64,
    #[arg(long, default_value_t = 0.05)]
    alpha_min: f64,
    #[arg(long, default_value_t = 0.95)]
    alpha_max: f64,
    #[arg(long, default_value_t = 19)]
    n_alpha: usize,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    b_min: f64,
    #[arg(long, default_value_t = 3.0, allow_hyphen_values = true)]
    b_max: f64,
    /// Points of the b scan preceding refinement
    #[arg(long, default_value_t = DEFAULT_SURFACE_POINTS)]
    n_b: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// json: the fit report; csv: the argmax points
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

fn parse_list(name: &str, s: &str) -> CliResult<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("--{name}: cannot parse {p:?} as a number")))
        })
        .collect()
}

fn need(name: &str, v: Option<f64>) -> CliResult<f64> {
    v.ok_or_else(|| CliError::Config(format!("--{name} is required for this form")))
}

fn build_system(s: &SystemArgs) -> CliResult<System> {
    match (&s.matrix, s.form) {
        (Some(m), None) => {
            let entries = parse_list("matrix", m)?;
            let d = match entries.len() {
                4 => 2,
                9 => 3,
                n => return Err(CliError::Config(format!("--matrix needs 4 or 9 entries, got {n}"))),
            };
            Ok(GeneralSystem::from_row_major(d, &entries)?.into())
        }
        (None, Some(form)) => {
            let c = match form {
                FormName::DistinctReal => {
                    let l = s
                        .lambdas
                        .as_deref()
                        .ok_or_else(|| CliError::Config("--lambdas is required for distinct-real".into()))?;
                    CanonicalSystem::distinct_real(&parse_list("lambdas", l)?)?
                }
                FormName::ComplexPair => CanonicalSystem::complex_pair(need("a", s.a)?, need("b", s.b)?)?,
                FormName::Jordan => CanonicalSystem::jordan2(need("lambda", s.lambda)?)?,
                FormName::ComplexPairPlusReal => {
                    CanonicalSystem::complex_pair_plus_real(need("a", s.a)?, need("b", s.b)?, need("lambda", s.lambda)?)?
                }
            };
            Ok(c.into())
        }
        _ => Err(CliError::Config("give exactly one of --matrix or --form".into())),
    }
}

fn order(alpha: f64) -> CliResult<FracOrder> {
    Ok(FracOrder::new(alpha)?)
}

fn state(s: &str, d: usize) -> CliResult<Vector> {
    let v = parse_list("x0", s)?;
    if v.len() != d {
        return Err(CliError::Config(format!("--x0 has {} entries, the system needs {d}", v.len())));
    }
    Ok(Vector::from_vec(v))
}

fn time_grid(g: &GridArgs) -> TimeGrid {
    if g.log {
        TimeGrid::log(g.t_min, g.t_max, g.n)
    } else {
        TimeGrid::uniform(g.t_min, g.t_max, g.n)
    }
}

fn sink(out: &Option<PathBuf>) -> CliResult<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout())),
    })
}

fn write_json(out: &Option<PathBuf>, v: &Value) -> CliResult<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn rows(m: &Matrix) -> Value {
    json!((0..m.nrows()).map(|i| m.row(i).iter().copied().collect::<Vec<f64>>()).collect::<Vec<_>>())
}

fn csv_line(w: &mut dyn Write, values: &[f64]) -> io::Result<()> {
    let cells: Vec<String> = values.iter().map(|&v| fmt_f64(v)).collect();
    writeln!(w, "{}", cells.join(","))
}

fn axis_names(prefix: &str, d: usize) -> Vec<String> {
    (1..=d).map(|i| format!("{prefix}{i}")).collect()
}

fn cmd_ml(a: &MlArgs) -> CliResult<String> {
    let parts = parse_list("z", &a.z)?;
    let z = match parts[..] {
        [re] => Complex64::new(re, 0.0),
        [re, im] => Complex64::new(re, im),
        _ => return Err(CliError::Config("--z takes \"re\" or \"re,im\"".into())),
    };
    let r = ml_series(a.alpha, a.beta, z, &SeriesConfig::default())?;
    write_json(
        &a.out,
        &json!({
            "alpha": a.alpha, "beta": a.beta, "z": [z.re, z.im],
            "value": [r.value.re, r.value.im],
            "terms_used": r.terms_used, "tail_bound": r.tail_bound, "precision_bits": r.precision_bits,
        }),
    )?;
    Ok(format!(
        "E_{{{},{}}}({}) = {} {:+}i ({} terms)",
        a.alpha,
        a.beta,
        z,
        fmt_f64(r.value.re),
        r.value.im,
        r.terms_used
    ))
}

fn cmd_traj(a: &TrajArgs) -> CliResult<String> {
    let system = build_system(&a.system)?;
    let x0 = state(&a.x0, system.dimension())?;
    let traj = solve(&system, order(a.alpha)?, &x0, &time_grid(&a.grid))?;
    match a.output.format {
        Format::Csv => {
            let mut w = sink(&a.output.out)?;
            traj.write_csv(&mut w)?;
            w.flush()?;
        }
        Format::Json => write_json(&a.output.out, &serde_json::to_value(traj.to_record())?)?,
    }
    Ok(format!("solved {} points on [{}, {}]", traj.len(), a.grid.t_min, a.grid.t_max))
}

fn cmd_restart(a: &RestartArgs) -> CliResult<String> {
    let system = build_system(&a.system)?;
    let alpha = order(a.alpha)?;
    let x0 = state(&a.x0, system.dimension())?;
    let grid = time_grid(&a.grid);
    let x = solve(&system, alpha, &x0, &grid)?;
    let y = restart(&system, alpha, &x0, a.t1, &grid)?;
    let t = restart_matrix(&system, alpha, a.t1)?;
    let residual = verify_linear_relation(&x, &y, &t)?;
    match a.output.format {
        Format::Csv => {
            let d = system.dimension();
            let mut w = sink(&a.output.out)?;
            let header: Vec<String> = std::iter::once("t".to_string())
                .chain(axis_names("x", d))
                .chain(axis_names("y", d))
                .collect();
            writeln!(w, "{}", header.join(","))?;
            for ((ti, xi), yi) in x.times().iter().zip(x.states()).zip(y.states()) {
                let row: Vec<f64> = std::iter::once(*ti).chain(xi.iter().copied()).chain(yi.iter().copied()).collect();
                csv_line(&mut w, &row)?;
            }
            w.flush()?;
        }
        Format::Json => write_json(
            &a.output.out,
            &json!({
                "t1": a.t1, "t_matrix": rows(&t), "residual": residual,
                "original": x.to_record(), "restarted": y.to_record(),
            }),
        )?,
    }
    Ok(format!("restart at t1 = {}: residual max |Y - T X| = {residual:e}", a.t1))
}

fn cmd_transform(a: &TransformArgs) -> CliResult<String> {
    let system = build_system(&a.system)?;
    let alpha = order(a.alpha)?;
    let t = restart_matrix(&system, alpha, a.t1)?;
    let (split, summary) = match restart_transform(&system, alpha, a.t1) {
        Ok(f) => {
            let err = (&f.reconstruct() - &t).amax();
            let split = json!({
                "u": rows(&f.u), "v": rows(&f.v), "signs": f.signs,
                "theta": f.theta, "unsigned_theta": f.unsigned_theta(),
                "basis": f.basis.as_ref().map(|(p, pinv)| json!({ "p": rows(p), "p_inv": rows(pinv) })),
                "reconstruction_error": err,
            });
            let s = format!("theta = {} (unsigned {}), |P U V P^-1 - T| = {err:e}", f.theta, f.unsigned_theta());
            (split, s)
        }
        Err(Error::Factorization(m)) => (Value::Null, format!("no scaling x rotation split: {m}")),
        Err(e) => return Err(e.into()),
    };
    write_json(&a.out, &json!({ "alpha": a.alpha, "t1": a.t1, "t": rows(&t), "factorization": split }))?;
    Ok(summary)
}

fn frame_row(f: &FrenetFrame) -> [f64; 7] {
    [f.t, f.nu, f.tangent[0], f.tangent[1], f.normal[0], f.normal[1], f.kappa]
}

fn cmd_frenet(a: &FrenetArgs) -> CliResult<String> {
    let system = build_system(&a.system)?;
    if system.dimension() != 2 {
        return Err(CliError::Config("frenet needs a planar system".into()));
    }
    let alpha = order(a.alpha)?;
    let x0 = state(&a.x0, 2)?;
    let x0 = [x0[0], x0[1]];
    let times = time_grid(&a.grid).times()?;
    let frames: Vec<Option<FrenetFrame>> = times
        .par_iter()
        .map(|&t| match frenet_of_system(&system, alpha, x0, t, a.t1) {
            Ok(f) => Ok(Some(f)),
            Err(Error::Singular(_)) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_, _>>()?;
    let singular = frames.iter().filter(|f| f.is_none()).count();
    match a.output.format {
        Format::Csv => {
            let mut w = sink(&a.output.out)?;
            writeln!(w, "t,nu,Tx,Ty,Nx,Ny,kappa")?;
            for (t, f) in times.iter().zip(&frames) {
                match f {
                    Some(f) => csv_line(&mut w, &frame_row(f))?,
                    None => csv_line(&mut w, &[*t, 0.0, f64::NAN, f64::NAN, f64::NAN, f64::NAN, f64::NAN])?,
                }
            }
            w.flush()?;
        }
        Format::Json => write_json(&a.output.out, &serde_json::to_value(&frames)?)?,
    }
    let mut summary = format!("{} frames, {singular} singular points", frames.len());
    if let Some(t1) = a.t1 {
        let System::Canonical(c) = &system else {
            if a.relations.is_some() {
                return Err(CliError::Config("relation reports need a system given by --form".into()));
            }
            return Ok(summary);
        };
        let reports: Vec<_> = times
            .par_iter()
            .map(|&t| restart_frenet_relations(c, alpha, x0, t1, t))
            .filter(|r| !matches!(r, Err(Error::Singular(_))))
            .collect::<Result<_, _>>()?;
        let worst = reports.iter().map(|r| r.worst_effective_gap()).fold(0.0, f64::max);
        summary.push_str(&format!("; worst relative relation gap {worst:e} over {} times", reports.len()));
        if a.relations.is_some() {
            write_json(&a.relations, &serde_json::to_value(&reports)?)?;
        }
    }
    Ok(summary)
}

const INTERSECT_HEADER: &str = "t_early,t_late,px,py,duration,arc_length,mean_speed";

fn cmd_intersect(a: &IntersectArgs) -> CliResult<String> {
    let system = build_system(&a.system)?;
    if system.dimension() != 2 {
        return Err(CliError::Config("intersect needs a planar system".into()));
    }
    let alpha = order(a.alpha)?;
    let x0 = state(&a.x0, 2)?;
    let grid = time_grid(&a.grid);
    let traj = match a.t1 {
        Some(t1) => restart(&system, alpha, &x0, t1, &grid)?,
        None => solve(&system, alpha, &x0, &grid)?,
    };
    let scan = scan_self_intersections(&traj)?;
    let metrics = scan
        .crossings
        .iter()
        .map(|c| loop_metrics(&traj, c))
        .collect::<Result<Vec<_>, _>>()?;
    write_crossings(&a.output, &scan.crossings, &metrics)?;
    Ok(format!(
        "{} self-intersections ({} unconfirmed polyline crossings)",
        scan.crossings.len(),
        scan.unconfirmed.len()
    ))
}

fn write_crossings(
    output: &OutputArgs,
    crossings: &[crate::geometry::SelfIntersection],
    metrics: &[crate::geometry::LoopMetrics],
) -> CliResult<()> {
    match output.format {
        Format::Csv => {
            let mut w = sink(&output.out)?;
            writeln!(w, "{INTERSECT_HEADER}")?;
            for (c, m) in crossings.iter().zip(metrics) {
                csv_line(
                    &mut w,
                    &[c.t_early, c.t_late, c.point[0], c.point[1], m.duration, m.arc_length, m.mean_speed],
                )?;
            }
            w.flush()?;
        }
        Format::Json => {
            let items: Vec<Value> = crossings
                .iter()
                .zip(metrics)
                .map(|(c, m)| json!({ "crossing": c, "loop": m }))
                .collect();
            write_json(&output.out, &Value::Array(items))?;
        }
    }
    Ok(())
}

fn cmd_cubic(a: &CubicArgs) -> CliResult<String> {
    let x0 = parse_list("x0", &a.x0)?;
    let [c1, c2] = x0[..] else {
        return Err(CliError::Config("--x0 needs 2 entries".into()));
    };
    if a.n < 2 || !(a.t_max > a.t_min) {
        return Err(CliError::Config("cubic needs n >= 2 and t_max > t_min".into()));
    }
    let x = CubicFlow { x0: [c1, c2] };
    let y = a.t1.map(|t1| x.restarted(t1));
    let times = uniform_grid((a.t_min, a.t_max), a.n);
    let px: Vec<[f64; 2]> = times.iter().map(|&t| x.point(t)).collect::<Result<_, _>>()?;
    let mut summary = String::new();
    let scan = scan_curve(&x, &times, &px)?;
    summary.push_str(&format!("X: {} self-intersections", scan.crossings.len()));
    let py = match &y {
        Some(y) => {
            let py: Vec<[f64; 2]> = times.iter().map(|&t| y.point(t)).collect::<Result<_, _>>()?;
            let scan_y = scan_curve(y, &times, &py)?;
            summary.push_str(&format!("; Y: {} self-intersections", scan_y.crossings.len()));
            Some(py)
        }
        None => None,
    };
    match a.output.format {
        Format::Csv => {
            let mut w = sink(&a.output.out)?;
            writeln!(w, "{}", if py.is_some() { "t,x1,x2,y1,y2" } else { "t,x1,x2" })?;
            for (i, t) in times.iter().enumerate() {
                let mut row = vec![*t, px[i][0], px[i][1]];
                if let Some(py) = &py {
                    row.extend_from_slice(&py[i]);
                }
                csv_line(&mut w, &row)?;
            }
            w.flush()?;
        }
        Format::Json => {
            let metrics = scan
                .crossings
                .iter()
                .map(|c| loop_metrics_of(&x, c, LOOP_SAMPLES))
                .collect::<Result<Vec<_>, _>>()?;
            write_json(
                &a.output.out,
                &json!({ "times": times, "original": px, "restarted": py, "crossings": scan.crossings, "loops": metrics }),
            )?;
        }
    }
    Ok(summary)
}

fn cmd_profile(a: &ProfileArgs) -> CliResult<String> {
    let p = theta_profile((a.alpha_min, a.alpha_max), a.n, a.a, a.b, a.t1)?;
    match a.output.format {
        Format::Csv => {
            let mut w = sink(&a.output.out)?;
            p.write_csv(&mut w)?;
            w.flush()?;
        }
        Format::Json => write_json(&a.output.out, &serde_json::to_value(&p)?)?,
    }
    let maxima: Vec<String> = p.maxima.iter().map(|(al, th)| format!("alpha = {al:.6} (theta = {th:.6})")).collect();
    Ok(format!("{} interior local maxima: {}", p.maxima.len(), maxima.join(", ")))
}

fn cmd_surface(a: &SurfaceArgs) -> CliResult<String> {
    if a.n_alpha == 0 || a.n_b == 0 {
        return Err(CliError::Config("surface grids need at least one point".into()));
    }
    let s = theta_surface(
        &uniform_grid((a.alpha_min, a.alpha_max), a.n_alpha),
        &uniform_grid((a.b_min, a.b_max), a.n_b),
        a.a,
        a.t1,
    )?;
    match a.output.format {
        Format::Csv => {
            let mut w = sink(&a.output.out)?;
            s.write_csv(&mut w)?;
            w.flush()?;
        }
        Format::Json => write_json(&a.output.out, &serde_json::to_value(&s)?)?,
    }
    let masked = s.thetas.iter().filter(|t| t.is_none()).count();
    Ok(format!("{} x {} surface, {masked} masked nodes", a.n_alpha, a.n_b))
}

fn cmd_fit(a: &FitArgs) -> CliResult<String> {
    if a.n_alpha == 0 {
        return Err(CliError::Config("--n-alpha must be positive".into()));
    }
    let alphas = uniform_grid((a.alpha_min, a.alpha_max), a.n_alpha);
    let f = argmax_line_fit(&alphas, (a.b_min, a.b_max), a.n_b, a.a, a.t1)?;
    match a.format {
        Format::Json => write_json(&a.out, &serde_json::to_value(&f)?)?,
        Format::Csv => {
            let mut w = sink(&a.out)?;
            writeln!(w, "alpha,b,theta")?;
            for p in &f.points {
                csv_line(&mut w, &[p.alpha, p.b, p.theta])?;
            }
            w.flush()?;
        }
    }
    Ok(format!(
        "b* = {:.6} + {:.6} alpha (rms {:.3e}, {} points, {} excluded)",
        f.intercept,
        f.slope,
        f.rms,
        f.points.len(),
        f.excluded.len()
    ))
}

fn configure_threads() -> CliResult<()> {
    let Ok(v) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {v:?}")))?;
    // a pool may already exist when run repeatedly in one process; keep it
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

fn dispatch(cli: &Cli) -> CliResult<String> {
    configure_threads()?;
    match &cli.command {
        Command::Ml(a) => cmd_ml(a),
        Command::Traj(a) => cmd_traj(a),
        Command::Restart(a) => cmd_restart(a),
        Command::Transform(a) => cmd_transform(a),
        Command::Frenet(a) => cmd_frenet(a),
        Command::Intersect(a) => cmd_intersect(a),
        Command::Cubic(a) => cmd_cubic(a),
        Command::Bifurcate(BifurcateCommand::Profile(a)) => cmd_profile(a),
        Command::Bifurcate(BifurcateCommand::Surface(a)) => cmd_surface(a),
        Command::Bifurcate(BifurcateCommand::Fit(a)) => cmd_fit(a),
    }
}

/// Parses `args` (including the program name), runs the subcommand and
/// returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            if code != 0 {
                let err = CliError::Config(e.kind().to_string());
                eprintln!("{}", err.report());
            }
            return code;
        }
    };
    match dispatch(&cli) {
        Ok(summary) => {
            eprintln!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("{}", e.report());
            e.exit_code()
        }
    }
}
