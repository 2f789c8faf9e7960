//! Command-line front end: `check`, `solve`, `shoot`, `kernel`, `roots`.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::charroots::CharRoots;
use crate::error::Error;
use crate::flux::{admissibility_report, build_modified_flux, taylor_bound_constants, CapParams, Flux, WaveConfig};
use crate::integrator::{integrate, IntegrateOptions, Termination, Trajectory};
use crate::kernel::Kernel;
use crate::shooter::{classify, default_tail_tol, shoot, ShootOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NUMERICAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_ADMISSIBILITY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "fracwave", version, about = "Travelling waves of a non-local KdV-Burgers equation")]
struct Cli {
    /// File of `key=value` lines using the long flag names; flags win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the admissibility flags of the far-field states.
    Check(Shared),
    /// Integrate one trajectory.
    Solve(SolveArgs),
    /// Locate the undercompressive value of tau by bisection.
    Shoot(ShootArgs),
    /// Tabulate the fundamental solution v and its derivatives.
    Kernel(KernelArgs),
    /// Characteristic roots for given (tau, a, b, alpha).
    Roots(RootsArgs),
}

#[derive(Debug, Args, Clone)]
struct Shared {
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    phi_minus: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    phi_plus: Option<f64>,
    #[arg(long)]
    dx: Option<f64>,
    /// Length of the integration interval measured from its left end.
    #[arg(long)]
    xi_max: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    blowdown_floor: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FluxVariant {
    Original,
    Modified,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    shared: Shared,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, value_enum)]
    flux: Option<FluxVariant>,
    #[arg(long, allow_negative_numbers = true)]
    cap_a: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    cap_b: Option<f64>,
}

#[derive(Debug, Args)]
struct ShootArgs {
    #[command(flatten)]
    shared: Shared,
    #[arg(long)]
    stop_tol: Option<f64>,
    #[arg(long)]
    tail_tol: Option<f64>,
    #[arg(long)]
    jobs: Option<usize>,
    /// Directory receiving one trajectory CSV per bisection step.
    #[arg(long)]
    history_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct KernelArgs {
    #[command(flatten)]
    shared: Shared,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    eta_max: Option<f64>,
    #[arg(long)]
    points: Option<usize>,
}

#[derive(Debug, Args)]
struct RootsArgs {
    #[command(flatten)]
    shared: Shared,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Mode {
    Check,
    Solve,
    Shoot,
    Kernel,
    Roots,
}

/// Fully resolved invocation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSpec {
    pub mode: Mode,
    pub alpha: Option<f64>,
    pub phi_minus: f64,
    pub phi_plus: f64,
    pub integrate: IntegrateOptions,
    pub tau: Option<f64>,
    pub flux: FluxVariant,
    pub cap: CapParams,
    pub stop_tol: Option<f64>,
    pub tail_tol: Option<f64>,
    pub jobs: usize,
    pub a: Option<f64>,
    pub b: f64,
    pub eta_max: f64,
    pub points: usize,
    pub out: Option<PathBuf>,
    pub history_dir: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    /// Rejected by the argument parser, including `--help` and `--version`.
    Clap(clap::Error),
    Usage(String),
    Admissibility(String),
    Numerical(Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) => e.exit_code(),
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Admissibility(_) => EXIT_ADMISSIBILITY,
            CliError::Numerical(_) | CliError::Io(_) => EXIT_NUMERICAL,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Clap(e) => write!(f, "{e}"),
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Admissibility(m) => write!(f, "inadmissible states: {m}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_) | Error::DegenerateStates(_) | Error::CapNotPositive { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Numerical(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

fn read_config(path: &Path) -> Result<HashMap<String, String>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    let mut map = HashMap::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{}:{}: expected key=value", path.display(), n + 1)))?;
        map.insert(k.trim().replace('_', "-"), v.trim().to_string());
    }
    Ok(map)
}

/// Flag value, else config value, else nothing.
struct Resolver {
    file: HashMap<String, String>,
}

impl Resolver {
    fn get<T: std::str::FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>, CliError> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.file.get(key) {
            None => Ok(None),
            Some(s) => s
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config value for {key} is not valid: {s}"))),
        }
    }

    fn path(&self, flag: Option<PathBuf>, key: &str) -> Option<PathBuf> {
        flag.or_else(|| self.file.get(key).map(PathBuf::from))
    }
}

fn positive(name: &str, v: f64) -> Result<f64, CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Usage(format!("--{name} must be positive, got {v}")))
    }
}

/// Parses and validates the command line. Shoot mode rejects inadmissible
/// states; solve mode only warns on stderr.
pub fn parse_args<I, T>(argv: I) -> Result<RunSpec, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(CliError::Clap)?;
    let res = Resolver { file: match &cli.config { Some(p) => read_config(p)?, None => HashMap::new() } };
    let (mode, shared) = match &cli.command {
        Command::Check(s) => (Mode::Check, s.clone()),
        Command::Solve(a) => (Mode::Solve, a.shared.clone()),
        Command::Shoot(a) => (Mode::Shoot, a.shared.clone()),
        Command::Kernel(a) => (Mode::Kernel, a.shared.clone()),
        Command::Roots(a) => (Mode::Roots, a.shared.clone()),
    };
    let defaults = IntegrateOptions::default();
    let mut job = RunSpec {
        mode,
        alpha: res.get(shared.alpha, "alpha")?,
        phi_minus: res.get(shared.phi_minus, "phi-minus")?.unwrap_or(1.0),
        phi_plus: res.get(shared.phi_plus, "phi-plus")?.unwrap_or(-0.6),
        integrate: IntegrateOptions {
            dx: positive("dx", res.get(shared.dx, "dx")?.unwrap_or(defaults.dx))?,
            length: positive("xi-max", res.get(shared.xi_max, "xi-max")?.unwrap_or(defaults.length))?,
            epsilon: positive("epsilon", res.get(shared.epsilon, "epsilon")?.unwrap_or(defaults.epsilon))?,
            blowdown_floor: res.get(shared.blowdown_floor, "blowdown-floor")?.unwrap_or(defaults.blowdown_floor),
        },
        tau: None,
        flux: FluxVariant::Original,
        cap: CapParams::default(),
        stop_tol: None,
        tail_tol: None,
        jobs: 1,
        a: None,
        b: 1.0,
        eta_max: 10.0,
        points: 100,
        out: res.path(shared.out, "out"),
        history_dir: None,
    };
    if job.integrate.blowdown_floor >= 0.0 {
        return Err(CliError::Usage("--blowdown-floor must be negative".into()));
    }
    match cli.command {
        Command::Check(_) => {}
        Command::Solve(a) => {
            job.tau = res.get(a.tau, "tau")?;
            job.flux = match a.flux {
                Some(f) => f,
                None => match res.file.get("flux").map(String::as_str) {
                    None | Some("original") => FluxVariant::Original,
                    Some("modified") => FluxVariant::Modified,
                    Some(other) => return Err(CliError::Usage(format!("unknown flux {other}"))),
                },
            };
            job.cap = CapParams {
                a: res.get(a.cap_a, "cap-a")?.unwrap_or(job.cap.a),
                b: res.get(a.cap_b, "cap-b")?.unwrap_or(job.cap.b),
            };
        }
        Command::Shoot(a) => {
            job.stop_tol = res.get(a.stop_tol, "stop-tol")?;
            job.tail_tol = res.get(a.tail_tol, "tail-tol")?;
            job.jobs = res.get(a.jobs, "jobs")?.unwrap_or(1).max(1);
            job.history_dir = res.path(a.history_dir, "history-dir");
        }
        Command::Kernel(a) => {
            job.tau = res.get(a.tau, "tau")?;
            job.a = res.get(a.a, "a")?;
            job.eta_max = res.get(a.eta_max, "eta-max")?.unwrap_or(job.eta_max);
            job.points = res.get(a.points, "points")?.unwrap_or(job.points);
        }
        Command::Roots(a) => {
            job.tau = res.get(a.tau, "tau")?;
            job.a = res.get(a.a, "a")?;
            job.b = res.get(a.b, "b")?.unwrap_or(job.b);
        }
    }
    validate(&job)?;
    Ok(job)
}

fn validate(job: &RunSpec) -> Result<(), CliError> {
    let need = |name: &str, v: Option<f64>| v.ok_or_else(|| CliError::Usage(format!("--{name} is required")));
    if job.phi_minus == job.phi_plus {
        return Err(CliError::Usage("--phi-minus and --phi-plus must differ".into()));
    }
    if job.mode != Mode::Check {
        let alpha = need("alpha", job.alpha)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CliError::Usage(format!("--alpha must lie in (0, 1), got {alpha}")));
        }
    }
    let report = admissibility_report(job.phi_minus, job.phi_plus);
    match job.mode {
        Mode::Solve => {
            positive("tau", need("tau", job.tau)?)?;
            if !report.all() {
                eprintln!("warning: far-field states are not admissible: {}", json!(report));
            }
        }
        Mode::Shoot => {
            if !report.all() {
                return Err(CliError::Admissibility(json!(report).to_string()));
            }
            if let Some(t) = job.stop_tol {
                positive("stop-tol", t)?;
            }
            if let Some(t) = job.tail_tol {
                positive("tail-tol", t)?;
            }
        }
        Mode::Kernel => {
            positive("tau", need("tau", job.tau)?)?;
            if let Some(a) = job.a {
                positive("a", a)?;
            }
            positive("eta-max", job.eta_max)?;
            if job.points < 2 {
                return Err(CliError::Usage("--points must be at least 2".into()));
            }
        }
        Mode::Roots => {
            positive("tau", need("tau", job.tau)?)?;
            positive("a", need("a", job.a)?)?;
            positive("b", job.b)?;
        }
        Mode::Check => {}
    }
    Ok(())
}

/// Writes through a temporary file in the target directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &str) -> std::io::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(contents.as_bytes())?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}

fn config_of(job: &RunSpec) -> Result<WaveConfig, CliError> {
    Ok(WaveConfig::new(job.phi_minus, job.phi_plus, job.alpha.unwrap_or(0.5))?)
}

fn flux_of(job: &RunSpec, cfg: &WaveConfig) -> Result<Flux, CliError> {
    Ok(match job.flux {
        FluxVariant::Original => Flux::Original(*cfg),
        FluxVariant::Modified => Flux::Modified(build_modified_flux(cfg, job.cap)?),
    })
}

fn header_line(out: &mut String, key: &str, value: impl std::fmt::Display) {
    let _ = writeln!(out, "# {key}={value}");
}

/// Trajectory as CSV: `xi,phi,psi,dalpha,h,energy_residual` with a metadata header.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut s = String::new();
    header_line(&mut s, "program", concat!("fracwave ", env!("CARGO_PKG_VERSION")));
    header_line(&mut s, "mode", "solve");
    header_line(&mut s, "alpha", traj.cfg.alpha);
    header_line(&mut s, "phi-minus", traj.cfg.phi_minus);
    header_line(&mut s, "phi-plus", traj.cfg.phi_plus);
    header_line(&mut s, "tau", traj.tau);
    header_line(&mut s, "dx", traj.opts.dx);
    header_line(&mut s, "xi-max", traj.opts.length);
    header_line(&mut s, "epsilon", traj.opts.epsilon);
    header_line(&mut s, "blowdown-floor", traj.opts.blowdown_floor);
    match &traj.flux {
        Flux::Original(_) => header_line(&mut s, "flux", "original"),
        Flux::Modified(m) => {
            header_line(&mut s, "flux", "modified");
            header_line(&mut s, "cap-a", m.requested.a);
            header_line(&mut s, "cap-b", m.requested.b);
            let [a, b, c, d, e] = m.quartic_coeffs;
            header_line(&mut s, "cap-coefficients", format!("{a},{b},{c},{d},{e}"));
        }
    }
    header_line(&mut s, "termination", serde_json::to_string(&traj.terminated).unwrap_or_default());
    s.push_str("xi,phi,psi,dalpha,h,energy_residual\n");
    for k in 0..traj.len() {
        let phi = traj.phi_samples[k];
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            traj.xi(k),
            phi,
            traj.grid.psi_samples[k],
            traj.dalpha_samples[k],
            traj.flux.h(phi),
            traj.energy_residuals[k]
        );
    }
    s
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string(value).expect("serialisable summary"));
}

fn run_check(job: &RunSpec) -> Result<i32, CliError> {
    let report = admissibility_report(job.phi_minus, job.phi_plus);
    let mut summary = json!({
        "mode": "check",
        "phi_minus": job.phi_minus,
        "phi_plus": job.phi_plus,
        "c": job.phi_plus * job.phi_plus + job.phi_minus * job.phi_minus + job.phi_minus * job.phi_plus,
        "phi_c": -(job.phi_minus + job.phi_plus),
        "admissibility": report,
        "admissible": report.all(),
    });
    if report.all() {
        let cfg = WaveConfig::new(job.phi_minus, job.phi_plus, job.alpha.unwrap_or(0.5))?;
        let tb = taylor_bound_constants(&cfg);
        summary["c_h"] = json!(tb.c_h);
        summary["c_cap_h"] = json!(tb.c_cap_h);
    }
    print_json(&summary);
    Ok(EXIT_OK)
}

fn run_solve(job: &RunSpec) -> Result<i32, CliError> {
    let cfg = config_of(job)?;
    let flux = flux_of(job, &cfg)?;
    let tau = job.tau.expect("validated");
    let traj = integrate(&flux, tau, &job.integrate)?;
    let class = classify(&traj, default_tail_tol(&cfg));
    if let Some(path) = &job.out {
        write_atomic(path, &trajectory_csv(&traj))?;
    }
    let max_energy = traj.relative_energy_residuals().into_iter().fold(0.0, f64::max);
    print_json(&json!({
        "mode": "solve",
        "alpha": cfg.alpha,
        "tau": tau,
        "flux": job.flux,
        "nodes": traj.len(),
        "xi_start": traj.xi(0),
        "xi_end": traj.xi(traj.len() - 1),
        "termination": traj.terminated,
        "classification": class,
        "min_phi": traj.min_phi(),
        "max_relative_energy_residual": max_energy,
        "bound_violations": traj.bound_violations,
        "out": job.out,
    }));
    Ok(if matches!(traj.terminated, Termination::NumericalFailure { .. }) { EXIT_NUMERICAL } else { EXIT_OK })
}

fn run_shoot(job: &RunSpec) -> Result<i32, CliError> {
    let cfg = config_of(job)?;
    let opts = ShootOptions {
        integrate: job.integrate,
        tail_tol: job.tail_tol,
        stop_tol: job.stop_tol,
        jobs: job.jobs,
        ..Default::default()
    };
    let result = shoot(&cfg, &opts)?;
    if let Some(dir) = &job.history_dir {
        fs::create_dir_all(dir)?;
        for (i, (tau, _)) in result.history.iter().enumerate() {
            let traj = integrate(&Flux::Original(cfg), *tau, &job.integrate)?;
            write_atomic(&dir.join(format!("step_{i:03}.csv")), &trajectory_csv(&traj))?;
        }
    }
    if let Some(path) = &job.out {
        let traj = integrate(&Flux::Original(cfg), result.tau_star, &job.integrate)?;
        write_atomic(path, &trajectory_csv(&traj))?;
    }
    let history: Vec<_> = result.history.iter().map(|(t, v)| json!({"tau": t, "verdict": v})).collect();
    print_json(&json!({
        "mode": "shoot",
        "alpha": cfg.alpha,
        "phi_minus": cfg.phi_minus,
        "phi_plus": cfg.phi_plus,
        "tau_star": result.tau_star,
        "bracket": [result.bracket_final.0, result.bracket_final.1],
        "iterations": result.iterations,
        "stop_reason": result.stop_reason,
        "history": history,
    }));
    Ok(EXIT_OK)
}

fn run_kernel(job: &RunSpec) -> Result<i32, CliError> {
    let cfg = config_of(job)?;
    let tau = job.tau.expect("validated");
    let a = job.a.unwrap_or(-cfg.h_prime(cfg.phi_c));
    if !(a > 0.0) {
        return Err(CliError::Usage(format!("a = {a} must be positive; pass --a")));
    }
    let kernel = Kernel::new(tau, a, cfg.alpha)?;
    let mut s = String::new();
    header_line(&mut s, "program", concat!("fracwave ", env!("CARGO_PKG_VERSION")));
    header_line(&mut s, "mode", "kernel");
    header_line(&mut s, "alpha", cfg.alpha);
    header_line(&mut s, "tau", tau);
    header_line(&mut s, "a", a);
    header_line(&mut s, "eta-max", job.eta_max);
    header_line(&mut s, "points", job.points);
    s.push_str("eta,v,v_prime,v_second\n");
    let mut max_err: f64 = 0.0;
    for i in 0..job.points {
        let eta = job.eta_max * i as f64 / (job.points - 1) as f64;
        let e = kernel.eval(eta)?;
        max_err = max_err.max(e.quad_error_est);
        let _ = writeln!(s, "{},{},{},{}", eta, e.v, e.v_prime, e.v_second);
    }
    let path = job.out.clone().unwrap_or_else(|| PathBuf::from("kernel.csv"));
    write_atomic(&path, &s)?;
    print_json(&json!({
        "mode": "kernel",
        "alpha": cfg.alpha,
        "tau": tau,
        "a": a,
        "points": job.points,
        "pole": kernel.pole,
        "max_quad_error_est": max_err,
        "out": path,
    }));
    Ok(EXIT_OK)
}

fn run_roots(job: &RunSpec) -> Result<i32, CliError> {
    let alpha = job.alpha.expect("validated");
    let (tau, a, b) = (job.tau.expect("validated"), job.a.expect("validated"), job.b);
    let left = CharRoots::left(tau, b, a, alpha)?;
    let right = CharRoots::right(tau, b, a, alpha)?;
    let s1 = right.s1.expect("right roots carry s1");
    print_json(&json!({
        "mode": "roots",
        "tau": tau,
        "a": a,
        "b": b,
        "alpha": alpha,
        "lambda": left.lambda,
        "s1_re": s1.re,
        "s1_im": s1.im,
        "residuals": {
            "left": left.residual,
            "right": right.residual,
            "left_abs": left.abs_residual,
            "right_abs": right.abs_residual,
        },
    }));
    Ok(EXIT_OK)
}

pub fn run(job: &RunSpec) -> Result<i32, CliError> {
    match job.mode {
        Mode::Check => run_check(job),
        Mode::Solve => run_solve(job),
        Mode::Shoot => run_shoot(job),
        Mode::Kernel => run_kernel(job),
        Mode::Roots => run_roots(job),
    }
}

/// Parses, runs and maps every outcome to an exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let job = match parse_args(argv) {
        Ok(s) => s,
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            return e.exit_code();
        }
        Err(e) => {
            eprintln!("{e}");
            return e.exit_code();
        }
    };
    match run(&job) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
