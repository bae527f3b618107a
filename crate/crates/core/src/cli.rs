//! Command-line front end: configuration loading, dispatch of the seven
//! analyses, and output files. Exit codes: 0 success, 2 configuration
//! error, 3 numerical failure, 4 failed precondition, 1 output error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::attractor::{
    bifurcation_scan, hopf_locate, largest_lyapunov, AttractorError, Execution, HopfError, ScanParameter,
};
use crate::config::{fingerprint, parse_config, ConfigError, RunConfig};
use crate::equilibria::{all_equilibria, interior_equilibrium, Equilibrium, EquilibriumKind};
use crate::global::{absorbing_bound, lozinskii_average, mu_certificate, weighted_total, BoundMode, LozinskiiAverage};
use crate::integrate::{integrate, IntegrationError, Trajectory};
use crate::model::{rhs, DerivedParameters, EffectiveParameters, ModelError, Species, State};
use crate::report::{self, ReportError, Stamped};
use crate::stability::{classify_equilibrium, StabilityReport};

/// Published coexistence state, kept as an annotation in the equilibria
/// report.
pub const REFERENCE_INTERIOR: State = State { p: 1.809, z: 8.964, f: 3.112 };

#[derive(Debug, Parser)]
#[command(name = "pzf", version, about = "Phytoplankton-zooplankton-fish food-chain analyses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// `key = value` configuration file; defaults apply when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Steady states and their residuals.
    Equilibria,
    /// Routh–Hurwitz and eigenvalue report for each steady state.
    Stability,
    /// Time series written to timeseries.csv.
    Simulate(StartArgs),
    /// Attractor classification over a parameter grid.
    Scan(ScanArgs),
    /// Bisection for a Hopf point of the coexistence state.
    Hopf(HopfArgs),
    /// Largest Lyapunov exponent.
    Lyapunov(StartArgs),
    /// Absorbing bound, mu certificate and trajectory Lozinskii average.
    GlobalCheck(StartArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Equilibria => "equilibria",
            Command::Stability => "stability",
            Command::Simulate(_) => "simulate",
            Command::Scan(_) => "scan",
            Command::Hopf(_) => "hopf",
            Command::Lyapunov(_) => "lyapunov",
            Command::GlobalCheck(_) => "global-check",
        }
    }
}

fn parse_state(s: &str) -> Result<State, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|_| format!("'{x}' is not a number")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [p, z, f] => Ok(State::new(p, z, f)),
        _ => Err("expected P,Z,F".into()),
    }
}

#[derive(Debug, Clone, Args)]
pub struct StartArgs {
    /// Initial state as P,Z,F.
    #[arg(long, value_parser = parse_state, default_value = "1,1,1", allow_hyphen_values = true)]
    pub initial: State,
}

impl Default for StartArgs {
    fn default() -> Self {
        Self { initial: State::new(1.0, 1.0, 1.0) }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ScanArgs {
    #[arg(long, default_value = "su")]
    pub param: ScanParameter,
    #[arg(long, default_value_t = 5.0)]
    pub lo: f64,
    #[arg(long, default_value_t = 8.5)]
    pub hi: f64,
    #[arg(long, default_value_t = 50)]
    pub steps: usize,
    /// Evaluate grid points one at a time instead of in parallel.
    #[arg(long)]
    pub serial: bool,
    #[command(flatten)]
    pub start: StartArgs,
}

#[derive(Debug, Clone, Args)]
pub struct HopfArgs {
    #[arg(long, default_value = "su")]
    pub param: ScanParameter,
    #[arg(long, default_value_t = 5.0)]
    pub lo: f64,
    #[arg(long, default_value_t = 8.23)]
    pub hi: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("reading config {path}: {source}")]
    ConfigIo { path: PathBuf, source: std::io::Error },
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{command}: parameters: {source}")]
    Model { command: &'static str, source: ModelError },
    #[error("{command}: {message}")]
    Numerical { command: &'static str, message: String },
    #[error("{command}: precondition failed: {message}")]
    Precondition { command: &'static str, message: String },
    #[error(transparent)]
    Output(#[from] ReportError),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::ConfigIo { .. } | CliError::Config(_) | CliError::Model { .. } => 2,
            CliError::Numerical { .. } => 3,
            CliError::Precondition { .. } => 4,
            CliError::Output(_) => 1,
        }
    }
}

fn integration_error(command: &'static str, e: IntegrationError) -> CliError {
    match e {
        IntegrationError::InvalidConfig(m) => {
            CliError::Config(ConfigError::InvalidValue { key: "integrator".into(), reason: m })
        }
        IntegrationError::NegativeInitialState(_) => CliError::Precondition { command, message: e.to_string() },
        other => CliError::Numerical { command, message: other.to_string() },
    }
}

fn attractor_error(command: &'static str, e: AttractorError) -> CliError {
    match e {
        AttractorError::Integration(e) => integration_error(command, e),
        AttractorError::Model(source) => CliError::Model { command, source },
        AttractorError::InvalidConfig(m) => {
            CliError::Config(ConfigError::InvalidValue { key: "transient".into(), reason: m })
        }
        other => CliError::Numerical { command, message: other.to_string() },
    }
}

pub fn load_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    match path {
        None => Ok(RunConfig::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|source| CliError::ConfigIo { path: p.to_path_buf(), source })?;
            Ok(parse_config(&text)?)
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ReferenceComparison {
    pub state: State,
    /// `(computed - reference) / reference` per component.
    pub relative_difference: Option<[f64; 3]>,
    /// Max-norm of the vector field at the reference state.
    pub residual_at_reference: f64,
    /// Components differing by more than 5%.
    pub discrepant: Vec<Species>,
    pub note: String,
}

#[derive(Debug, Serialize)]
struct EquilibriaBody<'a> {
    parameters: &'a DerivedParameters,
    equilibria: Vec<Equilibrium>,
    interior_absence: Option<String>,
    paper_reference: ReferenceComparison,
}

pub fn compare_with_reference(p: &EffectiveParameters, interior: Option<&State>) -> ReferenceComparison {
    let r = REFERENCE_INTERIOR;
    let residual_at_reference = rhs(p, &r).iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let relative_difference = interior.map(|s| [(s.p - r.p) / r.p, (s.z - r.z) / r.z, (s.f - r.f) / r.f]);
    let discrepant: Vec<Species> = match relative_difference {
        Some(d) => Species::ALL.into_iter().filter(|sp| d[sp.index()].abs() > 0.05).collect(),
        None => Species::ALL.to_vec(),
    };
    let note = if discrepant.is_empty() {
        "computed coexistence state matches the reference within 5%".to_string()
    } else {
        format!(
            "reference differs in {:?}; the reference state leaves a vector-field residual of {residual_at_reference:e}, \
             so it is not a steady state of these equations",
            discrepant
        )
    };
    ReferenceComparison { state: r, relative_difference, residual_at_reference, discrepant, note }
}

#[derive(Debug, Serialize)]
struct StabilityEntry {
    kind: EquilibriumKind,
    state: State,
    feasible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    report: Option<StabilityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Debug, Serialize)]
struct LyapunovBody {
    initial: State,
    t_end: f64,
    transient: f64,
    lambda1: f64,
    converged: bool,
    last_half: f64,
    last_quarter: f64,
}

#[derive(Debug, Serialize)]
struct GlobalBody {
    v: f64,
    rho_paper: f64,
    rho_corrected: f64,
    mu: f64,
    holds: bool,
    certificate_notes: Vec<String>,
    /// `a P + Z + F` at the coexistence state, when it exists.
    interior_weighted_total: Option<f64>,
    initial: State,
    /// Average over the post-transient part of the run.
    lozinskii: Option<LozinskiiAverage>,
    #[serde(skip_serializing_if = "Option::is_none")]
    lozinskii_error: Option<String>,
}

#[derive(Debug, Serialize)]
struct HopfBody {
    param: ScanParameter,
    bracket: (f64, f64),
    tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    critical: Option<crate::attractor::HopfPoint>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn stamped<T: Serialize>(command: &Command, fp: &str, body: T) -> Result<String, CliError> {
    Ok(report::to_json("report", &Stamped { command: command.name(), fingerprint: fp, body })?)
}

fn tail(traj: &Trajectory, from: f64) -> Trajectory {
    let start = traj.times.partition_point(|t| *t < from);
    Trajectory { times: traj.times[start..].to_vec(), states: traj.states[start..].to_vec(), meta: traj.meta.clone() }
}

/// Runs one command and writes its outputs into `out_dir`; returns the paths
/// written. A failed precondition still writes its report before the error
/// is returned.
pub fn run(command: &Command, cfg: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let name = command.name();
    let fp = fingerprint(cfg);
    fs::create_dir_all(out_dir).map_err(|source| ReportError::Io { path: out_dir.to_path_buf(), source })?;
    let derived = cfg.setup().derive().map_err(|source| CliError::Model { command: name, source })?;
    let p = derived.params;
    let out = |file: &str| out_dir.join(file);

    match command {
        Command::Equilibria => {
            let interior = interior_equilibrium(&p);
            let body = EquilibriaBody {
                parameters: &derived,
                equilibria: all_equilibria(&p),
                interior_absence: interior.as_ref().err().map(|e| e.to_string()),
                paper_reference: compare_with_reference(&p, interior.as_ref().ok().map(|e| &e.state)),
            };
            let path = out("equilibria.json");
            report::write_text(&path, &stamped(command, &fp, body)?)?;
            Ok(vec![path])
        }
        Command::Stability => {
            let entries: Vec<StabilityEntry> = all_equilibria(&p)
                .into_iter()
                .map(|e| {
                    let verdict = classify_equilibrium(&p, &e);
                    StabilityEntry {
                        kind: e.kind,
                        state: e.state,
                        feasible: e.feasible,
                        error: verdict.as_ref().err().map(|x| x.to_string()),
                        report: verdict.ok(),
                    }
                })
                .collect();
            let path = out("stability.json");
            report::write_text(&path, &stamped(command, &fp, serde_json::json!({ "equilibria": entries }))?)?;
            Ok(vec![path])
        }
        Command::Simulate(start) => {
            let traj = integrate(&p, start.initial, &cfg.integrator).map_err(|e| integration_error(name, e))?;
            let path = out("timeseries.csv");
            report::write_timeseries_csv(&traj, &path)?;
            Ok(vec![path])
        }
        Command::Scan(args) => {
            let execution = if args.serial { Execution::Serial } else { Execution::Parallel };
            let scan = bifurcation_scan(
                &cfg.setup(),
                args.param,
                args.lo,
                args.hi,
                args.steps,
                args.start.initial,
                &cfg.analysis(),
                execution,
            )
            .map_err(|e| attractor_error(name, e))?;
            let csv = out("scan.csv");
            let json = out("scan.json");
            report::write_text(&csv, &report::scan_csv(&scan))?;
            report::write_text(&json, &stamped(command, &fp, &scan)?)?;
            Ok(vec![csv, json])
        }
        Command::Hopf(args) => {
            let result = hopf_locate(&cfg.setup(), args.param, args.lo, args.hi, args.tol);
            let body = HopfBody {
                param: args.param,
                bracket: (args.lo, args.hi),
                tol: args.tol,
                error: result.as_ref().err().map(|e| e.to_string()),
                critical: result.as_ref().ok().cloned(),
            };
            let path = out("hopf.json");
            report::write_text(&path, &stamped(command, &fp, body)?)?;
            match result {
                Ok(_) => Ok(vec![path]),
                Err(e) => Err(match e {
                    HopfError::NoSignChange { .. }
                    | HopfError::NoInteriorEquilibrium { .. }
                    | HopfError::CoefficientSign { .. } => {
                        CliError::Precondition { command: name, message: e.to_string() }
                    }
                    HopfError::InvalidBracket { .. } => {
                        CliError::Config(ConfigError::InvalidValue { key: "bracket".into(), reason: e.to_string() })
                    }
                    HopfError::Model(source) => CliError::Model { command: name, source },
                    HopfError::NoImaginaryPair { .. } => CliError::Numerical { command: name, message: e.to_string() },
                }),
            }
        }
        Command::Lyapunov(start) => {
            let analysis = cfg.analysis();
            let est = largest_lyapunov(&p, start.initial, &analysis).map_err(|e| attractor_error(name, e))?;
            let body = LyapunovBody {
                initial: start.initial,
                t_end: analysis.integrator.t_end,
                transient: analysis.transient,
                lambda1: est.lambda1,
                converged: est.converged,
                last_half: est.last_half,
                last_quarter: est.last_quarter,
            };
            let path = out("lyapunov.json");
            report::write_text(&path, &stamped(command, &fp, body)?)?;
            Ok(vec![path])
        }
        Command::GlobalCheck(start) => {
            let lit = absorbing_bound(&p, BoundMode::Paper);
            let corrected = absorbing_bound(&p, BoundMode::Corrected);
            let cert = mu_certificate(&p, corrected.rho);
            let traj = integrate(&p, start.initial, &cfg.integrator).map_err(|e| integration_error(name, e))?;
            let avg = lozinskii_average(&p, &tail(&traj, cfg.transient));
            let body = GlobalBody {
                v: corrected.v,
                rho_paper: lit.rho,
                rho_corrected: corrected.rho,
                mu: cert.mu,
                holds: cert.holds,
                certificate_notes: cert.notes,
                interior_weighted_total: interior_equilibrium(&p).ok().map(|e| weighted_total(&p, &e.state)),
                initial: start.initial,
                lozinskii_error: avg.as_ref().err().map(|e| e.to_string()),
                lozinskii: avg.ok(),
            };
            let path = out("global_check.json");
            report::write_text(&path, &stamped(command, &fp, body)?)?;
            Ok(vec![path])
        }
    }
}

/// Full command-line entry point; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = load_config(cli.config.as_deref()).and_then(|cfg| run(&cli.command, &cfg, &cli.out_dir));
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("pzf: {e}");
            e.exit_code()
        }
    }
}
