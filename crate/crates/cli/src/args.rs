//! Command-line flags, the flat config file and their merge into a validated
//! [`RunConfig`]. Flags override the file; the file overrides defaults.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use tempus_core::strong_error::ConvergenceExperiment;
use tempus_core::{CoefficientSpec, Error, MomentQuery, ResolutionLadder, SubordinatorModel};

/// Master seed used when neither `--seed` nor the config file sets one.
pub const DEFAULT_SEED: u64 = 20_240_917;

pub const DEFAULT_DELTA: f64 = 1e-3;
pub const DEFAULT_MOMENT_PATHS: u64 = 10_000;
pub const DEFAULT_CONVERGE_PATHS: u64 = 2_000;
pub const DEFAULT_DELTA_REF: f64 = 1.0 / 16_384.0;
pub const DEFAULT_FACTORS: [usize; 6] = [16, 32, 64, 128, 256, 512];

#[derive(Debug, Parser)]
#[command(
    name = "tempus",
    version,
    about = "Simulate SDEs driven by time-changed Brownian motion"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Master seed [default: 20240917]
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Directory for output files [default: .]
    #[arg(long, global = true)]
    pub output_dir: Option<PathBuf>,

    /// Worker threads [default: hardware parallelism]
    #[arg(long, global = true, env = "TEMPUS_THREADS")]
    pub threads: Option<usize>,

    /// Flat TOML file of parameters; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Omit the `generated_unix` line from outputs
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CommandKind {
    SimulateClock,
    SimulateSde,
    Moment,
    Converge,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write one path of the discretized inverse clock to clock.csv
    SimulateClock(Params),
    /// Write one time-changed Euler-Maruyama path to paths.csv
    SimulateSde(Params),
    /// Classify E[exp(lambda E_t^r)] and estimate it; writes moment.json
    Moment(Params),
    /// Coupled strong-error experiment; writes convergence.json and convergence.csv
    Converge(Params),
}

impl Command {
    pub fn kind(&self) -> CommandKind {
        match self {
            Command::SimulateClock(_) => CommandKind::SimulateClock,
            Command::SimulateSde(_) => CommandKind::SimulateSde,
            Command::Moment(_) => CommandKind::Moment,
            Command::Converge(_) => CommandKind::Converge,
        }
    }

    pub fn params(&self) -> &Params {
        match self {
            Command::SimulateClock(p) | Command::SimulateSde(p) | Command::Moment(p) | Command::Converge(p) => p,
        }
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct Params {
    /// Subordinator: stable:B, tempered:B:K, gamma, mixture:A1,A2:B1,B2
    #[arg(long)]
    pub model: Option<String>,

    /// Coefficients: fig2, linear:A,B, additive:MU,SIGMA, ou:THETA,SIGMA, rough:THETA,T0
    #[arg(long)]
    pub coeffs: Option<String>,

    /// Clock step
    #[arg(long)]
    pub delta: Option<f64>,

    /// Time horizon
    #[arg(long = "T", alias = "horizon")]
    pub horizon: Option<f64>,

    /// Initial value
    #[arg(long)]
    pub x0: Option<f64>,

    #[arg(long)]
    pub lambda: Option<f64>,

    #[arg(long)]
    pub r: Option<f64>,

    /// Time at which the moment is taken
    #[arg(long)]
    pub t: Option<f64>,

    /// Drift of the subordinator (classification only)
    #[arg(long)]
    pub drift_a: Option<f64>,

    /// Monte Carlo paths
    #[arg(long)]
    pub paths: Option<u64>,

    /// Reference step of the convergence ladder
    #[arg(long)]
    pub delta_ref: Option<f64>,

    /// Coarse factors, comma separated
    #[arg(long)]
    pub factors: Option<String>,

    /// Run Monte Carlo even when the moment is not finite
    #[arg(long)]
    pub force_mc: bool,
}

/// The config file: every parameter plus the global options.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub threads: Option<usize>,
    #[serde(default)]
    pub no_timestamp: bool,
    pub model: Option<String>,
    pub coeffs: Option<String>,
    pub delta: Option<f64>,
    #[serde(rename = "T", alias = "horizon")]
    pub horizon: Option<f64>,
    pub x0: Option<f64>,
    pub lambda: Option<f64>,
    pub r: Option<f64>,
    pub t: Option<f64>,
    pub drift_a: Option<f64>,
    pub paths: Option<u64>,
    pub delta_ref: Option<f64>,
    pub factors: Option<FileFactors>,
    #[serde(default)]
    pub force_mc: bool,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum FileFactors {
    List(Vec<usize>),
    Text(String),
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Error> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Resource(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Config(format!("config {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone)]
pub enum Experiment {
    SimulateClock {
        model: SubordinatorModel,
        delta: f64,
        horizon: f64,
    },
    SimulateSde {
        model: SubordinatorModel,
        coeffs: CoefficientSpec,
        delta: f64,
        horizon: f64,
        x0: f64,
    },
    Moment {
        query: MomentQuery,
        delta: f64,
        paths: u64,
        force_mc: bool,
    },
    Converge(Box<ConvergenceExperiment>),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub threads: Option<usize>,
    pub timestamp: bool,
}

fn parse_factors(text: &str) -> Result<Vec<usize>, Error> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| Error::Config(format!("bad coarse factor {s:?}")))
        })
        .collect()
}

/// Flags whose value was given on the command line but does not apply.
fn stray_flags(kind: CommandKind, p: &Params) -> Vec<&'static str> {
    use CommandKind::*;
    let given = [
        ("--coeffs", p.coeffs.is_some(), !matches!(kind, SimulateSde | Converge)),
        ("--delta", p.delta.is_some(), kind == Converge),
        ("--T", p.horizon.is_some(), kind == Moment),
        ("--x0", p.x0.is_some(), !matches!(kind, SimulateSde | Converge)),
        ("--lambda", p.lambda.is_some(), kind != Moment),
        ("--r", p.r.is_some(), kind != Moment),
        ("--t", p.t.is_some(), kind != Moment),
        ("--drift-a", p.drift_a.is_some(), kind != Moment),
        ("--paths", p.paths.is_some(), !matches!(kind, Moment | Converge)),
        ("--delta-ref", p.delta_ref.is_some(), kind != Converge),
        ("--factors", p.factors.is_some(), kind != Converge),
        ("--force-mc", p.force_mc, kind != Moment),
    ];
    given
        .iter()
        .filter(|(_, set, stray)| *set && *stray)
        .map(|(n, ..)| *n)
        .collect()
}

impl RunConfig {
    pub fn from_cli(cli: &Cli) -> Result<Self, Error> {
        let file = match &cli.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let kind = cli.command.kind();
        let p = cli.command.params();
        let stray = stray_flags(kind, p);
        if !stray.is_empty() {
            return Err(Error::Config(format!("{} not used by this command", stray.join(", "))));
        }
        let f = &file;

        let model = || -> Result<SubordinatorModel, Error> {
            p.model
                .as_ref()
                .or(f.model.as_ref())
                .ok_or_else(|| Error::Config("--model is required".into()))?
                .parse()
        };
        let coeffs = || -> Result<CoefficientSpec, Error> {
            p.coeffs
                .as_ref()
                .or(f.coeffs.as_ref())
                .ok_or_else(|| Error::Config("--coeffs is required".into()))?
                .parse()
        };
        let delta = p.delta.or(f.delta).unwrap_or(DEFAULT_DELTA);

        let experiment = match kind {
            CommandKind::SimulateClock => Experiment::SimulateClock {
                model: model()?,
                delta,
                horizon: p.horizon.or(f.horizon).unwrap_or(1.0),
            },
            CommandKind::SimulateSde => {
                let coeffs = coeffs()?;
                let (x0, horizon) = coeffs.defaults();
                Experiment::SimulateSde {
                    model: model()?,
                    coeffs,
                    delta,
                    horizon: p.horizon.or(f.horizon).unwrap_or(horizon),
                    x0: p.x0.or(f.x0).unwrap_or(x0),
                }
            }
            CommandKind::Moment => {
                let query = MomentQuery::new(
                    model()?,
                    p.lambda.or(f.lambda).unwrap_or(1.0),
                    p.t.or(f.t).unwrap_or(1.0),
                    p.r.or(f.r).unwrap_or(1.0),
                )?
                .with_drift(p.drift_a.or(f.drift_a).unwrap_or(0.0))?;
                Experiment::Moment {
                    query,
                    delta,
                    paths: p.paths.or(f.paths).unwrap_or(DEFAULT_MOMENT_PATHS),
                    force_mc: p.force_mc || f.force_mc,
                }
            }
            CommandKind::Converge => {
                let spec = coeffs()?;
                let (x0, horizon) = spec.defaults();
                let factors = match (&p.factors, &f.factors) {
                    (Some(s), _) => parse_factors(s)?,
                    (None, Some(FileFactors::Text(s))) => parse_factors(s)?,
                    (None, Some(FileFactors::List(v))) => v.clone(),
                    (None, None) => DEFAULT_FACTORS.to_vec(),
                };
                let ladder = ResolutionLadder::new(p.delta_ref.or(f.delta_ref).unwrap_or(DEFAULT_DELTA_REF), factors)?;
                Experiment::Converge(Box::new(ConvergenceExperiment::new(
                    model()?,
                    spec.build()?,
                    p.x0.or(f.x0).unwrap_or(x0),
                    p.horizon.or(f.horizon).unwrap_or(horizon),
                    ladder,
                    p.paths.or(f.paths).unwrap_or(DEFAULT_CONVERGE_PATHS),
                )))
            }
        };

        let threads = cli.threads.or(file.threads);
        if threads == Some(0) {
            return Err(Error::Config("--threads must be >= 1".into()));
        }
        Ok(Self {
            experiment,
            seed: cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            output_dir: cli
                .output_dir
                .clone()
                .or(file.output_dir)
                .unwrap_or_else(|| PathBuf::from(".")),
            threads,
            timestamp: !(cli.no_timestamp || file.no_timestamp),
        })
    }
}
