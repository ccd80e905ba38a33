use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::Params;

/// An error in how the tool was invoked (exit code 2).
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Parser, Debug)]
#[command(
    name = "dinistat",
    version,
    about = "Dini derivatives, delta-stationarity scans and stability certificates"
)]
#[command(allow_negative_numbers = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Value, sign pattern and stationarity gauge at a point
    Eval(EvalArgs),
    /// Grid points that are delta-stationary
    Scan(ScanArgs),
    /// Sup-distance of delta-stationary points from a centre, over a delta ladder
    Profile(ProfileArgs),
    /// (r1, lambda0) stability certificate for a minimiser
    Certify(CertifyArgs),
    /// Run an optimiser and check its contract, or a two-sided stability experiment
    Run(Box<RunArgs>),
    /// Cluster the values of stationary grid points
    Census(CensusArgs),
    /// Check the catalogue facts of zoo entries
    Verify(VerifyArgs),
    /// Catalogue of example functions
    Zoo {
        #[command(subcommand)]
        action: ZooAction,
    },
}

#[derive(Subcommand, Debug)]
enum ZooAction {
    /// Names, domains and analytic flags
    List,
}

#[derive(Args, Debug, Default)]
struct Common {
    /// Zoo entry to use
    #[arg(long, conflicts_with = "dsl")]
    zoo: Option<String>,
    /// S-expression file to use
    #[arg(long)]
    dsl: Option<PathBuf>,
    /// Box domain, `lo:hi` per axis separated by commas (one interval applies to every axis)
    #[arg(long, allow_hyphen_values = true)]
    domain: Option<String>,
    /// Output directory for CSVs and the resolved configuration
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: logical cores)
    #[arg(long)]
    jobs: Option<usize>,
    /// Grid points per axis
    #[arg(long)]
    grid: Option<usize>,
    /// Kink band for sign classification
    #[arg(long)]
    zeta: Option<f64>,
    /// TOML file with defaults for any of these settings (flags win)
    #[arg(long)]
    config: Option<PathBuf>,
    /// Expected verdict; the exit code is 1 when the outcome differs
    #[arg(long, value_parser = ["pass", "fail"])]
    expect: Option<String>,
}

impl Common {
    fn params(&self) -> Params {
        Params {
            zoo: self.zoo.clone(),
            dsl: self.dsl.clone(),
            domain: self.domain.clone(),
            out: self.out.clone(),
            seed: self.seed,
            jobs: self.jobs,
            grid: self.grid,
            zeta: self.zeta,
            expect: self.expect.clone(),
            ..Params::default()
        }
    }
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    common: Common,
    /// Point, comma separated
    #[arg(long, value_delimiter = ',')]
    at: Option<Vec<f64>>,
    /// Also report the delta-stationarity verdict
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args, Debug)]
struct ProfileArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',')]
    center: Option<Vec<f64>>,
    /// Ball radius
    #[arg(long)]
    r1: Option<f64>,
    /// `A..B` for the decades from A down to B, or a comma list
    #[arg(long)]
    deltas: Option<String>,
    /// Grid spacing (overrides --grid)
    #[arg(long)]
    h: Option<f64>,
}

#[derive(Args, Debug)]
struct CertifyArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',')]
    center: Option<Vec<f64>>,
    #[arg(long)]
    r: Option<f64>,
    /// Grid spacing (overrides --grid)
    #[arg(long)]
    h: Option<f64>,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// `subgradient` or `gradient-sampling`
    #[arg(long)]
    algo: Option<String>,
    /// Start point (also an extra start in experiment mode)
    #[arg(long, value_delimiter = ',')]
    start: Option<Vec<f64>>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Gradient samples per step
    #[arg(long)]
    samples: Option<usize>,
    /// Initial sampling radius
    #[arg(long)]
    radius: Option<f64>,
    /// Run the two-sided stability experiment instead of a single trajectory
    #[arg(long)]
    experiment: bool,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    starts: Option<usize>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    center: Option<Vec<f64>>,
    #[arg(long)]
    r: Option<f64>,
    /// Certificate grid spacing
    #[arg(long)]
    h: Option<f64>,
    /// Use a given certificate instead of computing one (needs --r1 too)
    #[arg(long, requires = "r1")]
    lambda0: Option<f64>,
    #[arg(long, requires = "lambda0")]
    r1: Option<f64>,
}

#[derive(Args, Debug)]
struct CensusArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    cluster_tol: Option<f64>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    common: Common,
    /// Every zoo entry
    #[arg(long)]
    all: bool,
    #[arg(long)]
    tol: Option<f64>,
}

fn flags(cmd: &Command) -> (&'static str, &Common, Params) {
    match cmd {
        Command::Eval(a) => (
            "eval",
            &a.common,
            Params {
                at: a.at.clone(),
                delta: a.delta,
                ..a.common.params()
            },
        ),
        Command::Scan(a) => (
            "scan",
            &a.common,
            Params {
                delta: a.delta,
                ..a.common.params()
            },
        ),
        Command::Profile(a) => (
            "profile",
            &a.common,
            Params {
                center: a.center.clone(),
                r1: a.r1,
                deltas: a.deltas.clone(),
                h: a.h,
                ..a.common.params()
            },
        ),
        Command::Certify(a) => (
            "certify",
            &a.common,
            Params {
                center: a.center.clone(),
                r: a.r,
                h: a.h,
                ..a.common.params()
            },
        ),
        Command::Run(a) => (
            "run",
            &a.common,
            Params {
                algo: a.algo.clone(),
                start: a.start.clone(),
                delta: a.delta,
                lambda: a.lambda,
                eta: a.eta,
                max_iter: a.max_iter,
                samples: a.samples,
                radius: a.radius,
                experiment: a.experiment.then_some(true),
                eps: a.eps,
                starts: a.starts,
                seeds: a.seeds,
                center: a.center.clone(),
                r: a.r,
                h: a.h,
                lambda0: a.lambda0,
                r1: a.r1,
                ..a.common.params()
            },
        ),
        Command::Census(a) => (
            "census",
            &a.common,
            Params {
                delta: a.delta,
                cluster_tol: a.cluster_tol,
                ..a.common.params()
            },
        ),
        Command::Verify(a) => (
            "verify",
            &a.common,
            Params {
                all: a.all.then_some(true),
                tol: a.tol,
                ..a.common.params()
            },
        ),
        Command::Zoo { .. } => unreachable!("handled before flag resolution"),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    use dinistat::Error as E;
    if err.downcast_ref::<UsageError>().is_some() {
        return 2;
    }
    match err.downcast_ref::<E>() {
        Some(
            E::Parse { .. }
            | E::UnknownEntry(_)
            | E::Argument(_)
            | E::Malformed(_)
            | E::Dimension { .. },
        ) => 2,
        _ => 3,
    }
}

fn run(cli: Cli) -> anyhow::Result<commands::Verdict> {
    if let Command::Zoo {
        action: ZooAction::List,
    } = cli.command
    {
        commands::zoo_list();
        return Ok(commands::Verdict::None);
    }
    let (name, common, from_flags) = flags(&cli.command);
    let params = match &common.config {
        Some(path) => from_flags.over(Params::load(path)?),
        None => from_flags,
    };
    if let Some(jobs) = params.jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()?;
    }
    commands::dispatch(name, params)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(verdict) => ExitCode::from(verdict.exit_code()),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
