mod args;
mod frcmd;
mod geometry;
mod graphcmd;
mod output;
mod volumes;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand, ValueEnum};

/// Volume functions, geodesic length checks, Friedman-Ramanujan operators and
/// regular-graph trace experiments.
///
/// Exit status: 0 when every check passed, 1 on a verification failure,
/// 2 on a usage or input error.
#[derive(Parser, Debug)]
#[command(name = "tracegap", version)]
pub struct Cli {
    /// Volume table (JSON). The bundled table is used when absent.
    #[arg(long, global = true, value_name = "PATH")]
    pub table: Option<PathBuf>,

    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Tolerance of the check being run. Each command has its own default.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// Sampling grid of FR functions as STEP:LMAX.
    #[arg(long, global = true, value_name = "STEP:LMAX")]
    pub grid: Option<args::Grid>,

    /// Write the output here instead of stdout.
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,

    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate, inspect or export a volume table.
    #[command(subcommand)]
    Volumes(volumes::VolumesCmd),
    /// Simple-geodesic volume V_g^s(ℓ) as a CSV curve.
    Vsimple(volumes::VsimpleArgs),
    /// Figure-eight volume function by level-set quadrature.
    Vtype(volumes::VtypeArgs),
    /// Expansion formula against the holonomy trace on random points.
    LengthCheck(geometry::LengthArgs),
    /// Finite-difference check of the r = 1 length Jacobian.
    JacobianCheck(geometry::JacobianArgs),
    /// Constancy of the figure-eight density ratio.
    DensityCheck(geometry::DensityArgs),
    /// Friedman-Ramanujan operators, norms and convolutions.
    #[command(subcommand)]
    Fr(frcmd::FrCmd),
    /// Random regular graph experiments.
    #[command(subcommand)]
    Graph(graphcmd::GraphCmd),
}

/// Outcome of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
}

impl Status {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<Status> {
    output::validate_paths(cli)?;
    if let Some(j) = cli.jobs {
        anyhow::ensure!(j > 0, "--jobs must be positive");
        rayon::ThreadPoolBuilder::new().num_threads(j).build_global()?;
    }
    match &cli.command {
        Command::Volumes(c) => volumes::run_volumes(cli, c),
        Command::Vsimple(a) => volumes::run_vsimple(cli, a),
        Command::Vtype(a) => volumes::run_vtype(cli, a),
        Command::LengthCheck(a) => geometry::run_length(cli, a),
        Command::JacobianCheck(a) => geometry::run_jacobian(cli, a),
        Command::DensityCheck(a) => geometry::run_density(cli, a),
        Command::Fr(c) => frcmd::run(cli, c),
        Command::Graph(c) => graphcmd::run(cli, c),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            eprintln!("\n{}", Cli::command().render_usage());
            return ExitCode::from(2);
        }
        // --help and --version
        Err(e) => e.exit(),
    };
    match run(&cli) {
        Ok(Status::Pass) => ExitCode::SUCCESS,
        Ok(Status::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}\n");
            eprintln!("{}", Cli::command().render_usage());
            ExitCode::from(2)
        }
    }
}
