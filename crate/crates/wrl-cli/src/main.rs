//! `wrl` — command-line runner for the crystalline-perimeter / Riesz
//! laboratory. Every subcommand writes `summary.json`, `data.csv`, and
//! `figure.svg` into its run directory and prints a one-line summary on
//! stdout. Exit codes: 0 success, 2 configuration error, 3 numerical
//! failure; errors emit one JSON object on stderr.

mod commands;
mod config;
mod errors;
mod output;
mod quad;
mod shape;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use serde_json::Value;

use crate::config::{load_config_file, Layers};
use crate::errors::CliError;
use crate::output::RunDir;

#[derive(Parser)]
#[command(
    name = "wrl",
    version,
    about = "Planar laboratory for crystalline perimeters with Riesz repulsion"
)]
struct Cli {
    /// TOML config file with one table per subcommand plus [global].
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output directory (default: wrl-out/<command>).
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// RNG seed; WRL_SEED is the environment fallback.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; WRL_THREADS is the environment fallback.
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a surface tension to its equilibrium shape and back.
    Wulff(commands::wulff::WulffArgs),
    /// Perimeter, self interaction, and analytic bounds for one polygon.
    Energy(commands::energy::EnergyArgs),
    /// Side averages of the potential and the criticality residual.
    Criticality(commands::criticality::CriticalityArgs),
    /// Log-log probe of the quadratic energy bound along one direction.
    Quadbound(commands::quadbound::QuadboundArgs),
    /// Minimize the energy over bounded side translations at fixed area.
    Minimize(commands::minimize_cmd::MinimizeArgs),
    /// Classify sides as tension-pinned or potential-levelling.
    Rigidity(commands::rigidity::RigidityArgs),
    /// One mass against far-apart pieces across the coupling strength.
    Split(commands::split::SplitArgs),
    /// Hunt for near-critical polygons outside the symmetric family.
    SearchCritical(commands::search::SearchArgs),
    /// Deterministic self checks; any failure exits with code 3.
    Selftest(commands::selftest::SelftestArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Wulff(_) => "wulff",
            Command::Energy(_) => "energy",
            Command::Criticality(_) => "criticality",
            Command::Quadbound(_) => "quadbound",
            Command::Minimize(_) => "minimize",
            Command::Rigidity(_) => "rigidity",
            Command::Split(_) => "split",
            Command::SearchCritical(_) => "search-critical",
            Command::Selftest(_) => "selftest",
        }
    }
}

/// Resolved global state handed to every subcommand.
pub struct Ctx<'a> {
    pub file: Option<&'a toml::Table>,
    pub seed: u64,
    pub run: RunDir,
    pub name: &'static str,
}

impl Ctx<'_> {
    /// Config layer scoped to this subcommand's table.
    pub fn layers(&self) -> Layers<'_> {
        Layers::new(self.file, self.name)
    }

    pub fn write_summary(&self, config: Value, results: Value) -> Result<(), CliError> {
        self.run
            .write_summary(self.name, self.seed, config, results)
            .map(|_| ())
    }
}

fn env_u64(name: &str) -> Result<Option<u64>, CliError> {
    match std::env::var(name) {
        Ok(v) => v
            .parse::<u64>()
            .map(Some)
            .map_err(|_| CliError::Config(format!("{name} must be an unsigned integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn env_usize(name: &str) -> Result<Option<usize>, CliError> {
    match std::env::var(name) {
        Ok(v) => v
            .parse::<usize>()
            .map(Some)
            .map_err(|_| CliError::Config(format!("{name} must be an unsigned integer, got {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Result<String, CliError> {
    let file = match &cli.config {
        Some(path) => Some(load_config_file(path)?),
        None => None,
    };
    let global = Layers::new(file.as_ref(), "global");
    let seed = global.u64("seed", cli.seed.or(env_u64("WRL_SEED")?), 42);
    let threads = match cli.threads.or(env_usize("WRL_THREADS")?) {
        Some(t) => Some(t),
        None => global.opt_usize("threads", None),
    };
    if let Some(t) = threads {
        if t == 0 {
            return Err(CliError::Config("threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }

    let name = cli.command.name();
    let dir = cli
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from("wrl-out").join(name));
    let ctx = Ctx {
        file: file.as_ref(),
        seed,
        run: RunDir::create(&dir)?,
        name,
    };

    match &cli.command {
        Command::Wulff(a) => commands::wulff::run(a, &ctx),
        Command::Energy(a) => commands::energy::run(a, &ctx),
        Command::Criticality(a) => commands::criticality::run(a, &ctx),
        Command::Quadbound(a) => commands::quadbound::run(a, &ctx),
        Command::Minimize(a) => commands::minimize_cmd::run(a, &ctx),
        Command::Rigidity(a) => commands::rigidity::run(a, &ctx),
        Command::Split(a) => commands::split::run(a, &ctx),
        Command::SearchCritical(a) => commands::search::run(a, &ctx),
        Command::Selftest(a) => commands::selftest::run(a, &ctx),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return;
            }
            let err = CliError::Config(e.to_string());
            eprintln!("{}", err.to_stderr_json());
            std::process::exit(2);
        }
    };
    match run(cli) {
        Ok(line) => println!("{line}"),
        Err(e) => {
            eprintln!("{}", e.to_stderr_json());
            std::process::exit(i32::from(e.exit_code()));
        }
    }
}
