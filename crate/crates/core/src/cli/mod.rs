//! Command-line front end: scenario files in, CSV tables and a manifest out.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numeric failure,
//! 1 I/O failure while writing results.

pub mod config;
pub mod output;
pub mod sweep;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{load_scenario, ConfigError, Scenario, Sweep};
use sweep::{RunError, RunOutput};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

/// Draws used by the `--seed` noise check.
pub const NOISE_CHECK_DRAWS: usize = 10_000;

#[derive(Debug, Parser)]
#[command(name = "wirelink", version, about = "Connected wire array near-field link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a scenario file without running it
    Validate(Common),
    /// Single-user spectral-efficiency map (se_map or spacing_study sweep)
    SeMap(Common),
    /// Two-user LMMSE rates along a trajectory
    TwoUser(Common),
    /// Dump the z_d kernel and the port impedance matrix
    Impedance(Common),
    /// Dump the H_phi grid of the driven gap
    Fields(Common),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Worker threads for the sweep (defaults to all cores)
    #[arg(long)]
    threads: Option<usize>,
    /// Seed for a Monte-Carlo check of the noise correlation at the first sweep point
    #[arg(long)]
    seed: Option<u64>,
}

/// Run the CLI on `args` (including the program name) and return the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let (verb, common) = match &cli.command {
        Command::Validate(c) => ("validate", c),
        Command::SeMap(c) => ("se-map", c),
        Command::TwoUser(c) => ("two-user", c),
        Command::Impedance(c) => ("impedance", c),
        Command::Fields(c) => ("fields", c),
    };
    let scenario = match load_scenario(&common.config) {
        Ok(s) => s,
        Err(e) => return report_config_error(&common.config, &e),
    };
    if verb == "validate" {
        println!("ok: {} (run_id {})", common.config.display(), scenario.run_id());
        return EXIT_OK;
    }
    let run = || execute(verb, &scenario, common);
    let result = match common.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(run),
            Err(e) => {
                eprintln!("error: cannot start {n} threads: {e}");
                return EXIT_CONFIG;
            }
        },
        None => run(),
    };
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            EXIT_OK
        }
        Err(Failure::Run(e @ RunError::WrongSweep { .. })) => {
            eprintln!("config error: {e}");
            EXIT_CONFIG
        }
        Err(Failure::Run(e)) => {
            eprintln!("numeric failure: {e}");
            EXIT_NUMERIC
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            EXIT_IO
        }
    }
}

fn report_config_error(path: &std::path::Path, e: &ConfigError) -> i32 {
    match e {
        ConfigError::Invalid(diags) => {
            for d in diags {
                eprintln!("config error: {}: {d}", path.display());
            }
        }
        other => eprintln!("config error: {}: {other}", path.display()),
    }
    EXIT_CONFIG
}

enum Failure {
    Run(RunError),
    Io(std::io::Error),
}

impl From<RunError> for Failure {
    fn from(e: RunError) -> Self {
        Failure::Run(e)
    }
}

fn execute(verb: &str, scenario: &Scenario, common: &Common) -> Result<Vec<PathBuf>, Failure> {
    let start = Instant::now();
    let output = run_verb(verb, scenario)?;
    let check = match common.seed {
        Some(seed) => Some(sweep::noise_check(scenario, seed, NOISE_CHECK_DRAWS)?),
        None => None,
    };
    for w in &output.warnings {
        eprintln!("warning: {w}");
    }
    output::write_run(
        &common.out,
        verb,
        scenario,
        &output,
        start.elapsed().as_secs_f64(),
        check,
    )
    .map_err(Failure::Io)
}

/// Dispatch a verb to its runner.
pub fn run_verb(verb: &str, scenario: &Scenario) -> Result<RunOutput, RunError> {
    match verb {
        "se-map" => match scenario.sweep {
            Sweep::SpacingStudy { .. } => sweep::run_spacing_study(scenario),
            _ => sweep::run_se_map(scenario),
        },
        "two-user" => sweep::run_two_user(scenario),
        "impedance" => sweep::run_impedance(scenario),
        "fields" => sweep::run_fields(scenario),
        other => panic!("unknown verb {other}"),
    }
}
