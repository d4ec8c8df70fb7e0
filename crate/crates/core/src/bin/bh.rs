use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, info};

use bh_core::harness::acceptance::{Acceptance, DEFAULT_SEED};
use bh_core::harness::{run_scenario, Mode, ScenarioConfig};
use bh_core::Error;

#[derive(Parser)]
#[command(name = "bh", version, about = "Burgers-Hilbert shock solvers and reference checks")]
struct Cli {
    /// Scenario file (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Directory for CSV and JSON output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, short, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single-shock solve.
    Single,
    /// Two-shock solve up to the collision.
    TwoShock,
    /// Two-shock solve, handoff and single-shock continuation.
    Interaction,
    /// Exact piecewise-constant Burgers solution.
    BurgersRef,
    /// Godunov scheme with the Hilbert source.
    FvRef,
    /// Run the acceptance criteria (all, or those listed).
    Validate { criteria: Vec<u8> },
}

const EXIT_CHECK: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e.root() {
        Error::Config(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if cli.verbose { "debug" } else { "warn" }))
        .init();
    if let Some(n) = std::env::var("BH_NUM_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            error!("BH_NUM_THREADS: {e}");
        }
    }
    let mode = match &cli.command {
        Command::Single => Mode::Single,
        Command::TwoShock => Mode::TwoShock,
        Command::Interaction => Mode::Interaction,
        Command::BurgersRef => Mode::BurgersRef,
        Command::FvRef => Mode::FvRef,
        Command::Validate { criteria } => return validate(cli.seed, criteria),
    };
    let mut cfg = match &cli.config {
        Some(path) => match ScenarioConfig::load(path) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("{e}");
                return ExitCode::from(EXIT_CONFIG);
            }
        },
        None => ScenarioConfig::for_mode(mode),
    };
    if cfg.mode != mode {
        eprintln!("configuration error: file is for mode {}, command is {}", cfg.mode.name(), mode.name());
        return ExitCode::from(EXIT_CONFIG);
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.out.is_some() {
        cfg.output.dir = cli.out.clone();
    }
    match run_scenario(&cfg) {
        Ok(summary) => {
            for c in &summary.checks {
                println!(
                    "{} {} = {:.6e} (limit {:.6e})",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.measured,
                    c.limit
                );
            }
            for (k, v) in &summary.metrics {
                println!("{k} = {v:.10e}");
            }
            for w in &summary.warnings {
                println!("warning: {w}");
            }
            for e in &summary.exports {
                info!("wrote {} ({} rows)", e.path.display(), e.rows);
            }
            println!("{} in {:.2} s", if summary.pass { "pass" } else { "fail" }, summary.wall_time_s);
            if summary.pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_CHECK)
            }
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn validate(seed: Option<u64>, criteria: &[u8]) -> ExitCode {
    let seed = seed.unwrap_or(DEFAULT_SEED);
    let acc = Acceptance::new(seed);
    let ids: Vec<u8> = if criteria.is_empty() { (1..=10).collect() } else { criteria.to_vec() };
    let mut all = true;
    for id in ids {
        let out = acc.run(id);
        all &= out.passed;
        println!("{}", out.line());
    }
    if all {
        ExitCode::SUCCESS
    } else {
        println!("seed {seed}");
        ExitCode::from(EXIT_CHECK)
    }
}
