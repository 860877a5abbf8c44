//! `multibandit` command-line driver.
//!
//! Exit codes: 0 ok, 2 usage or configuration error, 3 I/O failure,
//! 4 state or schema error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use multibandit::allocator::Outcome;
use multibandit::policy::{PolicyKind, DEFAULT_UCB_C};

pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Parser)]
#[command(name = "multibandit", version, about = "Multi-bandit best-arm identification: simulation and annotation allocation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run repeated paired simulations and write per-repetition regrets
    Simulate(SimulateArgs),
    /// Issue the next describe/build unit for a participant session
    Allocate(AllocateArgs),
    /// Record the result of an issued unit
    Record(RecordArgs),
    /// Replay an NDJSON observation log into a state file
    Import(ImportArgs),
    /// Render a whisker chart from a results CSV
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Comma-separated policies: rand, tile, tile-inf, cas-inf
    #[arg(long, value_delimiter = ',', default_value = "rand,tile,tile-inf,cas-inf")]
    pub policies: Vec<PolicyKind>,
    /// Number of casinos
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..), allow_negative_numbers = true)]
    pub casinos: u64,
    /// Total observation budget per episode
    #[arg(long, default_value_t = 600, value_parser = clap::value_parser!(u64).range(1..), allow_negative_numbers = true)]
    pub budget: u64,
    /// Repetitions per policy
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u64).range(1..), allow_negative_numbers = true)]
    pub reps: u64,
    /// Root seed for all randomness
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Pre-sampled arms per casino
    #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..), allow_negative_numbers = true)]
    pub pool: u64,
    /// Standard deviation of arm parameters around the casino quality
    #[arg(long, default_value_t = 0.1, value_parser = positive_f64, allow_negative_numbers = true)]
    pub sigma: f64,
    /// UCB exploration constant
    #[arg(long = "ucb-c", default_value_t = DEFAULT_UCB_C, value_parser = positive_f64, allow_negative_numbers = true)]
    pub ucb_c: f64,
    /// Comma-separated intermediate budgets for regret curves (JSON report)
    #[arg(long, value_delimiter = ',')]
    pub checkpoints: Vec<u64>,
    /// Results CSV (policy,repetition,regret,reward)
    #[arg(long, default_value = "results.csv")]
    pub out: PathBuf,
    /// Optional whisker chart
    #[arg(long)]
    pub svg: Option<PathBuf>,
    /// Optional full JSON report
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AllocateArgs {
    /// Allocator state file
    #[arg(long)]
    pub state: PathBuf,
    /// Minutes left in the participant's session
    #[arg(long = "remaining-minutes", value_parser = non_negative_f64, allow_negative_numbers = true)]
    pub remaining_minutes: f64,
    /// Root seed (only randomized policies draw from it)
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Allocation policy
    #[arg(long, default_value = "cas-inf")]
    pub policy: PolicyKind,
}

#[derive(Debug, Args)]
pub struct RecordArgs {
    /// Allocator state file
    #[arg(long)]
    pub state: PathBuf,
    /// Unit id printed by `allocate`
    #[arg(long)]
    pub unit: u64,
    /// success or failure
    #[arg(long, value_parser = parse_outcome)]
    pub outcome: Outcome,
    /// Minutes the unit actually took
    #[arg(long, value_parser = non_negative_f64, allow_negative_numbers = true)]
    pub minutes: f64,
    /// Where the text of a new description is stored (describe units)
    #[arg(long = "ref")]
    pub external_ref: Option<String>,
}

#[derive(Debug, Args)]
pub struct ImportArgs {
    /// Allocator state file; created when absent
    #[arg(long)]
    pub state: PathBuf,
    /// NDJSON observation log
    #[arg(long)]
    pub log: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Results CSV written by `simulate`
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Output chart
    #[arg(long)]
    pub svg: PathBuf,
}

fn positive_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("{v} is not a positive number")),
        Err(e) => Err(e.to_string()),
    }
}

fn non_negative_f64(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v >= 0.0 && v.is_finite() => Ok(v),
        Ok(v) => Err(format!("{v} is negative")),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_outcome(s: &str) -> Result<Outcome, String> {
    match s {
        "success" => Ok(Outcome::Success),
        "failure" => Ok(Outcome::Failure),
        other => Err(format!("expected success or failure, got `{other}`")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let rendered = e.to_string();
            eprintln!("{}", rendered.lines().next().unwrap_or("error: invalid arguments"));
            return ExitCode::from(2);
        }
    };
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Allocate(a) => commands::allocate(a),
        Command::Record(a) => commands::record(a),
        Command::Import(a) => commands::import(a),
        Command::Report(a) => commands::report(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
