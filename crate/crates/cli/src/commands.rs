use std::fmt;
use std::io::ErrorKind;
use std::path::Path;

use multibandit::allocator::{
    import_log_into, load_state, save_state, AllocError, AnnotationState, UnitAssignment,
};
use multibandit::env::DifficultyLaw;
use multibandit::harness::{run_experiment, ExperimentConfig};
use multibandit::report::{read_results_csv, render_svg, summarize_rows, write_report, ReportFormat};
use multibandit::seed::rng_for;
use multibandit::{BanditError, ReportError};

use crate::{AllocateArgs, ImportArgs, RecordArgs, ReportArgs, SimulateArgs};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    State(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Io(_) => 3,
            CliError::State(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Io(m) | CliError::State(m) => f.write_str(m),
        }
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        match &e {
            ReportError::Io { source, .. } if source.kind() == ErrorKind::NotFound => CliError::Usage(e.to_string()),
            ReportError::Io { .. } => CliError::Io(e.to_string()),
            ReportError::Format { .. } => CliError::State(e.to_string()),
        }
    }
}

impl From<AllocError> for CliError {
    fn from(e: AllocError) -> Self {
        match &e {
            AllocError::Io { source, .. } if source.kind() == ErrorKind::NotFound => CliError::Usage(e.to_string()),
            AllocError::Io { .. } => CliError::Io(e.to_string()),
            _ => CliError::State(e.to_string()),
        }
    }
}

pub fn simulate(args: SimulateArgs) -> Result<(), CliError> {
    let config = ExperimentConfig {
        policies: args.policies,
        n_casinos: args.casinos as usize,
        budget: args.budget,
        repetitions: args.reps as usize,
        seed: args.seed,
        pool_size: args.pool as usize,
        arm_sigma: args.sigma,
        difficulty_law: DifficultyLaw::default(),
        ucb_c: args.ucb_c,
        checkpoints: args.checkpoints,
    };
    let report = run_experiment(&config).map_err(|e| match e {
        BanditError::Domain(m) => CliError::Usage(format!("invalid configuration: {m}")),
        other => CliError::Usage(other.to_string()),
    })?;

    write_report(&report, ReportFormat::Csv, &args.out)?;
    if let Some(path) = &args.svg {
        write_report(&report, ReportFormat::Svg, path)?;
    }
    if let Some(path) = &args.json {
        write_report(&report, ReportFormat::Json, path)?;
    }

    eprintln!(
        "{} casinos, budget {}, {} repetitions, seed {} ({:.2}s)",
        config.n_casinos, config.budget, config.repetitions, config.seed, report.wall_clock_seconds
    );
    for p in &report.policies {
        eprintln!(
            "  {:<9} regret {:>8.4} ± {:<8.4} reward {:>8.4}",
            p.policy.name(),
            p.mean_regret,
            p.std_regret,
            p.mean_reward
        );
    }
    Ok(())
}

fn load_existing(path: &Path) -> Result<AnnotationState, CliError> {
    load_state(path).map_err(|e| match e {
        AllocError::Io { source, .. } if source.kind() == ErrorKind::NotFound => {
            CliError::Usage(format!("state file {} does not exist", path.display()))
        }
        other => other.into(),
    })
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string(value).expect("output serializes"));
}

pub fn allocate(args: AllocateArgs) -> Result<(), CliError> {
    let mut state = load_existing(&args.state)?;
    let mut rng = rng_for(args.seed, &[state.unit_log.len() as u64]);
    let assignment = state.next_unit_with(args.remaining_minutes, args.policy, &mut rng)?;
    if assignment != UnitAssignment::SessionDone {
        save_state(&state, &args.state)?;
    }
    print_json(&assignment);
    Ok(())
}

pub fn record(args: RecordArgs) -> Result<(), CliError> {
    let mut state = load_existing(&args.state)?;
    state.record_unit_result_with_ref(args.unit, args.outcome, args.minutes, args.external_ref)?;
    save_state(&state, &args.state)?;
    let unit = state.unit(args.unit).expect("unit was just resolved");
    print_json(unit);
    Ok(())
}

pub fn import(args: ImportArgs) -> Result<(), CliError> {
    let base = if args.state.exists() {
        load_existing(&args.state)?
    } else {
        AnnotationState::default()
    };
    let state = import_log_into(base, &args.log)?;
    save_state(&state, &args.state)?;
    let (describe, build) = state.role_rates();
    let fmt_rate = |r: Option<f64>| r.map_or_else(|| "n/a".to_string(), |v| format!("{v:.3}"));
    eprintln!(
        "{} tasks, {} units; describer success {}, builder success {}",
        state.tasks.len(),
        state.unit_log.len(),
        fmt_rate(describe),
        fmt_rate(build)
    );
    Ok(())
}

pub fn report(args: ReportArgs) -> Result<(), CliError> {
    let rows = read_results_csv(&args.input)?;
    if rows.is_empty() {
        return Err(CliError::State(format!("{}: no result rows", args.input.display())));
    }
    let summaries = summarize_rows(&rows);
    let svg = render_svg(&summaries, "Regret by policy (mean ± std)");
    std::fs::write(&args.svg, svg).map_err(|e| CliError::Io(format!("{}: {e}", args.svg.display())))?;
    for s in &summaries {
        eprintln!("  {:<9} regret {:>8.4} ± {:<8.4} (n = {})", s.policy, s.mean, s.std, s.n);
    }
    Ok(())
}
