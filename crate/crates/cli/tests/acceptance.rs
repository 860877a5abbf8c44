//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode, Output};
use std::sync::OnceLock;
use std::time::Instant;

use multibandit::allocator::{
    import_log, synthetic_log, to_ndjson, AllocatorConfig, AnnotationState, Outcome, Session, SyntheticLogConfig,
    UnitAssignment,
};
use multibandit::env::{EnvConfig, Environment};
use multibandit::harness::{run_episode, run_experiment, ExperimentConfig, ExperimentReport};
use multibandit::policy::{casino_uncertainty, estimate_beta, select_action, PolicyKind, PolicyState};
use multibandit::seed::{rng_for, SimRng};
use multibandit::state::{apply_observation, beta_variance, Action, ArmRecord, CasinoState, Observation, WorldState};
use proptest::test_runner::{Config as ProptestConfig, TestCaseError, TestRunner};
use rand::{Rng, SeedableRng};
use support::cheat::{best_first, steps_needed, Omniscient};

type Check = fn() -> Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

const BIN: &str = env!("CARGO_BIN_EXE_multibandit");

fn default_report() -> &'static (ExperimentReport, f64) {
    static REPORT: OnceLock<(ExperimentReport, f64)> = OnceLock::new();
    REPORT.get_or_init(|| {
        let started = Instant::now();
        let report = run_experiment(&ExperimentConfig::default()).expect("default experiment runs");
        (report, started.elapsed().as_secs_f64())
    })
}

fn regret_ordering() -> Result<String, String> {
    let (report, secs) = default_report();
    let cfg = &report.config;
    ensure!(
        cfg.n_casinos == 100 && cfg.budget == 600 && cfg.repetitions == 100 && cfg.seed == 7,
        "default config drifted: {cfg:?}"
    );
    let m = |k| report.policy(k).unwrap().mean_regret;
    let (rand, tile, tile_inf, cas_inf) = (
        m(PolicyKind::Rand),
        m(PolicyKind::Tile),
        m(PolicyKind::TileInf),
        m(PolicyKind::CasInf),
    );
    ensure!(
        cas_inf < tile_inf && tile_inf < tile && tile < rand,
        "ordering violated: cas-inf {cas_inf:.4}, tile-inf {tile_inf:.4}, tile {tile:.4}, rand {rand:.4}"
    );
    let r = report.policy(PolicyKind::Rand).unwrap();
    let c = report.policy(PolicyKind::CasInf).unwrap();
    let se = (r.std_regret.powi(2) / r.regrets.len() as f64 + c.std_regret.powi(2) / c.regrets.len() as f64).sqrt();
    ensure!(rand - cas_inf > se, "gap {:.4} not above pooled SE {se:.4}", rand - cas_inf);
    ensure!(*secs < 60.0, "took {secs:.1}s");
    Ok(format!(
        "cas-inf {cas_inf:.3} < tile-inf {tile_inf:.3} < tile {tile:.3} < rand {rand:.3}; gap {:.3} > SE {se:.3}; {secs:.1}s",
        rand - cas_inf
    ))
}

fn formula_oracles() -> Result<String, String> {
    let mut rng = SimRng::seed_from_u64(1000);
    let mut worst = 0.0_f64;
    for i in 0..1000 {
        let (a, b) = (rng.random_range(0..60u64), rng.random_range(0..60u64));
        let (mean, var) = support::beta_moments(a as f64 + 1.0, b as f64 + 1.0);
        let got_mean = ArmRecord::new(0, a, b).posterior_mean();
        let got_var = beta_variance(a as f64 + 1.0, b as f64 + 1.0).map_err(|e| e.to_string())?;

        let k = rng.random_range(1..10usize);
        let arms: Vec<(u64, u64)> = (0..k)
            .map(|_| loop {
                let arm = (rng.random_range(0..25u64), rng.random_range(0..25u64));
                if arm.0 + arm.1 > 0 {
                    break arm;
                }
            })
            .collect();
        let unc = support::uncertainty_oracle(&arms);
        let got_unc = casino_uncertainty(&CasinoState::from_counts(0, &arms));

        for (what, got, want) in [("posterior_mean", got_mean, mean), ("beta_variance", got_var, var), ("casino_uncertainty", got_unc, unc)] {
            let err = (got - want).abs();
            worst = worst.max(err);
            ensure!(err <= 1e-9, "config {i}: {what} {got} vs oracle {want} (counts {a},{b}; arms {arms:?})");
        }
    }
    Ok(format!("1000 configurations, max abs error {worst:.2e}"))
}

fn small_instance_oracle() -> Result<String, String> {
    let per_casino = support::enumerate_casinos(2, 3);
    let mut n = 0;
    for c0 in &per_casino {
        for c1 in &per_casino {
            let counts = [c0.clone(), c1.clone()];
            let world = WorldState::from_counts(&counts);
            let (got, _) = select_action(PolicyKind::CasInf, &PolicyState::default(), &world, &mut SimRng::seed_from_u64(0))
                .map_err(|e| e.to_string())?;
            let want = match support::brute_force_cas_inf(&counts) {
                (c, None) => Action::SampleNew { casino: c },
                (c, Some(arm)) => Action::SampleExisting { casino: c, arm },
            };
            ensure!(got == want, "state {counts:?}: select_action {got:?}, brute force {want:?}");
            n += 1;
        }
    }
    Ok(format!("{n} states agree"))
}

fn beta_anchor() -> Result<String, String> {
    let high = estimate_beta(&CasinoState::from_counts(0, &[(9, 1), (1, 1)])).value();
    let low = estimate_beta(&CasinoState::from_counts(0, &[(1, 9)])).value();
    ensure!(high == 0.1, "best mean 0.9 gave beta {high:?}");
    ensure!(low == 0.9, "best mean 0.1 gave beta {low:?}");
    Ok("beta 0.1 and 0.9 exactly".into())
}

fn random_walk(n: usize, t: usize, seed: u64) -> Result<(), TestCaseError> {
    let mut rng = SimRng::seed_from_u64(seed);
    let mut world = WorldState::new(n);
    let mut trace = Vec::with_capacity(t);
    for step in 0..t {
        let casino = rng.random_range(0..n);
        let k = world.casinos()[casino].n_arms();
        let action = if k == 0 || rng.random_bool(0.3) {
            Action::SampleNew { casino }
        } else {
            Action::SampleExisting { casino, arm: rng.random_range(0..k) }
        };
        let arm = action.target_arm(&world).map_err(|e| TestCaseError::fail(e.to_string()))?;
        let obs = Observation::new(casino, arm, rng.random_bool(0.5));
        if step % 997 == 0 {
            let before = world.clone();
            let next = apply_observation(&world, &obs).map_err(|e| TestCaseError::fail(e.to_string()))?;
            proptest::prop_assert_eq!(&world, &before);
            world.record(&obs).map_err(|e| TestCaseError::fail(e.to_string()))?;
            proptest::prop_assert_eq!(&world, &next);
        } else {
            world.record(&obs).map_err(|e| TestCaseError::fail(e.to_string()))?;
        }
        trace.push(obs);
    }
    let total: u64 = world.casinos().iter().map(|c| c.total_observations()).sum();
    proptest::prop_assert_eq!(total, t as u64);
    proptest::prop_assert!(world.check_invariants().is_ok());
    let mut replay = WorldState::new(n);
    for obs in &trace {
        replay.record(obs).map_err(|e| TestCaseError::fail(e.to_string()))?;
    }
    proptest::prop_assert_eq!(replay, world);
    Ok(())
}

fn conservation_and_purity() -> Result<String, String> {
    let mut runner = TestRunner::new(ProptestConfig {
        cases: 48,
        failure_persistence: None,
        ..ProptestConfig::default()
    });
    runner
        .run(&(1usize..=20, 0usize..=10_000, proptest::num::u64::ANY), |(n, t, seed)| random_walk(n, t, seed))
        .map_err(|e| e.to_string())?;
    random_walk(7, 10_000, 0).map_err(|e| e.to_string())?;
    Ok("48 random sequences plus t = 10000".into())
}

fn omniscient_baseline() -> Result<String, String> {
    let mut runs = 0;
    for seed in 0..5u64 {
        let env = Environment::from_config(&EnvConfig { seed, ..EnvConfig::default() }).map_err(|e| e.to_string())?;
        let n = env.n_casinos() as u64;
        let sorted = best_first(&env);
        for budget in [n, n + 1, 2 * n, 600] {
            let mut e = sorted.clone();
            let ep = run_episode(&mut Omniscient::new(&e), &mut e, budget, &[], &mut rng_for(seed, &[budget]))
                .map_err(|e| e.to_string())?;
            ensure!(ep.regret == 0.0, "seed {seed}, budget {budget}: regret {}", ep.regret);
            runs += 1;
        }
        let needed = steps_needed(&env);
        let mut e = env.clone();
        let ep = run_episode(&mut Omniscient::new(&e), &mut e, needed, &[], &mut rng_for(seed, &[needed]))
            .map_err(|e| e.to_string())?;
        ensure!(ep.regret == 0.0, "seed {seed}, original pool order, budget {needed}: regret {}", ep.regret);
        runs += 1;
    }
    let (report, _) = default_report();
    let mut checked = 0;
    for p in &report.policies {
        for (rep, &r) in p.regrets.iter().enumerate() {
            ensure!(r >= 0.0, "{} repetition {rep}: regret {r}", p.policy);
            checked += 1;
        }
    }
    Ok(format!("cheat regret 0 in {runs} runs; {checked} policy runs all >= 0"))
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn cli_determinism() -> Result<String, String> {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let p = |name: &str| dir.path().join(name).to_string_lossy().into_owned();
    let (a, b) = (p("a.csv"), p("b.csv"));
    for out in [&a, &b] {
        let o = run(&["simulate", "--out", out]);
        ensure!(o.status.success(), "simulate failed: {}", String::from_utf8_lossy(&o.stderr));
    }
    let (ca, cb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    ensure!(ca == cb, "simulate CSVs differ");

    let log = p("log.ndjson");
    let records = synthetic_log(&SyntheticLogConfig { n_tasks: 30, ..SyntheticLogConfig::default() }, &mut rng_for(3, &[]));
    std::fs::write(&log, to_ndjson(&records)).unwrap();
    let base = p("base.json");
    let o = run(&["import", "--state", &base, "--log", &log]);
    ensure!(o.status.success(), "import failed: {}", String::from_utf8_lossy(&o.stderr));
    let mut assignments = 0;
    for policy in ["cas-inf", "rand"] {
        let (s1, s2) = (p(&format!("{policy}-1.json")), p(&format!("{policy}-2.json")));
        std::fs::copy(&base, &s1).unwrap();
        std::fs::copy(&base, &s2).unwrap();
        for _ in 0..3 {
            let o1 = run(&["allocate", "--state", &s1, "--remaining-minutes", "45", "--seed", "11", "--policy", policy]);
            let o2 = run(&["allocate", "--state", &s2, "--remaining-minutes", "45", "--seed", "11", "--policy", policy]);
            ensure!(o1.status.success() && o2.status.success(), "allocate failed");
            ensure!(o1.stdout == o2.stdout, "{policy}: assignments differ");
            ensure!(std::fs::read(&s1).unwrap() == std::fs::read(&s2).unwrap(), "{policy}: state files differ");
            assignments += 1;
        }
    }
    Ok(format!("CSV {} bytes identical; {assignments} allocate pairs identical", ca.len()))
}

fn session_accounting() -> Result<String, String> {
    let defaults = AllocatorConfig::default();
    let mut state = AnnotationState::with_tasks(defaults.clone(), (0..50).map(|i| format!("t{i:02}")));
    let mut rng = SimRng::seed_from_u64(8);
    let mut counts = Vec::new();
    for s in 0..200 {
        let mut session = Session::for_state(&state);
        let mut issued = Vec::new();
        loop {
            let remaining = session.remaining();
            let a = session.next_unit(&mut state).map_err(|e| e.to_string())?;
            let Some(kind) = a.kind() else { break };
            let cost = state.config.estimate(kind);
            ensure!(cost <= remaining, "session {s}: issued {kind:?} costing {cost} with {remaining} left");
            issued.push(a);
        }
        ensure!((5..=6).contains(&issued.len()), "session {s} issued {} units", issued.len());
        counts.push(issued.len());
        for a in issued {
            let kind = a.kind().unwrap();
            let outcome = if rng.random_bool(0.6) { Outcome::Success } else { Outcome::Failure };
            state
                .record_unit_result(a.unit_id().unwrap(), outcome, defaults.estimate(kind))
                .map_err(|e| e.to_string())?;
        }
    }
    ensure!(state.next_unit(0.0).map_err(|e| e.to_string())? == UnitAssignment::SessionDone, "zero minutes still issued a unit");
    let mean = counts.iter().sum::<usize>() as f64 / counts.len() as f64;
    Ok(format!("200 sessions, 5 to 6 units each, mean {mean:.2}"))
}

fn replay_fidelity() -> Result<String, String> {
    let records = synthetic_log(&SyntheticLogConfig::default(), &mut rng_for(7, &[]));
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let log = dir.path().join("synthetic.ndjson");
    std::fs::write(&log, to_ndjson(&records)).map_err(|e| e.to_string())?;
    let state = import_log(Path::new(&log)).map_err(|e| e.to_string())?;
    ensure!(state.tasks.len() == 400, "{} tasks", state.tasks.len());
    let (d, b) = state.role_rates();
    let (d, b) = (d.ok_or("no describer units")?, b.ok_or("no builder units")?);
    ensure!((d - 0.75).abs() <= 0.02, "describer rate {d:.4}");
    ensure!((b - 0.50).abs() <= 0.02, "builder rate {b:.4}");
    state.validate().map_err(|e| e.to_string())?;
    let world = state.world();
    world.check_invariants().map_err(|e| e.to_string())?;
    ensure!(world.n_casinos() == 400, "projection has {} casinos", world.n_casinos());
    Ok(format!("describer {d:.4}, builder {b:.4} over 400 tasks; invariants hold"))
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 9] = [
        ("regret ordering", regret_ordering),
        ("formula oracles", formula_oracles),
        ("small-instance action oracle", small_instance_oracle),
        ("beta anchor", beta_anchor),
        ("conservation and purity", conservation_and_purity),
        ("omniscient baseline", omniscient_baseline),
        ("determinism", cli_determinism),
        ("session accounting", session_accounting),
        ("replay fidelity", replay_fidelity),
    ];
    let mut failed = 0;
    for (i, (name, check)) in checks.iter().enumerate() {
        let started = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("PASS {} {name}: {detail} [{:.1}s]", i + 1, started.elapsed().as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name}: {why} [{:.1}s]", i + 1, started.elapsed().as_secs_f64());
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", checks.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
