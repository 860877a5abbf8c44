//! Episode runner and repeated-experiment aggregation.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{DifficultyLaw, EnvConfig, Environment, DEFAULT_ARM_SIGMA, DEFAULT_POOL_SIZE};
use crate::error::BanditError;
use crate::policy::{select_action, PolicyKind, PolicyState, DEFAULT_UCB_C};
use crate::seed::{rng_for, SimRng};
use crate::state::{propose_best_arms, regret, Action, Observation, Proposal, WorldState};

const ENV_STREAM: u64 = 0x0065_6e76;
const EPISODE_STREAM: u64 = 0x6570_6973;

/// Something that picks arms and, once the budget is spent, proposes the best
/// arm per casino. The environment is visible so that test oracles can cheat;
/// real policies ignore it.
pub trait Agent {
    fn select(
        &mut self,
        world: &WorldState,
        env: &Environment,
        rng: &mut SimRng,
    ) -> Result<Action, BanditError>;

    fn propose(&self, world: &WorldState, _env: &Environment) -> Proposal {
        propose_best_arms(world)
    }
}

/// Adapter running one of the built-in policies.
#[derive(Debug, Clone)]
pub struct PolicyAgent {
    kind: PolicyKind,
    state: PolicyState,
}

impl PolicyAgent {
    pub fn new(kind: PolicyKind, ucb_c: f64) -> Self {
        Self {
            kind,
            state: PolicyState::with_ucb_c(ucb_c),
        }
    }
}

impl Agent for PolicyAgent {
    fn select(
        &mut self,
        world: &WorldState,
        _env: &Environment,
        rng: &mut SimRng,
    ) -> Result<Action, BanditError> {
        let (action, next) = select_action(self.kind, &self.state, world, rng)?;
        self.state = next;
        Ok(action)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub action: Action,
    pub observation: Observation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub proposal: Proposal,
    pub regret: f64,
    pub reward: f64,
    pub trace: Vec<TraceStep>,
    /// `(budget, regret)` of the would-be proposal at each requested checkpoint.
    pub checkpoints: Vec<(u64, f64)>,
    pub world: WorldState,
}

fn score(agent: &impl Agent, world: &WorldState, env: &Environment) -> Result<(Proposal, f64, f64), BanditError> {
    let proposal = agent.propose(world, env);
    let out = regret(&proposal, &env.truth())?;
    Ok((proposal, out.regret, out.reward))
}

/// Runs exactly `budget` select/draw/observe steps, then scores the proposal.
pub fn run_episode<A: Agent>(
    agent: &mut A,
    env: &mut Environment,
    budget: u64,
    checkpoints: &[u64],
    rng: &mut SimRng,
) -> Result<Episode, BanditError> {
    let mut world = WorldState::new(env.n_casinos());
    let mut trace = Vec::with_capacity(budget as usize);
    let mut curve = Vec::new();
    let mut record_checkpoint = |t: u64, world: &WorldState, env: &Environment, agent: &A| {
        if checkpoints.contains(&t) {
            score(agent, world, env).map(|(_, r, _)| curve.push((t, r)))
        } else {
            Ok(())
        }
    };
    record_checkpoint(0, &world, env, agent)?;

    for t in 1..=budget {
        let action = agent.select(&world, env, rng)?;
        let arm = action.target_arm(&world)?;
        let casino = env.casino_mut(action.casino())?;
        if let Action::SampleNew { .. } = action {
            let revealed = casino.reveal_new_arm()?;
            if revealed != arm {
                return Err(BanditError::ContractViolation(format!(
                    "casino {}: revealed pool arm {revealed} but world expects arm {arm}",
                    action.casino()
                )));
            }
        }
        let success = casino.draw_outcome(arm, rng)?;
        let observation = Observation::new(action.casino(), arm, success);
        world.record(&observation)?;
        trace.push(TraceStep {
            action,
            observation,
        });
        record_checkpoint(t, &world, env, agent)?;
    }

    let (proposal, regret, reward) = score(agent, &world, env)?;
    Ok(Episode {
        proposal,
        regret,
        reward,
        trace,
        checkpoints: curve,
        world,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub policies: Vec<PolicyKind>,
    pub n_casinos: usize,
    pub budget: u64,
    pub repetitions: usize,
    pub seed: u64,
    pub pool_size: usize,
    pub arm_sigma: f64,
    pub difficulty_law: DifficultyLaw,
    pub ucb_c: f64,
    /// Intermediate budgets at which a would-be proposal is scored.
    pub checkpoints: Vec<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            policies: PolicyKind::ALL.to_vec(),
            n_casinos: 100,
            budget: 600,
            repetitions: 100,
            seed: 7,
            pool_size: DEFAULT_POOL_SIZE,
            arm_sigma: DEFAULT_ARM_SIGMA,
            difficulty_law: DifficultyLaw::default(),
            ucb_c: DEFAULT_UCB_C,
            checkpoints: Vec::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn env_config(&self, seed: u64) -> EnvConfig {
        EnvConfig {
            n_casinos: self.n_casinos,
            pool_size: self.pool_size,
            difficulty_law: self.difficulty_law,
            arm_sigma: self.arm_sigma,
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), BanditError> {
        if self.budget == 0 {
            return Err(BanditError::Domain("budget must be at least 1".into()));
        }
        if self.repetitions == 0 {
            return Err(BanditError::Domain("repetitions must be at least 1".into()));
        }
        if self.policies.is_empty() {
            return Err(BanditError::Domain("at least one policy is required".into()));
        }
        for (i, p) in self.policies.iter().enumerate() {
            if self.policies[..i].contains(p) {
                return Err(BanditError::Domain(format!("policy {p} listed twice")));
            }
        }
        if !(self.ucb_c > 0.0 && self.ucb_c.is_finite()) {
            return Err(BanditError::Domain(format!("ucb_c must be positive, got {}", self.ucb_c)));
        }
        if let Some(c) = self.checkpoints.iter().find(|&&c| c > self.budget) {
            return Err(BanditError::Domain(format!(
                "checkpoint {c} exceeds the budget {}",
                self.budget
            )));
        }
        self.env_config(self.seed).validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub budget: u64,
    pub mean_regret: f64,
    pub std_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyResult {
    pub policy: PolicyKind,
    /// Indexed by repetition.
    pub regrets: Vec<f64>,
    pub rewards: Vec<f64>,
    pub mean_regret: f64,
    /// Sample (n - 1) standard deviation; 0 for a single repetition.
    pub std_regret: f64,
    pub mean_reward: f64,
    pub curve: Vec<CurvePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    /// At each repetition every policy faces the same environment instance.
    pub paired_environments: bool,
    pub policies: Vec<PolicyResult>,
    pub wall_clock_seconds: f64,
}

impl ExperimentReport {
    pub fn policy(&self, kind: PolicyKind) -> Option<&PolicyResult> {
        self.policies.iter().find(|p| p.policy == kind)
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn sample_std(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    (ss / (xs.len() - 1) as f64).sqrt()
}

struct RunSummary {
    regret: f64,
    reward: f64,
    curve: Vec<(u64, f64)>,
}

/// Runs every policy for every repetition and aggregates the regrets.
///
/// Repetition `r` builds one environment from a seed derived from
/// `(seed, r)` and hands a clone to each policy; episode randomness is derived
/// from `(seed, r, policy)`. Repetitions run in parallel and are merged in
/// order, so the report depends only on the config.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, BanditError> {
    config.validate()?;
    let started = Instant::now();
    let mut checkpoints = config.checkpoints.clone();
    checkpoints.sort_unstable();
    checkpoints.dedup();

    let per_rep: Vec<Vec<RunSummary>> = (0..config.repetitions)
        .into_par_iter()
        .map(|rep| {
            let env_cfg = config.env_config(config.seed);
            let env = Environment::build(&env_cfg, &mut rng_for(config.seed, &[ENV_STREAM, rep as u64]))?;
            config
                .policies
                .iter()
                .map(|&kind| {
                    let mut env = env.clone();
                    let mut rng = rng_for(config.seed, &[EPISODE_STREAM, rep as u64, kind.ordinal()]);
                    let mut agent = PolicyAgent::new(kind, config.ucb_c);
                    let ep = run_episode(&mut agent, &mut env, config.budget, &checkpoints, &mut rng)?;
                    Ok(RunSummary {
                        regret: ep.regret,
                        reward: ep.reward,
                        curve: ep.checkpoints,
                    })
                })
                .collect()
        })
        .collect::<Result<_, BanditError>>()?;

    let policies = config
        .policies
        .iter()
        .enumerate()
        .map(|(pi, &policy)| {
            let regrets: Vec<f64> = per_rep.iter().map(|r| r[pi].regret).collect();
            let rewards: Vec<f64> = per_rep.iter().map(|r| r[pi].reward).collect();
            let curve = checkpoints
                .iter()
                .enumerate()
                .map(|(ci, &budget)| {
                    let at: Vec<f64> = per_rep.iter().map(|r| r[pi].curve[ci].1).collect();
                    CurvePoint {
                        budget,
                        mean_regret: mean(&at),
                        std_regret: sample_std(&at),
                    }
                })
                .collect();
            PolicyResult {
                policy,
                mean_regret: mean(&regrets),
                std_regret: sample_std(&regrets),
                mean_reward: mean(&rewards),
                regrets,
                rewards,
                curve,
            }
        })
        .collect();

    Ok(ExperimentReport {
        config: config.clone(),
        paired_environments: true,
        policies,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    })
}
