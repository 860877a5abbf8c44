//! Observation state of the multi-bandit problem.
//!
//! A [`WorldState`] holds one [`CasinoState`] per casino; each casino holds the
//! success/failure counts of the arms sampled so far. Everything here is a plain
//! value: transitions return a new state and nothing draws randomness.

use serde::{Deserialize, Serialize};

use crate::error::BanditError;

/// Success/failure counts for one sampled arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ArmRecord {
    pub arm_id: usize,
    pub successes: u64,
    pub failures: u64,
}

impl ArmRecord {
    pub fn new(arm_id: usize, successes: u64, failures: u64) -> Self {
        Self {
            arm_id,
            successes,
            failures,
        }
    }

    pub fn observations(&self) -> u64 {
        self.successes + self.failures
    }

    /// Sampled mean `A / (A + B)`.
    pub fn empirical_mean(&self) -> Result<f64, BanditError> {
        let n = self.observations();
        if n == 0 {
            return Err(BanditError::ContractViolation(format!(
                "empirical mean of arm {} with no observations",
                self.arm_id
            )));
        }
        Ok(self.successes as f64 / n as f64)
    }

    /// Failure fraction `B / (A + B)`, i.e. one minus the sampled mean computed
    /// without the rounding of a subtraction.
    pub fn failure_fraction(&self) -> Result<f64, BanditError> {
        let n = self.observations();
        if n == 0 {
            return Err(BanditError::ContractViolation(format!(
                "failure fraction of arm {} with no observations",
                self.arm_id
            )));
        }
        Ok(self.failures as f64 / n as f64)
    }

    /// Mean of the Beta(1, 1)-prior posterior, `(A + 1) / (A + B + 2)`.
    pub fn posterior_mean(&self) -> f64 {
        (self.successes as f64 + 1.0) / (self.observations() as f64 + 2.0)
    }
}

/// Variance of a Beta(alpha, beta) distribution.
pub fn beta_variance(alpha: f64, beta: f64) -> Result<f64, BanditError> {
    if !(alpha > 0.0 && beta > 0.0) || !alpha.is_finite() || !beta.is_finite() {
        return Err(BanditError::Domain(format!(
            "beta parameters must be positive and finite, got ({alpha}, {beta})"
        )));
    }
    let sum = alpha + beta;
    Ok(alpha * beta / (sum * sum * (sum + 1.0)))
}

/// One casino: the arms sampled so far and the total observation count `M`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CasinoState {
    casino_id: usize,
    arms: Vec<ArmRecord>,
    total_observations: u64,
}

impl CasinoState {
    pub fn new(casino_id: usize) -> Self {
        Self {
            casino_id,
            arms: Vec::new(),
            total_observations: 0,
        }
    }

    /// Builds a casino from `(successes, failures)` pairs; arm ids follow slice order.
    pub fn from_counts(casino_id: usize, counts: &[(u64, u64)]) -> Self {
        let arms: Vec<ArmRecord> = counts
            .iter()
            .enumerate()
            .map(|(j, &(a, b))| ArmRecord::new(j, a, b))
            .collect();
        let total_observations = arms.iter().map(ArmRecord::observations).sum();
        Self {
            casino_id,
            arms,
            total_observations,
        }
    }

    pub fn casino_id(&self) -> usize {
        self.casino_id
    }

    pub fn arms(&self) -> &[ArmRecord] {
        &self.arms
    }

    pub fn arm(&self, arm_id: usize) -> Option<&ArmRecord> {
        self.arms.get(arm_id)
    }

    /// Number of sampled arms, `K`.
    pub fn n_arms(&self) -> usize {
        self.arms.len()
    }

    /// Total observations in this casino, `M`.
    pub fn total_observations(&self) -> u64 {
        self.total_observations
    }

    /// Index of the arm with the highest posterior mean; lowest id wins ties.
    pub fn best_posterior_arm(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for arm in &self.arms {
            let score = arm.posterior_mean();
            match best {
                Some((_, s)) if score <= s => {}
                _ => best = Some((arm.arm_id, score)),
            }
        }
        best.map(|(j, _)| j)
    }

    fn check_invariants(&self, expected_id: usize) -> Result<(), BanditError> {
        let violation = |msg: String| Err(BanditError::ContractViolation(msg));
        if self.casino_id != expected_id {
            return violation(format!(
                "casino at position {expected_id} has id {}",
                self.casino_id
            ));
        }
        let mut sum = 0u64;
        for (j, arm) in self.arms.iter().enumerate() {
            if arm.arm_id != j {
                return violation(format!(
                    "casino {expected_id}: arm at position {j} has id {}",
                    arm.arm_id
                ));
            }
            if arm.observations() == 0 {
                return violation(format!("casino {expected_id}: arm {j} has no observations"));
            }
            sum += arm.observations();
        }
        if sum != self.total_observations {
            return violation(format!(
                "casino {expected_id}: M = {} but arm counts sum to {sum}",
                self.total_observations
            ));
        }
        if self.arms.len() as u64 > self.total_observations {
            return violation(format!(
                "casino {expected_id}: K = {} exceeds M = {}",
                self.arms.len(),
                self.total_observations
            ));
        }
        Ok(())
    }
}

/// A single Bernoulli trial on an arm. `arm_id == K` creates a new arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Observation {
    pub casino_id: usize,
    pub arm_id: usize,
    pub success: bool,
}

impl Observation {
    pub fn new(casino_id: usize, arm_id: usize, success: bool) -> Self {
        Self {
            casino_id,
            arm_id,
            success,
        }
    }
}

/// The full observation state over `N` casinos.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WorldState {
    casinos: Vec<CasinoState>,
}

impl WorldState {
    /// `n_casinos` casinos with no sampled arms.
    pub fn new(n_casinos: usize) -> Self {
        Self {
            casinos: (0..n_casinos).map(CasinoState::new).collect(),
        }
    }

    pub fn from_casinos(casinos: Vec<CasinoState>) -> Self {
        Self { casinos }
    }

    /// Builds a world from per-casino `(successes, failures)` lists.
    pub fn from_counts(counts: &[Vec<(u64, u64)>]) -> Self {
        Self {
            casinos: counts
                .iter()
                .enumerate()
                .map(|(i, c)| CasinoState::from_counts(i, c))
                .collect(),
        }
    }

    pub fn casinos(&self) -> &[CasinoState] {
        &self.casinos
    }

    pub fn casino(&self, casino_id: usize) -> Option<&CasinoState> {
        self.casinos.get(casino_id)
    }

    pub fn n_casinos(&self) -> usize {
        self.casinos.len()
    }

    pub fn total_observations(&self) -> u64 {
        self.casinos.iter().map(CasinoState::total_observations).sum()
    }

    /// Applies an observation in place. This is the only place counts change.
    pub fn record(&mut self, obs: &Observation) -> Result<(), BanditError> {
        let n_casinos = self.casinos.len();
        let casino = self
            .casinos
            .get_mut(obs.casino_id)
            .ok_or(BanditError::CasinoIndex {
                casino: obs.casino_id,
                n_casinos,
            })?;
        let k = casino.arms.len();
        if obs.arm_id > k {
            return Err(BanditError::ArmIndex {
                casino: obs.casino_id,
                arm: obs.arm_id,
                n_arms: k,
            });
        }
        if obs.arm_id == k {
            casino.arms.push(ArmRecord::new(k, 0, 0));
        }
        let arm = &mut casino.arms[obs.arm_id];
        if obs.success {
            arm.successes += 1;
        } else {
            arm.failures += 1;
        }
        casino.total_observations += 1;
        Ok(())
    }

    /// Value-semantics transition: returns the successor state.
    pub fn apply(&self, obs: &Observation) -> Result<Self, BanditError> {
        let mut next = self.clone();
        next.record(obs)?;
        Ok(next)
    }

    /// Checks the structural invariants every reachable state satisfies:
    /// ids match positions, each arm has at least one observation, `M` equals
    /// the sum of arm counts, and `K <= M`.
    pub fn check_invariants(&self) -> Result<(), BanditError> {
        self.casinos
            .iter()
            .enumerate()
            .try_for_each(|(i, c)| c.check_invariants(i))
    }
}

pub fn apply_observation(state: &WorldState, obs: &Observation) -> Result<WorldState, BanditError> {
    state.apply(obs)
}

/// Arm-selection action. `SampleNew` draws a never-observed arm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    SampleNew { casino: usize },
    SampleExisting { casino: usize, arm: usize },
}

impl Action {
    pub fn casino(&self) -> usize {
        match *self {
            Action::SampleNew { casino } | Action::SampleExisting { casino, .. } => casino,
        }
    }

    /// The observation target in `world`: existing arms keep their id, a new
    /// arm gets id `K`.
    pub fn target_arm(&self, world: &WorldState) -> Result<usize, BanditError> {
        let casino = world.casino(self.casino()).ok_or(BanditError::CasinoIndex {
            casino: self.casino(),
            n_casinos: world.n_casinos(),
        })?;
        match *self {
            Action::SampleNew { .. } => Ok(casino.n_arms()),
            Action::SampleExisting { casino: i, arm } => {
                if arm < casino.n_arms() {
                    Ok(arm)
                } else {
                    Err(BanditError::ArmIndex {
                        casino: i,
                        arm,
                        n_arms: casino.n_arms(),
                    })
                }
            }
        }
    }
}

/// Per-casino proposal entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArmChoice {
    Arm(usize),
    /// No arm was sampled; propose a never-observed arm.
    Fresh,
}

/// The best-arm proposal: exactly one entry per casino.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Proposal(Vec<ArmChoice>);

impl Proposal {
    pub fn new(choices: Vec<ArmChoice>) -> Self {
        Self(choices)
    }

    pub fn choices(&self) -> &[ArmChoice] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Per casino, the arm with the highest Beta(1, 1) posterior mean.
pub fn propose_best_arms(state: &WorldState) -> Proposal {
    Proposal(
        state
            .casinos
            .iter()
            .map(|c| c.best_posterior_arm().map_or(ArmChoice::Fresh, ArmChoice::Arm))
            .collect(),
    )
}

/// Ground truth for one casino, used to score proposals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CasinoTruth {
    pub p_star: f64,
    /// True Bernoulli parameter of each sampled arm, indexed by arm id.
    pub arm_probs: Vec<f64>,
    /// Parameter a `Fresh` proposal resolves to.
    pub fresh: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegretOutcome {
    /// `sum_i (p*_i - p_i)`
    pub regret: f64,
    /// `sum_i p_i`
    pub reward: f64,
}

pub fn regret(proposal: &Proposal, truth: &[CasinoTruth]) -> Result<RegretOutcome, BanditError> {
    if proposal.len() != truth.len() {
        return Err(BanditError::Data(format!(
            "proposal covers {} casinos but truth covers {}",
            proposal.len(),
            truth.len()
        )));
    }
    let mut out = RegretOutcome {
        regret: 0.0,
        reward: 0.0,
    };
    for (i, (choice, t)) in proposal.choices().iter().zip(truth).enumerate() {
        let p = match *choice {
            ArmChoice::Arm(j) => t.arm_probs.get(j).copied().ok_or_else(|| {
                BanditError::Data(format!("casino {i}: no true parameter for arm {j}"))
            })?,
            ArmChoice::Fresh => t.fresh.ok_or_else(|| {
                BanditError::Data(format!("casino {i}: fresh proposal left unresolved"))
            })?,
        };
        out.regret += t.p_star - p;
        out.reward += p;
    }
    Ok(out)
}
