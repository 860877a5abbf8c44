//! Arm-selection policies.
//!
//! `CasInf` picks the casino whose best arms are least certain (variance of a
//! Beta aggregated over the top half of its arms), then inside that casino
//! either draws a new arm, when `K <= M^beta` with `beta` estimated as one
//! minus the best sampled mean, or runs UCB1 over the existing arms. The
//! baselines `Rand`, `Tile` and `TileInf` are here for comparison.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::BanditError;
use crate::state::{beta_variance, Action, ArmRecord, CasinoState, WorldState};

/// Default UCB exploration constant `c` in `sqrt(c ln M / n)`.
pub const DEFAULT_UCB_C: f64 = 2.0;

/// Relative slack on the `K <= M^beta` comparison so that boundary cases that
/// are equal in exact arithmetic stay inclusive after floating-point `powf`.
const BOUNDARY_RTOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "rand")]
    Rand,
    #[serde(rename = "tile")]
    Tile,
    #[serde(rename = "tile-inf")]
    TileInf,
    #[serde(rename = "cas-inf")]
    CasInf,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::Rand,
        PolicyKind::Tile,
        PolicyKind::TileInf,
        PolicyKind::CasInf,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PolicyKind::Rand => "rand",
            PolicyKind::Tile => "tile",
            PolicyKind::TileInf => "tile-inf",
            PolicyKind::CasInf => "cas-inf",
        }
    }

    /// Stable ordinal used for seed derivation; independent of list order.
    pub fn ordinal(&self) -> u64 {
        match self {
            PolicyKind::Rand => 0,
            PolicyKind::Tile => 1,
            PolicyKind::TileInf => 2,
            PolicyKind::CasInf => 3,
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown policy `{s}` (expected rand, tile, tile-inf or cas-inf)"))
    }
}

/// Mutable bookkeeping carried between decisions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyState {
    /// Round-robin casino cursor (Tile and TileInf).
    pub cursor: usize,
    pub ucb_c: f64,
}

impl Default for PolicyState {
    fn default() -> Self {
        Self {
            cursor: 0,
            ucb_c: DEFAULT_UCB_C,
        }
    }
}

impl PolicyState {
    pub fn with_ucb_c(ucb_c: f64) -> Self {
        Self {
            ucb_c,
            ..Self::default()
        }
    }
}

/// Casino difficulty `beta` in `[0, 1]`; larger means near-optimal arms are rarer.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct Difficulty(f64);

impl Difficulty {
    pub fn new(beta: f64) -> Result<Self, BanditError> {
        if (0.0..=1.0).contains(&beta) {
            Ok(Self(beta))
        } else {
            Err(BanditError::Domain(format!("difficulty {beta} outside [0, 1]")))
        }
    }

    pub fn value(&self) -> f64 {
        self.0
    }
}

/// `beta = 1 - max_j sampled_mean_j`; a casino without observed arms gets 1.
pub fn estimate_beta(casino: &CasinoState) -> Difficulty {
    let beta = casino
        .arms()
        .iter()
        .filter_map(|a| a.failure_fraction().ok())
        .fold(1.0_f64, f64::min);
    Difficulty(beta)
}

/// True iff `K <= M^beta`, with `M^beta := 1` when `M = 0`.
pub fn should_sample_new(k: usize, m: u64, beta: Difficulty) -> bool {
    let threshold = if m == 0 {
        1.0
    } else {
        (m as f64).powf(beta.0)
    };
    (k as f64) <= threshold * (1.0 + BOUNDARY_RTOL)
}

/// UCB1 score of one arm; unobserved arms score `+inf`.
pub fn ucb_score(arm: &ArmRecord, total_observations: u64, c: f64) -> f64 {
    let n = arm.observations();
    if n == 0 {
        return f64::INFINITY;
    }
    let mean = arm.successes as f64 / n as f64;
    let log_m = (total_observations.max(1) as f64).ln();
    mean + (c * log_m / n as f64).sqrt()
}

/// Arm maximizing `mean_j + sqrt(c ln M / n_j)`; lowest id wins ties.
pub fn ucb_select(casino: &CasinoState, c: f64) -> Result<usize, BanditError> {
    let m = casino.total_observations();
    argmax_first(casino.arms().iter().map(|a| ucb_score(a, m, c))).ok_or_else(|| {
        BanditError::ContractViolation(format!(
            "UCB selection in casino {} with no arms",
            casino.casino_id()
        ))
    })
}

/// Variance of the Beta aggregated over the top `ceil(K/2)` arms by sampled
/// mean. `+inf` for a casino without arms.
pub fn casino_uncertainty(casino: &CasinoState) -> f64 {
    let k = casino.n_arms();
    if k == 0 {
        return f64::INFINITY;
    }
    let mut ranked: Vec<&ArmRecord> = casino.arms().iter().collect();
    // descending sampled mean, unobserved arms last, lower id first on ties
    ranked.sort_by(|x, y| match (x.empirical_mean().ok(), y.empirical_mean().ok()) {
        (Some(mx), Some(my)) => my.partial_cmp(&mx).unwrap_or(Ordering::Equal),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => Ordering::Equal,
    }
    .then(x.arm_id.cmp(&y.arm_id)));
    let top = k.div_ceil(2);
    let (a, b) = ranked[..top]
        .iter()
        .fold((1u64, 1u64), |(a, b), arm| (a + arm.successes, b + arm.failures));
    beta_variance(a as f64, b as f64).expect("aggregate parameters are at least 1")
}

/// Within-casino rule shared by TileInf and CasInf. An arm that exists but was
/// never observed (only possible for externally built states) is played first.
fn infinite_arm_action(casino: &CasinoState, c: f64) -> Result<Action, BanditError> {
    let id = casino.casino_id();
    if let Some(arm) = casino.arms().iter().find(|a| a.observations() == 0) {
        return Ok(Action::SampleExisting {
            casino: id,
            arm: arm.arm_id,
        });
    }
    if should_sample_new(casino.n_arms(), casino.total_observations(), estimate_beta(casino)) {
        Ok(Action::SampleNew { casino: id })
    } else {
        Ok(Action::SampleExisting {
            casino: id,
            arm: ucb_select(casino, c)?,
        })
    }
}

/// Tile's within-casino rule: a new arm while `K^2 <= M`, else the least
/// observed arm.
fn tile_action(casino: &CasinoState) -> Action {
    let id = casino.casino_id();
    let k = casino.n_arms() as u64;
    if k * k <= casino.total_observations() {
        return Action::SampleNew { casino: id };
    }
    let arm = casino
        .arms()
        .iter()
        .min_by_key(|a| (a.observations(), a.arm_id))
        .map(|a| a.arm_id)
        .expect("K > 0 when K^2 > M");
    Action::SampleExisting { casino: id, arm }
}

fn argmax_first(scores: impl Iterator<Item = f64>) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.enumerate() {
        match best {
            Some((_, b)) if s.partial_cmp(&b) != Some(Ordering::Greater) => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}

/// Chooses the next arm-selection action.
///
/// `Rand` draws twice from `rng` (casino, then one of `K + 1` arm options);
/// the other policies never touch it.
pub fn select_action<R: Rng + ?Sized>(
    kind: PolicyKind,
    pstate: &PolicyState,
    world: &WorldState,
    rng: &mut R,
) -> Result<(Action, PolicyState), BanditError> {
    let n = world.n_casinos();
    if n == 0 {
        return Err(BanditError::ContractViolation(
            "action selection over zero casinos".into(),
        ));
    }
    let casinos = world.casinos();
    match kind {
        PolicyKind::Rand => {
            let i = rng.random_range(0..n);
            let k = casinos[i].n_arms();
            let j = rng.random_range(0..=k);
            let action = if j == k {
                Action::SampleNew { casino: i }
            } else {
                Action::SampleExisting { casino: i, arm: j }
            };
            Ok((action, *pstate))
        }
        PolicyKind::Tile | PolicyKind::TileInf => {
            let i = pstate.cursor % n;
            let next = PolicyState {
                cursor: (i + 1) % n,
                ..*pstate
            };
            let action = if kind == PolicyKind::Tile {
                tile_action(&casinos[i])
            } else {
                infinite_arm_action(&casinos[i], pstate.ucb_c)?
            };
            Ok((action, next))
        }
        PolicyKind::CasInf => {
            let i = argmax_first(casinos.iter().map(casino_uncertainty)).expect("n >= 1");
            Ok((infinite_arm_action(&casinos[i], pstate.ucb_c)?, *pstate))
        }
    }
}
