//! An agent that reads the hidden pools. It reveals arms until each casino's
//! best pool arm is out, then proposes it.

use multibandit::env::{EnvCasino, Environment};
use multibandit::seed::SimRng;
use multibandit::state::{Action, ArmChoice, Proposal, WorldState};
use multibandit::BanditError;
use multibandit::harness::Agent;

pub struct Omniscient {
    best: Vec<usize>,
}

impl Omniscient {
    pub fn new(env: &Environment) -> Self {
        Self {
            best: env.casinos().iter().map(|c| best_index(c.pool())).collect(),
        }
    }
}

fn best_index(pool: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in pool.iter().enumerate() {
        if p > pool[best] {
            best = i;
        }
    }
    best
}

/// Steps the cheat needs before every casino's best arm is revealed.
pub fn steps_needed(env: &Environment) -> u64 {
    env.casinos().iter().map(|c| best_index(c.pool()) as u64 + 1).sum()
}

/// Same pools with each sorted best-first, so the first reveal is the best arm.
pub fn best_first(env: &Environment) -> Environment {
    let casinos = env
        .casinos()
        .iter()
        .map(|c| {
            let mut pool = c.pool().to_vec();
            pool.sort_by(|a, b| b.total_cmp(a));
            EnvCasino::from_pool(c.casino_id(), c.quality(), pool).expect("pool already valid")
        })
        .collect();
    Environment::new(casinos)
}

impl Agent for Omniscient {
    fn select(&mut self, world: &WorldState, env: &Environment, _rng: &mut SimRng) -> Result<Action, BanditError> {
        for (c, &best) in env.casinos().iter().zip(&self.best) {
            if c.revealed() <= best {
                return Ok(Action::SampleNew { casino: c.casino_id() });
            }
        }
        let casino = (0..world.n_casinos())
            .find(|&i| world.casinos()[i].n_arms() > 0)
            .unwrap_or(0);
        if world.casinos()[casino].n_arms() == 0 {
            return Ok(Action::SampleNew { casino });
        }
        Ok(Action::SampleExisting { casino, arm: 0 })
    }

    fn propose(&self, _world: &WorldState, env: &Environment) -> Proposal {
        Proposal::new(
            env.casinos()
                .iter()
                .map(|c| {
                    let seen = &c.pool()[..c.revealed()];
                    if seen.is_empty() {
                        ArmChoice::Fresh
                    } else {
                        ArmChoice::Arm(best_index(seen))
                    }
                })
                .collect(),
        )
    }
}
