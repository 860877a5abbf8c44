//! Seeded ground-truth environment.
//!
//! Each casino gets a quality `d ~ law`, then a finite pool of arm parameters
//! drawn from a Gaussian centred on `d`, truncated to `[0, 1]`. The pool stands
//! in for the infinite arm supply: arms are revealed in pool order and `p*` is
//! the pool maximum.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::BanditError;
use crate::seed::SimRng;
use crate::state::CasinoTruth;
use rand::SeedableRng;

pub const DEFAULT_POOL_SIZE: usize = 1000;
pub const DEFAULT_ARM_SIGMA: f64 = 0.1;
const MAX_REJECTIONS: usize = 64;

/// Law over casino quality (the centre of its arm distribution).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum DifficultyLaw {
    Uniform { lo: f64, hi: f64 },
}

impl Default for DifficultyLaw {
    fn default() -> Self {
        DifficultyLaw::Uniform { lo: 0.0, hi: 1.0 }
    }
}

impl DifficultyLaw {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            DifficultyLaw::Uniform { lo, hi } => {
                if hi > lo {
                    rng.random_range(lo..hi)
                } else {
                    lo
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub n_casinos: usize,
    pub pool_size: usize,
    pub difficulty_law: DifficultyLaw,
    pub arm_sigma: f64,
    pub seed: u64,
}

impl Default for EnvConfig {
    fn default() -> Self {
        Self {
            n_casinos: 100,
            pool_size: DEFAULT_POOL_SIZE,
            difficulty_law: DifficultyLaw::default(),
            arm_sigma: DEFAULT_ARM_SIGMA,
            seed: 7,
        }
    }
}

impl EnvConfig {
    pub fn validate(&self) -> Result<(), BanditError> {
        if self.n_casinos == 0 {
            return Err(BanditError::Domain("n_casinos must be at least 1".into()));
        }
        if self.pool_size == 0 {
            return Err(BanditError::Domain("pool_size must be at least 1".into()));
        }
        if !(self.arm_sigma > 0.0 && self.arm_sigma.is_finite()) {
            return Err(BanditError::Domain(format!(
                "arm_sigma must be positive, got {}",
                self.arm_sigma
            )));
        }
        let DifficultyLaw::Uniform { lo, hi } = self.difficulty_law;
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(BanditError::Domain(format!(
                "difficulty law bounds ({lo}, {hi}) must satisfy 0 <= lo <= hi <= 1"
            )));
        }
        Ok(())
    }
}

/// Draws from `N(mu, sigma)` conditioned on `[lo, hi]` by rejection. After 64
/// rejected proposals the next draw is clamped into the interval instead.
pub fn trunc_gauss_sample<R: Rng + ?Sized>(
    mu: f64,
    sigma: f64,
    lo: f64,
    hi: f64,
    rng: &mut R,
) -> Result<f64, BanditError> {
    if sigma.is_nan() || sigma <= 0.0 {
        return Err(BanditError::Domain(format!("sigma must be positive, got {sigma}")));
    }
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(BanditError::Domain(format!("empty interval [{lo}, {hi}]")));
    }
    for _ in 0..MAX_REJECTIONS {
        let z: f64 = rng.sample(StandardNormal);
        let x = mu + sigma * z;
        if (lo..=hi).contains(&x) {
            return Ok(x);
        }
    }
    let z: f64 = rng.sample(StandardNormal);
    Ok((mu + sigma * z).clamp(lo, hi))
}

/// One casino's hidden arm pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvCasino {
    casino_id: usize,
    quality: f64,
    pool: Vec<f64>,
    p_star: f64,
    next_unrevealed: usize,
}

impl EnvCasino {
    /// Wraps an explicit pool; every entry must lie in `[0, 1]`.
    pub fn from_pool(casino_id: usize, quality: f64, pool: Vec<f64>) -> Result<Self, BanditError> {
        if pool.is_empty() {
            return Err(BanditError::Domain(format!("casino {casino_id}: empty arm pool")));
        }
        if let Some(p) = pool.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(BanditError::Domain(format!(
                "casino {casino_id}: arm parameter {p} outside [0, 1]"
            )));
        }
        let p_star = pool.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self {
            casino_id,
            quality,
            pool,
            p_star,
            next_unrevealed: 0,
        })
    }

    pub fn casino_id(&self) -> usize {
        self.casino_id
    }

    pub fn quality(&self) -> f64 {
        self.quality
    }

    pub fn pool(&self) -> &[f64] {
        &self.pool
    }

    pub fn p_star(&self) -> f64 {
        self.p_star
    }

    /// Number of arms revealed so far; also the index the next reveal returns.
    pub fn revealed(&self) -> usize {
        self.next_unrevealed
    }

    /// Reveals the next pool arm and returns its index.
    pub fn reveal_new_arm(&mut self) -> Result<usize, BanditError> {
        if self.next_unrevealed >= self.pool.len() {
            return Err(BanditError::PoolExhausted {
                casino: self.casino_id,
                pool_size: self.pool.len(),
            });
        }
        let idx = self.next_unrevealed;
        self.next_unrevealed += 1;
        Ok(idx)
    }

    /// Bernoulli draw on a revealed arm.
    pub fn draw_outcome<R: Rng + ?Sized>(&self, arm: usize, rng: &mut R) -> Result<bool, BanditError> {
        if arm >= self.next_unrevealed {
            return Err(BanditError::ContractViolation(format!(
                "casino {}: arm {arm} drawn before being revealed",
                self.casino_id
            )));
        }
        Ok(rng.random::<f64>() < self.pool[arm])
    }

    /// Truth for scoring: revealed arms, and the next unrevealed arm for a
    /// `Fresh` proposal.
    pub fn truth(&self) -> CasinoTruth {
        CasinoTruth {
            p_star: self.p_star,
            arm_probs: self.pool[..self.next_unrevealed].to_vec(),
            fresh: self.pool.get(self.next_unrevealed).copied(),
        }
    }
}

/// All casinos of one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    casinos: Vec<EnvCasino>,
}

impl Environment {
    pub fn new(casinos: Vec<EnvCasino>) -> Self {
        Self { casinos }
    }

    /// Builds from `config`, drawing from the supplied generator.
    pub fn build<R: Rng + ?Sized>(config: &EnvConfig, rng: &mut R) -> Result<Self, BanditError> {
        build_environment(config, rng).map(Self::new)
    }

    /// Builds from `config`, seeding the generator with `config.seed`.
    pub fn from_config(config: &EnvConfig) -> Result<Self, BanditError> {
        Self::build(config, &mut SimRng::seed_from_u64(config.seed))
    }

    pub fn casinos(&self) -> &[EnvCasino] {
        &self.casinos
    }

    pub fn casino_mut(&mut self, casino_id: usize) -> Result<&mut EnvCasino, BanditError> {
        let n_casinos = self.casinos.len();
        self.casinos
            .get_mut(casino_id)
            .ok_or(BanditError::CasinoIndex {
                casino: casino_id,
                n_casinos,
            })
    }

    pub fn n_casinos(&self) -> usize {
        self.casinos.len()
    }

    pub fn truth(&self) -> Vec<CasinoTruth> {
        self.casinos.iter().map(EnvCasino::truth).collect()
    }
}

pub fn build_environment<R: Rng + ?Sized>(
    config: &EnvConfig,
    rng: &mut R,
) -> Result<Vec<EnvCasino>, BanditError> {
    config.validate()?;
    (0..config.n_casinos)
        .map(|i| {
            let quality = config.difficulty_law.sample(rng);
            let pool = (0..config.pool_size)
                .map(|_| trunc_gauss_sample(quality, config.arm_sigma, 0.0, 1.0, rng))
                .collect::<Result<Vec<_>, _>>()?;
            EnvCasino::from_pool(i, quality, pool)
        })
        .collect()
}
