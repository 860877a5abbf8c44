//! Multi-bandit, infinite-arm, best-arm identification.
//!
//! - [`state`]: observation counts, transitions, proposals and regret.
//! - [`policy`]: the `cas-inf` agent and the `rand`, `tile`, `tile-inf` baselines.
//! - [`env`]: seeded ground-truth casinos with truncated-Gaussian arm pools.
//! - [`harness`] and [`report`]: repeated paired experiments and their output.
//! - [`allocator`]: the same machinery driving describe/build units for
//!   crowdsourced annotation.

pub mod allocator;
pub mod env;
pub mod error;
pub mod harness;
pub mod policy;
pub mod report;
pub mod seed;
pub mod state;

pub use error::{BanditError, ReportError};
