//! Annotation allocator.
//!
//! Tasks are casinos and descriptions are arms. A *describe* unit asks a
//! participant for a new description (a new arm); a *build* unit asks them to
//! build from an existing one (an observation on that arm). Participant
//! sessions are split into units using running duration estimates, and the
//! whole state persists as a single JSON document.

mod import;
mod store;
mod synth;

use std::path::PathBuf;

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::BanditError;
use crate::policy::{select_action, PolicyKind, PolicyState};
use crate::seed::SimRng;
use crate::state::{Action, CasinoState, WorldState};

pub use import::{export_log, import_log, import_log_into, parse_log, replay_records, Actor, LogRecord};
pub use store::{load_state, save_state};
pub use synth::{synthetic_log, to_ndjson, SyntheticLogConfig};

pub const STATE_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum AllocError {
    #[error("no tasks registered")]
    EmptyWorld,
    #[error("state error: {0}")]
    State(String),
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("import error on line {line}: {message}")]
    Import { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Bandit(#[from] BanditError),
}

impl AllocError {
    fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        AllocError::Schema {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AllocatorConfig {
    pub session_minutes: f64,
    /// Running estimate of a describe unit's duration.
    pub describe_minutes: f64,
    /// Running estimate of a build unit's duration.
    pub build_minutes: f64,
    pub ewma_lambda: f64,
    /// A successful describe (which includes the describer building from their
    /// own description) counts as the new arm's first success.
    pub describe_counts_as_build: bool,
}

impl Default for AllocatorConfig {
    fn default() -> Self {
        Self {
            session_minutes: 45.0,
            describe_minutes: 9.0,
            build_minutes: 7.0,
            ewma_lambda: 0.2,
            describe_counts_as_build: true,
        }
    }
}

impl AllocatorConfig {
    pub fn estimate(&self, kind: UnitKind) -> f64 {
        match kind {
            UnitKind::Describe => self.describe_minutes,
            UnitKind::Build => self.build_minutes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Description {
    pub description_id: String,
    /// Pointer to the description text held elsewhere.
    pub external_ref: String,
    pub successes: u64,
    pub failures: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Task {
    pub task_id: String,
    pub descriptions: Vec<Description>,
}

impl Task {
    pub fn new(task_id: impl Into<String>) -> Self {
        Self {
            task_id: task_id.into(),
            descriptions: Vec::new(),
        }
    }

    fn description_index(&self, description_id: &str) -> Option<usize> {
        self.descriptions
            .iter()
            .position(|d| d.description_id == description_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitKind {
    Describe,
    Build,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitStatus {
    Pending,
    Success,
    Failure,
}

/// Result reported for a finished unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Success,
    Failure,
}

impl From<Outcome> for UnitStatus {
    fn from(o: Outcome) -> Self {
        match o {
            Outcome::Success => UnitStatus::Success,
            Outcome::Failure => UnitStatus::Failure,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitRecord {
    pub unit_id: u64,
    pub kind: UnitKind,
    pub task_id: String,
    pub description_id: Option<String>,
    pub outcome: UnitStatus,
    pub minutes: Option<f64>,
}

/// What the next participant unit should do.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "assignment", rename_all = "snake_case")]
pub enum UnitAssignment {
    Describe {
        task_id: String,
        unit_id: u64,
    },
    Build {
        task_id: String,
        description_id: String,
        unit_id: u64,
    },
    SessionDone,
}

impl UnitAssignment {
    pub fn unit_id(&self) -> Option<u64> {
        match self {
            UnitAssignment::Describe { unit_id, .. } | UnitAssignment::Build { unit_id, .. } => Some(*unit_id),
            UnitAssignment::SessionDone => None,
        }
    }

    pub fn kind(&self) -> Option<UnitKind> {
        match self {
            UnitAssignment::Describe { .. } => Some(UnitKind::Describe),
            UnitAssignment::Build { .. } => Some(UnitKind::Build),
            UnitAssignment::SessionDone => None,
        }
    }
}

/// The persisted allocator world.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnnotationState {
    pub version: u32,
    pub config: AllocatorConfig,
    pub tasks: Vec<Task>,
    pub unit_log: Vec<UnitRecord>,
}

impl Default for AnnotationState {
    fn default() -> Self {
        Self::new(AllocatorConfig::default())
    }
}

impl AnnotationState {
    pub fn new(config: AllocatorConfig) -> Self {
        Self {
            version: STATE_VERSION,
            config,
            tasks: Vec::new(),
            unit_log: Vec::new(),
        }
    }

    pub fn with_tasks<I, S>(config: AllocatorConfig, task_ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut s = Self::new(config);
        for id in task_ids {
            s.add_task(id);
        }
        s
    }

    /// Registers a task if it is not known yet; returns its index.
    pub fn add_task(&mut self, task_id: impl Into<String>) -> usize {
        let task_id = task_id.into();
        match self.task_index(&task_id) {
            Some(i) => i,
            None => {
                self.tasks.push(Task::new(task_id));
                self.tasks.len() - 1
            }
        }
    }

    pub fn task_index(&self, task_id: &str) -> Option<usize> {
        self.tasks.iter().position(|t| t.task_id == task_id)
    }

    pub fn unit(&self, unit_id: u64) -> Option<&UnitRecord> {
        self.unit_log.iter().find(|u| u.unit_id == unit_id)
    }

    /// Tasks as casinos, descriptions as arms, in stored order.
    pub fn world(&self) -> WorldState {
        WorldState::from_casinos(
            self.tasks
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let counts: Vec<(u64, u64)> =
                        t.descriptions.iter().map(|d| (d.successes, d.failures)).collect();
                    CasinoState::from_counts(i, &counts)
                })
                .collect(),
        )
    }

    /// Success rate of resolved describe and build units.
    pub fn role_rates(&self) -> (Option<f64>, Option<f64>) {
        let rate = |kind| {
            let (mut ok, mut n) = (0u64, 0u64);
            for u in self.unit_log.iter().filter(|u| u.kind == kind) {
                match u.outcome {
                    UnitStatus::Success => {
                        ok += 1;
                        n += 1
                    }
                    UnitStatus::Failure => n += 1,
                    UnitStatus::Pending => {}
                }
            }
            (n > 0).then(|| ok as f64 / n as f64)
        };
        (rate(UnitKind::Describe), rate(UnitKind::Build))
    }

    fn next_unit_id(&self) -> u64 {
        self.unit_log.last().map_or(1, |u| u.unit_id + 1)
    }

    /// Allocates the next unit with the default `CasInf` policy.
    pub fn next_unit(&mut self, remaining_minutes: f64) -> Result<UnitAssignment, AllocError> {
        // CasInf never draws randomness
        let mut rng = SimRng::seed_from_u64(0);
        self.next_unit_with(remaining_minutes, PolicyKind::CasInf, &mut rng)
    }

    /// Allocates the next unit with any policy. The round-robin cursor of the
    /// tiling policies is the number of units issued so far modulo the task
    /// count. Returns `SessionDone` without touching the log when the chosen
    /// unit's estimated duration exceeds `remaining_minutes`.
    pub fn next_unit_with<R: Rng + ?Sized>(
        &mut self,
        remaining_minutes: f64,
        policy: PolicyKind,
        rng: &mut R,
    ) -> Result<UnitAssignment, AllocError> {
        if remaining_minutes.is_nan() || remaining_minutes < 0.0 {
            return Err(AllocError::State(format!(
                "remaining minutes must be non-negative, got {remaining_minutes}"
            )));
        }
        if self.tasks.is_empty() {
            return Err(AllocError::EmptyWorld);
        }
        let pstate = PolicyState {
            cursor: self.unit_log.len() % self.tasks.len(),
            ..PolicyState::default()
        };
        let (action, _) = select_action(policy, &pstate, &self.world(), rng)?;
        let kind = match action {
            Action::SampleNew { .. } => UnitKind::Describe,
            Action::SampleExisting { .. } => UnitKind::Build,
        };
        if self.config.estimate(kind) > remaining_minutes {
            return Ok(UnitAssignment::SessionDone);
        }

        let unit_id = self.next_unit_id();
        let task = &self.tasks[action.casino()];
        let task_id = task.task_id.clone();
        let (assignment, description_id) = match action {
            Action::SampleNew { .. } => (UnitAssignment::Describe { task_id: task_id.clone(), unit_id }, None),
            Action::SampleExisting { arm, .. } => {
                let description_id = task.descriptions[arm].description_id.clone();
                (
                    UnitAssignment::Build {
                        task_id: task_id.clone(),
                        description_id: description_id.clone(),
                        unit_id,
                    },
                    Some(description_id),
                )
            }
        };
        self.unit_log.push(UnitRecord {
            unit_id,
            kind,
            task_id,
            description_id,
            outcome: UnitStatus::Pending,
            minutes: None,
        });
        Ok(assignment)
    }

    /// Appends a pending unit without consulting a policy (log replay).
    pub(crate) fn issue_unit(&mut self, kind: UnitKind, task_id: &str, description_id: Option<String>) -> u64 {
        self.add_task(task_id);
        let unit_id = self.next_unit_id();
        self.unit_log.push(UnitRecord {
            unit_id,
            kind,
            task_id: task_id.to_string(),
            description_id,
            outcome: UnitStatus::Pending,
            minutes: None,
        });
        unit_id
    }

    /// Resolves a pending unit.
    ///
    /// A successful describe creates a description (counts `(1, 0)`, or
    /// `(0, 0)` when `describe_counts_as_build` is off); a failed one is
    /// discarded. Builds add a success or failure to their description. The
    /// duration estimate of the unit's kind moves towards `minutes` by the
    /// EWMA weight.
    pub fn record_unit_result(&mut self, unit_id: u64, outcome: Outcome, minutes: f64) -> Result<(), AllocError> {
        self.resolve(unit_id, outcome, Some(minutes), None)
    }

    /// Like [`record_unit_result`](Self::record_unit_result), also naming
    /// where the text of a newly created description lives.
    pub fn record_unit_result_with_ref(
        &mut self,
        unit_id: u64,
        outcome: Outcome,
        minutes: f64,
        external_ref: Option<String>,
    ) -> Result<(), AllocError> {
        self.resolve(unit_id, outcome, Some(minutes), external_ref)
    }

    pub(crate) fn resolve(
        &mut self,
        unit_id: u64,
        outcome: Outcome,
        minutes: Option<f64>,
        external_ref: Option<String>,
    ) -> Result<(), AllocError> {
        if let Some(m) = minutes {
            if !(m >= 0.0 && m.is_finite()) {
                return Err(AllocError::State(format!("minutes must be a non-negative number, got {m}")));
            }
        }
        let pos = self
            .unit_log
            .iter()
            .rposition(|u| u.unit_id == unit_id)
            .ok_or_else(|| AllocError::State(format!("unknown unit {unit_id}")))?;
        let unit = &self.unit_log[pos];
        if unit.outcome != UnitStatus::Pending {
            return Err(AllocError::State(format!("unit {unit_id} is already resolved")));
        }
        let ti = self
            .task_index(&unit.task_id)
            .ok_or_else(|| AllocError::State(format!("unit {unit_id} names unknown task {}", unit.task_id)))?;

        let mut new_description_id = None;
        match (unit.kind, outcome) {
            (UnitKind::Describe, Outcome::Success) => {
                let task = &self.tasks[ti];
                let id = match &unit.description_id {
                    Some(id) if task.description_index(id).is_some() => {
                        return Err(AllocError::State(format!(
                            "task {} already has description {id}",
                            task.task_id
                        )))
                    }
                    Some(id) => id.clone(),
                    None => (task.descriptions.len()..)
                        .map(|k| format!("{}-d{k}", task.task_id))
                        .find(|id| task.description_index(id).is_none())
                        .expect("unbounded search"),
                };
                let successes = u64::from(self.config.describe_counts_as_build);
                self.tasks[ti].descriptions.push(Description {
                    description_id: id.clone(),
                    external_ref: external_ref.unwrap_or_else(|| format!("unit:{unit_id}")),
                    successes,
                    failures: 0,
                });
                new_description_id = Some(id);
            }
            (UnitKind::Describe, Outcome::Failure) => {}
            (UnitKind::Build, _) => {
                let did = unit
                    .description_id
                    .as_deref()
                    .ok_or_else(|| AllocError::State(format!("build unit {unit_id} has no description")))?;
                let di = self.tasks[ti].description_index(did).ok_or_else(|| {
                    AllocError::State(format!("build unit {unit_id} names unknown description {did}"))
                })?;
                let d = &mut self.tasks[ti].descriptions[di];
                match outcome {
                    Outcome::Success => d.successes += 1,
                    Outcome::Failure => d.failures += 1,
                }
            }
        }

        let kind = self.unit_log[pos].kind;
        let unit = &mut self.unit_log[pos];
        unit.outcome = outcome.into();
        unit.minutes = minutes;
        if new_description_id.is_some() {
            unit.description_id = new_description_id;
        }
        if let Some(m) = minutes {
            let lambda = self.config.ewma_lambda;
            let est = match kind {
                UnitKind::Describe => &mut self.config.describe_minutes,
                UnitKind::Build => &mut self.config.build_minutes,
            };
            *est = (1.0 - lambda) * *est + lambda * m;
        }
        Ok(())
    }

    /// Checks everything the JSON schema cannot express. Errors name the
    /// offending field.
    pub fn validate(&self) -> Result<(), AllocError> {
        if self.version != STATE_VERSION {
            return Err(AllocError::schema(
                "version",
                format!("unsupported version {}, expected {STATE_VERSION}", self.version),
            ));
        }
        let c = &self.config;
        for (name, v) in [
            ("session_minutes", c.session_minutes),
            ("describe_minutes", c.describe_minutes),
            ("build_minutes", c.build_minutes),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(AllocError::schema(format!("config.{name}"), "must be a non-negative number"));
            }
        }
        if !(c.ewma_lambda > 0.0 && c.ewma_lambda <= 1.0) {
            return Err(AllocError::schema("config.ewma_lambda", "must lie in (0, 1]"));
        }
        for (i, t) in self.tasks.iter().enumerate() {
            if self.tasks[..i].iter().any(|o| o.task_id == t.task_id) {
                return Err(AllocError::schema(
                    format!("tasks[{i}].task_id"),
                    format!("duplicate task id {}", t.task_id),
                ));
            }
            for (j, d) in t.descriptions.iter().enumerate() {
                if t.descriptions[..j].iter().any(|o| o.description_id == d.description_id) {
                    return Err(AllocError::schema(
                        format!("tasks[{i}].descriptions[{j}].description_id"),
                        format!("duplicate description id {}", d.description_id),
                    ));
                }
            }
        }
        let mut last = 0u64;
        for (k, u) in self.unit_log.iter().enumerate() {
            if u.unit_id <= last {
                return Err(AllocError::schema(
                    format!("unit_log[{k}].unit_id"),
                    "unit ids must be positive and strictly increasing",
                ));
            }
            last = u.unit_id;
            let Some(ti) = self.task_index(&u.task_id) else {
                return Err(AllocError::schema(
                    format!("unit_log[{k}].task_id"),
                    format!("unknown task {}", u.task_id),
                ));
            };
            if u.kind == UnitKind::Build {
                let ok = u
                    .description_id
                    .as_deref()
                    .is_some_and(|d| self.tasks[ti].description_index(d).is_some());
                if !ok {
                    return Err(AllocError::schema(
                        format!("unit_log[{k}].description_id"),
                        "build unit must reference an existing description",
                    ));
                }
            }
            if let Some(m) = u.minutes {
                if !(m >= 0.0 && m.is_finite()) {
                    return Err(AllocError::schema(format!("unit_log[{k}].minutes"), "must be non-negative"));
                }
            }
        }
        Ok(())
    }
}

/// Tracks the remaining minutes of one participant session.
///
/// Each issued unit is charged its estimated duration at issue time, so the
/// charged total never exceeds the session budget.
#[derive(Debug, Clone)]
pub struct Session {
    remaining: f64,
    issued: Vec<u64>,
}

impl Session {
    pub fn new(minutes: f64) -> Self {
        Self {
            remaining: minutes,
            issued: Vec::new(),
        }
    }

    pub fn for_state(state: &AnnotationState) -> Self {
        Self::new(state.config.session_minutes)
    }

    pub fn remaining(&self) -> f64 {
        self.remaining
    }

    pub fn issued(&self) -> &[u64] {
        &self.issued
    }

    pub fn next_unit(&mut self, state: &mut AnnotationState) -> Result<UnitAssignment, AllocError> {
        let a = state.next_unit(self.remaining)?;
        if let (Some(id), Some(kind)) = (a.unit_id(), a.kind()) {
            self.remaining -= state.config.estimate(kind);
            self.issued.push(id);
        }
        Ok(a)
    }
}
