//! Replay of observation logs.
//!
//! The log is newline-delimited JSON, one record per finished unit:
//!
//! ```text
//! {"task_id":"t1","description_id":"t1-d0","actor":"describer","outcome":"success","minutes":8.5}
//! {"task_id":"t1","description_id":"t1-d0","actor":"builder","outcome":"failure","minutes":6.0}
//! ```
//!
//! A LARC-style collection log maps onto this shape one communication at a
//! time: the describer's self-verification becomes a `describer` record for the
//! new description, and every builder attempt on it becomes a `builder`
//! record. Records are replayed in file order.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AllocError, AnnotationState, Outcome, UnitKind, UnitStatus};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Actor {
    Describer,
    Builder,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub task_id: String,
    #[serde(default)]
    pub description_id: Option<String>,
    pub actor: Actor,
    pub outcome: Outcome,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minutes: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub external_ref: Option<String>,
}

/// Parses NDJSON into `(line number, record)` pairs; blank lines are skipped.
pub fn parse_log(text: &str) -> Result<Vec<(usize, LogRecord)>, AllocError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map(|r| (i + 1, r))
                .map_err(|e| AllocError::Import {
                    line: i + 1,
                    message: e.to_string(),
                })
        })
        .collect()
}

/// Replays records onto `state`. On error `state` is left unchanged.
pub fn replay_records<I>(state: &mut AnnotationState, records: I) -> Result<(), AllocError>
where
    I: IntoIterator<Item = (usize, LogRecord)>,
{
    let mut next = state.clone();
    for (line, rec) in records {
        let err = |message: String| AllocError::Import { line, message };
        if rec.task_id.is_empty() {
            return Err(err("empty task_id".into()));
        }
        let kind = match rec.actor {
            Actor::Describer => UnitKind::Describe,
            Actor::Builder => {
                let ti = next.task_index(&rec.task_id);
                let known = match (&rec.description_id, ti) {
                    (Some(d), Some(ti)) => next.tasks[ti].description_index(d).is_some(),
                    _ => false,
                };
                if !known {
                    return Err(err(format!(
                        "builder record references unknown description {:?} of task {}",
                        rec.description_id, rec.task_id
                    )));
                }
                UnitKind::Build
            }
        };
        let unit_id = next.issue_unit(kind, &rec.task_id, rec.description_id.clone());
        next.resolve(unit_id, rec.outcome, rec.minutes, rec.external_ref.clone())
            .map_err(|e| err(e.to_string()))?;
    }
    *state = next;
    Ok(())
}

pub fn import_log(path: &Path) -> Result<AnnotationState, AllocError> {
    import_log_into(AnnotationState::default(), path)
}

pub fn import_log_into(mut state: AnnotationState, path: &Path) -> Result<AnnotationState, AllocError> {
    let text = fs::read_to_string(path).map_err(|source| AllocError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    replay_records(&mut state, parse_log(&text)?)?;
    Ok(state)
}

/// Writes every resolved unit back out as a log record.
pub fn export_log(state: &AnnotationState) -> String {
    let mut out = String::new();
    for u in &state.unit_log {
        let outcome = match u.outcome {
            UnitStatus::Pending => continue,
            UnitStatus::Success => Outcome::Success,
            UnitStatus::Failure => Outcome::Failure,
        };
        let external_ref = match (u.kind, outcome, &u.description_id) {
            (UnitKind::Describe, Outcome::Success, Some(d)) => state
                .task_index(&u.task_id)
                .and_then(|ti| state.tasks[ti].descriptions.iter().find(|x| &x.description_id == d))
                .map(|x| x.external_ref.clone()),
            _ => None,
        };
        let rec = LogRecord {
            task_id: u.task_id.clone(),
            description_id: u.description_id.clone(),
            actor: match u.kind {
                UnitKind::Describe => Actor::Describer,
                UnitKind::Build => Actor::Builder,
            },
            outcome,
            minutes: u.minutes,
            external_ref,
        };
        let _ = writeln!(out, "{}", serde_json::to_string(&rec).expect("records serialize"));
    }
    out
}
