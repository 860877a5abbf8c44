//! Synthetic collection logs with fixed describer/builder success rates.

use rand::Rng;

use super::{Actor, LogRecord, Outcome};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticLogConfig {
    pub n_tasks: usize,
    pub describes_per_task: usize,
    pub builds_per_task: usize,
    pub describer_success: f64,
    pub builder_success: f64,
    /// Durations are drawn uniformly from these ranges.
    pub describe_minutes: (f64, f64),
    pub build_minutes: (f64, f64),
}

impl Default for SyntheticLogConfig {
    fn default() -> Self {
        Self {
            n_tasks: 400,
            describes_per_task: 10,
            builds_per_task: 20,
            describer_success: 0.75,
            builder_success: 0.50,
            describe_minutes: (6.0, 12.0),
            build_minutes: (4.0, 10.0),
        }
    }
}

fn minutes<R: Rng + ?Sized>(range: (f64, f64), rng: &mut R) -> f64 {
    if range.1 > range.0 {
        rng.random_range(range.0..range.1)
    } else {
        range.0
    }
}

/// Per task: the describer attempts first, then builder attempts spread
/// uniformly over the descriptions that survived. Tasks whose describers all
/// failed get no builder records.
pub fn synthetic_log<R: Rng + ?Sized>(cfg: &SyntheticLogConfig, rng: &mut R) -> Vec<LogRecord> {
    let mut out = Vec::new();
    for t in 0..cfg.n_tasks {
        let task_id = format!("t{t:03}");
        let mut kept = Vec::new();
        for k in 0..cfg.describes_per_task {
            let description_id = format!("{task_id}-d{k}");
            let ok = rng.random::<f64>() < cfg.describer_success;
            if ok {
                kept.push(description_id.clone());
            }
            out.push(LogRecord {
                task_id: task_id.clone(),
                description_id: Some(description_id),
                actor: Actor::Describer,
                outcome: if ok { Outcome::Success } else { Outcome::Failure },
                minutes: Some(minutes(cfg.describe_minutes, rng)),
                external_ref: None,
            });
        }
        if kept.is_empty() {
            continue;
        }
        for _ in 0..cfg.builds_per_task {
            let target = kept[rng.random_range(0..kept.len())].clone();
            let ok = rng.random::<f64>() < cfg.builder_success;
            out.push(LogRecord {
                task_id: task_id.clone(),
                description_id: Some(target),
                actor: Actor::Builder,
                outcome: if ok { Outcome::Success } else { Outcome::Failure },
                minutes: Some(minutes(cfg.build_minutes, rng)),
                external_ref: None,
            });
        }
    }
    out
}

/// Serializes records as NDJSON.
pub fn to_ndjson(records: &[LogRecord]) -> String {
    records
        .iter()
        .map(|r| serde_json::to_string(r).expect("records serialize") + "\n")
        .collect()
}
