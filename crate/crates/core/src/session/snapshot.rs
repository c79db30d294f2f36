use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::{ProblemInstance, Schedule};
use crate::directive::Directive;
use crate::milp::SolveConfig;
use crate::monitor::MonitorVerdict;

use super::{LedgerEntry, LogEntry, Pending, Proposal, SessionState};

pub const SNAPSHOT_VERSION: u32 = 1;

/// On-disk form of a session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionDocument {
    pub version: u32,
    pub scenario_ref: String,
    /// Directives in force, oldest first. Derivable from `ledger`; kept so
    /// readers need not know status rules.
    pub accepted: Vec<Directive>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pending: Option<Pending>,
    pub log: Vec<LogEntry>,
    pub ledger: Vec<LedgerEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub proposal: Option<Proposal>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_verdict: Option<MonitorVerdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub last_schedule: Option<Schedule>,
    pub instance: ProblemInstance,
    pub config: SolveConfig,
    pub next_id: u32,
    pub revision: u64,
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot version {found} is not supported (expected {SNAPSHOT_VERSION})")]
    Version { found: u64 },
    #[error("snapshot is not valid: {0}")]
    Corrupt(#[from] serde_json::Error),
    #[error("snapshot is inconsistent: {0}")]
    Inconsistent(String),
}

pub fn snapshot(state: &SessionState) -> String {
    let doc = SessionDocument {
        version: SNAPSHOT_VERSION,
        scenario_ref: state.scenario_ref.clone(),
        accepted: state.accepted(),
        pending: state.pending.clone(),
        log: state.log.clone(),
        ledger: state.ledger.clone(),
        proposal: state.proposal.clone(),
        last_verdict: state.last_verdict.clone(),
        last_schedule: state.last_schedule.clone(),
        instance: state.instance.clone(),
        config: state.config.clone(),
        next_id: state.next_id,
        revision: state.revision,
    };
    serde_json::to_string_pretty(&doc).expect("session state serializes")
}

pub fn restore(document: &str) -> Result<SessionState, SnapshotError> {
    // Check the version before the body so old formats fail clearly.
    let raw: serde_json::Value = serde_json::from_str(document)?;
    let found = raw.get("version").and_then(|v| v.as_u64()).unwrap_or(0);
    if found != SNAPSHOT_VERSION as u64 {
        return Err(SnapshotError::Version { found });
    }
    let doc: SessionDocument = serde_json::from_value(raw)?;
    let bad = |m: &str| Err(SnapshotError::Inconsistent(m.to_string()));

    let state = SessionState {
        scenario_ref: doc.scenario_ref,
        instance: doc.instance,
        config: doc.config,
        ledger: doc.ledger,
        pending: doc.pending,
        proposal: doc.proposal,
        last_verdict: doc.last_verdict,
        last_schedule: doc.last_schedule,
        log: doc.log,
        next_id: doc.next_id,
        revision: doc.revision,
    };
    if state.instance.validate().is_err() {
        return bad("instance does not validate");
    }
    if state.accepted() != doc.accepted {
        return bad("accepted list disagrees with the ledger");
    }
    if !state.ledger.windows(2).all(|w| w[0].directive.id < w[1].directive.id) {
        return bad("directive ids are not strictly increasing");
    }
    let ids = state.ledger.iter().map(|e| e.directive.id).chain(state.pending.iter().map(|p| p.directive.id));
    if ids.clone().any(|id| id.0 >= state.next_id) {
        return bad("a directive id is not below next_id");
    }
    if let Some(p) = &state.pending {
        if state.entry(p.directive.id).is_some() {
            return bad("pending directive is already in the ledger");
        }
    }
    if state.revision != state.log.len() as u64 + 1 {
        return bad("revision does not match the log length");
    }
    Ok(state)
}
