use serde::{Deserialize, Serialize};
use tasc_core::assignment::Schedule;
use tasc_core::directive::{render_directive, DirectiveBody, DirectiveId};
use tasc_core::monitor::ConflictFinding;
use tasc_core::session::{
    DirectiveStatus, LedgerEntry, Proposal, SessionState, SystemResponse, UserAction, PROPOSAL_OPTIONS, WARNING_OPTIONS,
};
use tasc_core::world::ExecutionTrace;

use crate::scenario::ScenarioDescriptor;

#[derive(Debug, Clone, Serialize)]
pub struct DirectiveView {
    pub id: DirectiveId,
    pub text: String,
    pub source: String,
    pub body: DirectiveBody,
    pub status: DirectiveStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub original: Option<String>,
}

impl DirectiveView {
    fn from_entry(e: &LedgerEntry) -> Self {
        DirectiveView {
            id: e.directive.id,
            text: render_directive(&e.directive),
            source: e.directive.source.text.clone(),
            body: e.directive.body.clone(),
            status: e.status.clone(),
            original: e.original.as_ref().map(|b| b.to_string()),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PendingView {
    pub id: DirectiveId,
    pub text: String,
    pub body: DirectiveBody,
    pub findings: Vec<ConflictFinding>,
    pub options: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProposalView {
    pub kind: &'static str,
    pub touched: Vec<DirectiveId>,
    pub options: Vec<String>,
}

/// Everything a client needs to draw one revision of a session.
#[derive(Debug, Clone, Serialize)]
pub struct StateEnvelope {
    pub session_id: String,
    pub revision: u64,
    pub scenario: ScenarioDescriptor,
    pub directives: Vec<DirectiveView>,
    pub pending: Option<PendingView>,
    pub proposal: Option<ProposalView>,
    pub last_verdict: Option<&'static str>,
    pub last_schedule: Option<Schedule>,
}

impl StateEnvelope {
    pub fn new(session_id: &str, state: &SessionState, scenario: ScenarioDescriptor) -> Self {
        let strings = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        StateEnvelope {
            session_id: session_id.to_string(),
            revision: state.revision,
            scenario,
            directives: state.ledger.iter().map(DirectiveView::from_entry).collect(),
            pending: state.pending.as_ref().map(|p| PendingView {
                id: p.directive.id,
                text: render_directive(&p.directive),
                body: p.directive.body.clone(),
                findings: p.findings.clone(),
                options: strings(&WARNING_OPTIONS),
            }),
            proposal: state.proposal.as_ref().map(|p| ProposalView {
                kind: match p {
                    Proposal::Relaxation { .. } => "relaxation",
                    Proposal::Ablation { .. } => "ablation",
                },
                touched: p.touched(),
                options: strings(&PROPOSAL_OPTIONS),
            }),
            last_verdict: state.last_verdict.as_ref().map(|v| v.name()),
            last_schedule: state.last_schedule.clone(),
        }
    }
}

/// Reply to one action; the same value is pushed on the event stream.
#[derive(Debug, Clone, Serialize)]
pub struct ResponseEnvelope {
    pub session_id: String,
    pub revision: u64,
    pub action: UserAction,
    pub response: SystemResponse,
    pub state: StateEnvelope,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionEnvelope {
    pub session_id: String,
    pub revision: u64,
    pub verdict: Option<&'static str>,
    pub schedule: Option<Schedule>,
    pub execution: Option<ExecutionTrace>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreateSession {
    pub scenario: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Created {
    pub session_id: String,
    pub state: StateEnvelope,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}
