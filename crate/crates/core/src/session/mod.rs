//! The corrective dialogue: a pure state machine over user actions that ties
//! parsing, conflict checks, solving and explanations together.

mod snapshot;
mod text;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::assignment::{InstanceError, ProblemInstance, Schedule};
use crate::directive::{
    classify_intent, parse_body, parse_command, render_directive, Command, Directive, DirectiveBody, DirectiveId,
    Intent, Polarity, Reply, Utterance, WhyQuery,
};
use crate::milp::SolveConfig;
use crate::monitor::{
    ablation_check, check_and_solve, counterfactual_why, semantic_check, AblationReport, ConflictFinding, Explanation,
    MonitorVerdict, RelaxationReport,
};

pub use snapshot::{restore, snapshot, SessionDocument, SnapshotError, SNAPSHOT_VERSION};
pub use text::{render_action, render_schedule, render_transcript};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum DirectiveStatus {
    Active,
    /// In force in amended form; `slack` is how far the bound moved.
    Relaxed { slack: f64 },
    Removed,
    /// Accepted over a conflict warning.
    Overridden,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerEntry {
    pub directive: Directive,
    pub status: DirectiveStatus,
    /// The body as first accepted, when a relaxation changed it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub original: Option<DirectiveBody>,
}

impl LedgerEntry {
    pub fn in_force(&self) -> bool {
        self.status != DirectiveStatus::Removed
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pending {
    pub directive: Directive,
    pub findings: Vec<ConflictFinding>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "proposal", rename_all = "snake_case")]
pub enum Proposal {
    Relaxation { report: RelaxationReport },
    Ablation { report: AblationReport },
}

impl Proposal {
    /// Directives the proposal would change.
    pub fn touched(&self) -> Vec<DirectiveId> {
        let mut ids: Vec<_> = match self {
            Proposal::Relaxation { report } => report.relaxed.iter().map(|r| r.directive).collect(),
            Proposal::Ablation { report } => report.removed.clone(),
        };
        ids.sort();
        ids.dedup();
        ids
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "choice", rename_all = "snake_case")]
pub enum Resolution {
    /// Replace the candidate with this directive text.
    Amend { text: String },
    /// Drop the candidate, or with `id` the named conflicting directive.
    Remove {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        id: Option<DirectiveId>,
    },
    Ignore,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "choice", rename_all = "snake_case")]
pub enum ProposalResponse {
    Accept,
    Reject,
    /// Withdraw the touched directives and state this one instead.
    Modify { text: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum UserAction {
    SubmitUtterance { text: String },
    ResolveWarning { resolution: Resolution },
    RespondToProposal { response: ProposalResponse },
    RemoveDirective { id: DirectiveId },
    RequestSolve,
    AskWhy { agent: String, task: String, polarity: Polarity },
}

pub const WARNING_OPTIONS: [&str; 3] = ["amend", "remove", "ignore"];
pub const PROPOSAL_OPTIONS: [&str; 3] = ["accept", "reject", "modify"];

fn options(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "response", rename_all = "snake_case")]
pub enum SystemResponse {
    ParsedEcho { directive: Directive, text: String },
    Warning { directive: Directive, findings: Vec<ConflictFinding>, options: Vec<String>, text: String },
    SolutionPresented { schedule: Schedule, text: String },
    RelaxationProposal { report: RelaxationReport, options: Vec<String>, text: String },
    AblationProposal { report: AblationReport, options: Vec<String>, text: String },
    ExplanationText { explanation: Explanation, text: String },
    ErrorText { text: String },
    Acknowledged { text: String },
    StateListing { text: String },
}

impl SystemResponse {
    pub fn text(&self) -> &str {
        use SystemResponse::*;
        match self {
            ParsedEcho { text, .. }
            | Warning { text, .. }
            | SolutionPresented { text, .. }
            | RelaxationProposal { text, .. }
            | AblationProposal { text, .. }
            | ExplanationText { text, .. }
            | ErrorText { text }
            | Acknowledged { text }
            | StateListing { text } => text,
        }
    }

    pub fn name(&self) -> &'static str {
        use SystemResponse::*;
        match self {
            ParsedEcho { .. } => "parsed_echo",
            Warning { .. } => "warning",
            SolutionPresented { .. } => "solution_presented",
            RelaxationProposal { .. } => "relaxation_proposal",
            AblationProposal { .. } => "ablation_proposal",
            ExplanationText { .. } => "explanation_text",
            ErrorText { .. } => "error_text",
            Acknowledged { .. } => "acknowledged",
            StateListing { .. } => "state_listing",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEntry {
    /// Milliseconds since the Unix epoch, UTC.
    pub at_ms: u64,
    pub action: UserAction,
    pub response: SystemResponse,
    /// Findings a warning override went past.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub overrode: Vec<ConflictFinding>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    pub scenario_ref: String,
    pub instance: ProblemInstance,
    pub config: SolveConfig,
    /// Every directive ever accepted, by id; removed ones stay for the record.
    pub ledger: Vec<LedgerEntry>,
    pub pending: Option<Pending>,
    pub proposal: Option<Proposal>,
    pub last_verdict: Option<MonitorVerdict>,
    pub last_schedule: Option<Schedule>,
    pub log: Vec<LogEntry>,
    pub next_id: u32,
    pub revision: u64,
}

type Step = Result<SystemResponse, String>;

impl SessionState {
    pub fn new(scenario_ref: impl Into<String>, instance: ProblemInstance, config: SolveConfig) -> Result<Self, InstanceError> {
        instance.validate()?;
        Ok(SessionState {
            scenario_ref: scenario_ref.into(),
            instance,
            config,
            ledger: Vec::new(),
            pending: None,
            proposal: None,
            last_verdict: None,
            last_schedule: None,
            log: Vec::new(),
            next_id: 1,
            revision: 1,
        })
    }

    /// Directives currently in force, oldest first.
    pub fn accepted(&self) -> Vec<Directive> {
        self.ledger.iter().filter(|e| e.in_force()).map(|e| e.directive.clone()).collect()
    }

    pub fn entry(&self, id: DirectiveId) -> Option<&LedgerEntry> {
        self.ledger.iter().find(|e| e.directive.id == id)
    }

    fn entry_mut(&mut self, id: DirectiveId) -> Option<&mut LedgerEntry> {
        self.ledger.iter_mut().find(|e| e.directive.id == id)
    }

    fn accept(&mut self, directive: Directive, status: DirectiveStatus) {
        self.ledger.push(LedgerEntry { directive, status, original: None });
        self.ledger.sort_by_key(|e| e.directive.id);
        self.proposal = None;
    }

    fn parse(&self, text: &str) -> Result<DirectiveBody, String> {
        parse_body(text, &self.instance).map_err(|e| format!("could not read \"{}\": {e}", text.trim()))
    }

    /// Runs the conflict rules; a clean directive is accepted, a conflicting
    /// one waits for the user.
    fn submit(&mut self, directive: Directive) -> Step {
        let findings = semantic_check(&directive, &self.accepted(), &self.instance);
        if findings.is_empty() {
            let text = format!("added directive {}: \"{}\"", directive.id, render_directive(&directive));
            self.accept(directive.clone(), DirectiveStatus::Active);
            return Ok(SystemResponse::ParsedEcho { directive, text });
        }
        let text = text::warning(&directive, &findings);
        self.pending = Some(Pending { directive: directive.clone(), findings: findings.clone() });
        Ok(SystemResponse::Warning { directive, findings, options: options(&WARNING_OPTIONS), text })
    }

    fn fresh_id(&mut self) -> DirectiveId {
        let id = DirectiveId(self.next_id);
        self.next_id += 1;
        id
    }

    fn submit_text(&mut self, text: &str, at_ms: u64, reuse: Option<DirectiveId>) -> Step {
        let body = self.parse(text)?;
        let id = reuse.unwrap_or_else(|| self.fresh_id());
        self.submit(Directive { id, source: Utterance::new(text, at_ms), body })
    }

    fn utterance(&mut self, text: &str, at_ms: u64) -> Step {
        let utterance = Utterance::new(text, at_ms);
        let intent = classify_intent(&utterance);
        if intent == Intent::AddConstraint {
            if let Some(p) = &self.pending {
                return Err(format!(
                    "directive {} is waiting on a warning; amend, remove or ignore it first",
                    p.directive.id
                ));
            }
            return self.submit_text(text, at_ms, None);
        }
        let command = parse_command(&utterance, intent, &self.instance)
            .map_err(|e| format!("could not read \"{}\": {e}", text.trim()))?;
        match command {
            Command::Add { .. } => self.submit_text(text, at_ms, None),
            Command::Remove { id: None } => self.resolve(&Resolution::Remove { id: None }, at_ms),
            Command::Remove { id: Some(id) } => {
                let conflicting = self.pending.as_ref().is_some_and(|p| p.findings.iter().any(|f| f.directives.contains(&id)));
                if conflicting {
                    self.resolve(&Resolution::Remove { id: Some(id) }, at_ms)
                } else {
                    self.remove(id)
                }
            }
            Command::Why { query } => self.why(&query),
            Command::ShowState => Ok(SystemResponse::StateListing { text: text::listing(self) }),
            Command::Solve => self.solve(),
            Command::Reply { reply, text: rest } => match reply {
                Reply::Accept => self.respond(&ProposalResponse::Accept, at_ms),
                Reply::Reject => self.respond(&ProposalResponse::Reject, at_ms),
                Reply::Ignore => self.resolve(&Resolution::Ignore, at_ms),
                Reply::Amend => {
                    let Some(text) = rest else {
                        return Err("say what to change it to, e.g. \"amend task x must be completed by 9\"".into());
                    };
                    if self.pending.is_some() {
                        self.resolve(&Resolution::Amend { text }, at_ms)
                    } else {
                        self.respond(&ProposalResponse::Modify { text }, at_ms)
                    }
                }
            },
        }
    }

    fn resolve(&mut self, resolution: &Resolution, at_ms: u64) -> Step {
        let pending = self.pending.clone().ok_or("there is no warning to resolve")?;
        let candidate = pending.directive.id;
        match resolution {
            Resolution::Ignore => {
                self.pending = None;
                let d = pending.directive;
                let text = format!("added directive {} despite the warning: \"{}\"", d.id, render_directive(&d));
                self.accept(d.clone(), DirectiveStatus::Overridden);
                Ok(SystemResponse::ParsedEcho { directive: d, text })
            }
            Resolution::Remove { id: None } => {
                self.pending = None;
                Ok(SystemResponse::Acknowledged {
                    text: format!("dropped directive {candidate}: \"{}\"", render_directive(&pending.directive)),
                })
            }
            Resolution::Remove { id: Some(id) } if *id == candidate => self.resolve(&Resolution::Remove { id: None }, at_ms),
            Resolution::Remove { id: Some(id) } => {
                if !pending.findings.iter().any(|f| f.directives.contains(id)) {
                    return Err(format!("directive {id} is not part of the warning"));
                }
                self.retire(*id)?;
                self.pending = None;
                let head = format!("removed directive {id}; ");
                self.submit(pending.directive).map(|r| prefix(r, &head))
            }
            Resolution::Amend { text } => {
                let body = self.parse(text)?;
                self.pending = None;
                self.submit(Directive { id: candidate, source: Utterance::new(text.as_str(), at_ms), body })
            }
        }
    }

    /// Marks a directive removed.
    fn retire(&mut self, id: DirectiveId) -> Result<(), String> {
        let entry = self.entry_mut(id).filter(|e| e.in_force()).ok_or_else(|| format!("no directive {id} is in force"))?;
        entry.status = DirectiveStatus::Removed;
        self.proposal = None;
        Ok(())
    }

    fn remove(&mut self, id: DirectiveId) -> Step {
        self.retire(id)?;
        let d = &self.entry(id).unwrap().directive;
        Ok(SystemResponse::Acknowledged { text: format!("removed directive {id}: \"{}\"", render_directive(d)) })
    }

    fn solve(&mut self) -> Step {
        let accepted = self.accepted();
        let verdict = check_and_solve(&self.instance, &accepted, &self.config).map_err(|e| format!("solve failed: {e}"))?;
        self.last_verdict = Some(verdict.clone());
        self.proposal = None;
        Ok(match verdict {
            MonitorVerdict::Pass { schedule } => {
                let text = render_schedule(&schedule);
                self.last_schedule = Some(schedule.clone());
                SystemResponse::SolutionPresented { schedule, text }
            }
            MonitorVerdict::RelaxedSolution { report } => self.propose(Proposal::Relaxation { report }),
            MonitorVerdict::AblatedSolution { report } => self.propose(Proposal::Ablation { report }),
            MonitorVerdict::Unresolvable { reason } => SystemResponse::ErrorText { text: format!("no plan found: {reason}") },
            MonitorVerdict::SemanticWarning { findings } => SystemResponse::ErrorText {
                text: findings.iter().map(|f| f.explanation.clone()).collect::<Vec<_>>().join("; "),
            },
        })
    }

    fn propose(&mut self, proposal: Proposal) -> SystemResponse {
        self.proposal = Some(proposal.clone());
        match proposal {
            Proposal::Relaxation { report } => {
                let text = text::relaxation(&report);
                SystemResponse::RelaxationProposal { report, options: options(&PROPOSAL_OPTIONS), text }
            }
            Proposal::Ablation { report } => {
                let text = text::ablation(&report);
                SystemResponse::AblationProposal { report, options: options(&PROPOSAL_OPTIONS), text }
            }
        }
    }

    fn respond(&mut self, response: &ProposalResponse, at_ms: u64) -> Step {
        let proposal = self.proposal.clone().ok_or("there is no open proposal")?;
        match (response, proposal) {
            (ProposalResponse::Accept, Proposal::Relaxation { report }) => {
                let mut slack: BTreeMap<DirectiveId, f64> = BTreeMap::new();
                for r in &report.relaxed {
                    *slack.entry(r.directive).or_default() += r.amount;
                }
                let mut lines = Vec::new();
                for r in &report.relaxed {
                    let Some(amended) = &r.amended else { continue };
                    let total = slack[&r.directive];
                    let Some(entry) = self.entry_mut(r.directive) else { continue };
                    if entry.original.is_none() {
                        entry.original = Some(entry.directive.body.clone());
                    }
                    entry.directive.body = amended.clone();
                    entry.status = DirectiveStatus::Relaxed { slack: total };
                    lines.push(format!("directive {} now reads \"{amended}\"", r.directive));
                }
                self.proposal = None;
                Ok(self.adopt(report.schedule, lines))
            }
            (ProposalResponse::Accept, Proposal::Ablation { report }) => {
                let mut lines = Vec::new();
                for id in &report.removed {
                    if let Some(entry) = self.entry_mut(*id) {
                        entry.status = DirectiveStatus::Removed;
                        lines.push(format!("removed directive {id}: \"{}\"", render_directive(&entry.directive)));
                    }
                }
                self.proposal = None;
                Ok(self.adopt(report.schedule, lines))
            }
            (ProposalResponse::Reject, Proposal::Relaxation { .. }) => {
                self.proposal = None;
                let report = ablation_check(&self.instance, &self.accepted(), &self.config)
                    .map_err(|e| format!("solve failed: {e}"))?;
                match report {
                    Some(report) => Ok(self.propose(Proposal::Ablation { report })),
                    None => Ok(SystemResponse::ErrorText { text: "no plan found even without any directive".into() }),
                }
            }
            (ProposalResponse::Reject, Proposal::Ablation { .. }) => {
                self.proposal = None;
                Ok(SystemResponse::Acknowledged { text: "kept every directive; no plan adopted".into() })
            }
            (ProposalResponse::Modify { text }, proposal) => {
                let body = self.parse(text)?;
                let touched = proposal.touched();
                for id in &touched {
                    self.retire(*id)?;
                }
                self.proposal = None;
                let id = self.fresh_id();
                let withdrawn: Vec<String> = touched.iter().map(|id| id.to_string()).collect();
                let head = format!("withdrew directive {}; ", withdrawn.join(", "));
                self.submit(Directive { id, source: Utterance::new(text.as_str(), at_ms), body }).map(|r| prefix(r, &head))
            }
        }
    }

    fn adopt(&mut self, schedule: Schedule, lines: Vec<String>) -> SystemResponse {
        let mut text = lines.join("\n");
        if !text.is_empty() {
            text.push('\n');
        }
        text.push_str(&render_schedule(&schedule));
        self.last_schedule = Some(schedule.clone());
        SystemResponse::SolutionPresented { schedule, text }
    }

    fn why(&mut self, query: &WhyQuery) -> Step {
        let explanation = counterfactual_why(query, &self.instance, &self.accepted(), self.last_schedule.as_ref(), &self.config)
            .map_err(|e| format!("cannot answer: {e}"))?;
        let text = explanation.text.clone();
        Ok(SystemResponse::ExplanationText { explanation, text })
    }

    fn apply(&mut self, action: &UserAction, at_ms: u64) -> Step {
        match action {
            UserAction::SubmitUtterance { text } => self.utterance(text, at_ms),
            UserAction::ResolveWarning { resolution } => self.resolve(resolution, at_ms),
            UserAction::RespondToProposal { response } => self.respond(response, at_ms),
            UserAction::RemoveDirective { id } => self.remove(*id),
            UserAction::RequestSolve => self.solve(),
            UserAction::AskWhy { agent, task, polarity } => {
                self.why(&WhyQuery { agent: agent.clone(), task: task.clone(), polarity: *polarity })
            }
        }
    }
}

fn prefix(response: SystemResponse, head: &str) -> SystemResponse {
    use SystemResponse::*;
    let join = |t: String| format!("{head}{t}");
    match response {
        ParsedEcho { directive, text } => ParsedEcho { directive, text: join(text) },
        Warning { directive, findings, options, text } => Warning { directive, findings, options, text: join(text) },
        other => other,
    }
}

/// One dialogue turn. Pure: the same state, action and time always give
/// the same result. A rejected action leaves the state as it was apart from
/// the log and the revision.
pub fn handle(state: &SessionState, action: UserAction, at_ms: u64) -> (SessionState, SystemResponse) {
    let mut next = state.clone();
    let response = match next.apply(&action, at_ms) {
        Ok(r) => r,
        Err(text) => {
            next = state.clone();
            SystemResponse::ErrorText { text }
        }
    };
    let overrode = match &state.pending {
        Some(p) if next.entry(p.directive.id).is_some_and(|e| e.status == DirectiveStatus::Overridden) => p.findings.clone(),
        _ => Vec::new(),
    };
    next.log.push(LogEntry { at_ms, action, response: response.clone(), overrode });
    next.revision += 1;
    (next, response)
}
