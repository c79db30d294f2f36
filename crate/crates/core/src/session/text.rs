use crate::assignment::Schedule;
use crate::directive::{render_directive, Directive, Polarity};
use crate::monitor::{AblationReport, ConflictFinding, RelaxationReport};

use super::{DirectiveStatus, LogEntry, ProposalResponse, Resolution, SessionState, UserAction};

pub fn render_schedule(schedule: &Schedule) -> String {
    let mut out = String::new();
    for route in &schedule.routes {
        let stops: Vec<String> = route.stops.iter().map(|s| format!("{} at {}", s.task, s.start)).collect();
        let line = if stops.is_empty() { "idle".to_string() } else { stops.join(", ") };
        out.push_str(&format!("agent {}: {line}\n", route.agent));
    }
    if !schedule.unassigned.is_empty() {
        out.push_str(&format!("unassigned: {}\n", schedule.unassigned.join(", ")));
    }
    let b = &schedule.breakdown;
    out.push_str(&format!(
        "objective {} (travel cost {}, reward {}, penalty {})",
        b.net, b.travel_cost, b.reward, b.penalty
    ));
    out
}

pub(super) fn warning(candidate: &Directive, findings: &[ConflictFinding]) -> String {
    let mut out = format!("directive {} \"{}\" conflicts:\n", candidate.id, render_directive(candidate));
    for f in findings {
        out.push_str(&format!("  - {}\n", f.explanation));
    }
    out.push_str("reply amend <directive>, remove, or ignore");
    out
}

pub(super) fn relaxation(report: &RelaxationReport) -> String {
    let mut out = String::from("no plan meets every directive; relaxing these bounds would:\n");
    for r in &report.relaxed {
        out.push_str(&format!("  - directive {}: {}\n", r.directive, r.explanation));
    }
    out.push_str(&format!("total slack {}\n", report.total_slack));
    out.push_str(&render_schedule(&report.schedule));
    out.push_str("\nreply accept, reject, or modify <directive>");
    out
}

pub(super) fn ablation(report: &AblationReport) -> String {
    let mut out = String::from("no plan meets every directive; dropping these would:\n");
    for e in &report.explanations {
        out.push_str(&format!("  - {e}\n"));
    }
    out.push_str(&render_schedule(&report.schedule));
    out.push_str("\nreply accept, reject, or modify <directive>");
    out
}

fn status(s: &DirectiveStatus) -> String {
    match s {
        DirectiveStatus::Active => "active".into(),
        DirectiveStatus::Relaxed { slack } => format!("relaxed by {slack}"),
        DirectiveStatus::Removed => "removed".into(),
        DirectiveStatus::Overridden => "overridden".into(),
    }
}

pub(super) fn listing(state: &SessionState) -> String {
    let mut out = format!("scenario {} at revision {}\n", state.scenario_ref, state.revision);
    if state.ledger.is_empty() {
        out.push_str("no directives\n");
    }
    for e in &state.ledger {
        out.push_str(&format!("  {} [{}] {}\n", e.directive.id, status(&e.status), render_directive(&e.directive)));
    }
    if let Some(p) = &state.pending {
        out.push_str(&format!("waiting: directive {} \"{}\"\n", p.directive.id, render_directive(&p.directive)));
    }
    if state.proposal.is_some() {
        out.push_str("a proposal is open\n");
    }
    match &state.last_schedule {
        Some(s) => out.push_str(&render_schedule(s)),
        None => out.push_str("not solved yet"),
    }
    out
}

pub fn render_action(action: &UserAction) -> String {
    match action {
        UserAction::SubmitUtterance { text } => text.clone(),
        UserAction::ResolveWarning { resolution } => match resolution {
            Resolution::Amend { text } => format!("[amend] {text}"),
            Resolution::Remove { id: None } => "[remove]".into(),
            Resolution::Remove { id: Some(id) } => format!("[remove {id}]"),
            Resolution::Ignore => "[ignore]".into(),
        },
        UserAction::RespondToProposal { response } => match response {
            ProposalResponse::Accept => "[accept]".into(),
            ProposalResponse::Reject => "[reject]".into(),
            ProposalResponse::Modify { text } => format!("[modify] {text}"),
        },
        UserAction::RemoveDirective { id } => format!("[remove directive {id}]"),
        UserAction::RequestSolve => "[solve]".into(),
        UserAction::AskWhy { agent, task, polarity } => match polarity {
            Polarity::WhyNot => format!("[why not] agent {agent}, task {task}"),
            Polarity::Why => format!("[why] agent {agent}, task {task}"),
        },
    }
}

/// The log as a plain dialogue: user lines start with `>`. No timestamps,
/// so equal sessions print equal transcripts.
pub fn render_transcript(log: &[LogEntry]) -> String {
    let mut out = String::new();
    for entry in log {
        out.push_str(&format!("> {}\n", render_action(&entry.action)));
        out.push_str(entry.response.text());
        out.push_str("\n\n");
    }
    out
}
