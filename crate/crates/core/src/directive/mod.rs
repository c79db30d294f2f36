//! User directives: intent classification, a small command grammar,
//! compilation to linear rows, and canonical English rendering.

mod compile;
mod grammar;
mod render;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::assignment::ProblemInstance;
pub use crate::milp::DirectiveId;

pub use compile::{compile_directive, CompiledConstraint, CompiledRow};
pub use grammar::{parse_body, parse_command, parse_directive, EntityKind, ParseError};
pub use render::{render_constraint, render_directive, render_pre_rule};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Utterance {
    pub text: String,
    /// Milliseconds since the Unix epoch, UTC.
    pub received_at_ms: u64,
}

impl Utterance {
    pub fn new(text: impl Into<String>, received_at_ms: u64) -> Self {
        Self { text: text.into(), received_at_ms }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Reply {
    Accept,
    Reject,
    Ignore,
    Amend,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "intent", content = "reply")]
pub enum Intent {
    AddConstraint,
    RemoveConstraint,
    WhyQuery,
    ShowState,
    Solve,
    DialogueReply(Reply),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    /// "why wasn't agent i assigned to task j?"
    WhyNot,
    /// "why was agent i assigned to task j?"
    Why,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WhyQuery {
    pub agent: String,
    pub task: String,
    pub polarity: Polarity,
}

/// The directive variants users can issue. Entities are instance ids.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DirectiveBody {
    AssignTo { agent: String, task: String },
    Forbid { agent: String, task: String },
    /// Assign `agent` to `task` whenever `other` is assigned to it.
    ConditionalAssign { agent: String, other: String, task: String },
    /// `after` completes after `before`.
    Precedence { after: String, before: String },
    Deadline { task: String, time: u32 },
    ReleaseAfter { task: String, time: u32 },
    RequireTask { task: String },
    DropTask { task: String },
    AgentCap { agent: String, max: u32 },
}

impl DirectiveBody {
    pub fn agents(&self) -> Vec<&str> {
        use DirectiveBody::*;
        match self {
            AssignTo { agent, .. } | Forbid { agent, .. } | AgentCap { agent, .. } => vec![agent],
            ConditionalAssign { agent, other, .. } => vec![agent, other],
            _ => vec![],
        }
    }

    pub fn tasks(&self) -> Vec<&str> {
        use DirectiveBody::*;
        match self {
            AssignTo { task, .. }
            | Forbid { task, .. }
            | ConditionalAssign { task, .. }
            | Deadline { task, .. }
            | ReleaseAfter { task, .. }
            | RequireTask { task }
            | DropTask { task } => vec![task],
            Precedence { after, before } => vec![after, before],
            AgentCap { .. } => vec![],
        }
    }

    /// Directives with a numeric bound that can be stretched by slack.
    pub fn is_numeric(&self) -> bool {
        matches!(self, DirectiveBody::Deadline { .. } | DirectiveBody::ReleaseAfter { .. } | DirectiveBody::AgentCap { .. })
    }

    /// Checks that every referenced entity exists in `instance`.
    pub fn check_bound(&self, instance: &ProblemInstance) -> Result<(), ParseError> {
        for a in self.agents() {
            if instance.agent_index(a).is_none() {
                return Err(ParseError::unknown(EntityKind::Agent, a, 0, None));
            }
        }
        for t in self.tasks() {
            if instance.task_index(t).is_none() {
                return Err(ParseError::unknown(EntityKind::Task, t, 0, None));
            }
        }
        Ok(())
    }
}

impl fmt::Display for DirectiveBody {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render::render_body(self))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Directive {
    pub id: DirectiveId,
    pub source: Utterance,
    pub body: DirectiveBody,
}

/// Second-pass reading of an utterance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    Add { body: DirectiveBody },
    /// `None` means "remove" without a target, i.e. discard the pending candidate.
    Remove { id: Option<DirectiveId> },
    Why { query: WhyQuery },
    ShowState,
    Solve,
    Reply { reply: Reply, text: Option<String> },
}

const ACCEPT: &[&str] = &["accept", "yes", "ok", "okay", "approve"];
const REJECT: &[&str] = &["reject", "no", "decline"];
const IGNORE: &[&str] = &["ignore", "override", "keep it"];
const SOLVE: &[&str] = &["solve", "replan", "optimize", "optimise"];
const SHOW: &[&str] = &["show", "list", "status", "state"];
const REMOVE: &[&str] = &["remove", "delete", "retract"];

pub(crate) fn normalize(text: &str) -> String {
    text.trim().trim_end_matches(['?', '.', '!', ';', ',']).trim().to_lowercase()
}

/// First pass: which kind of action the utterance asks for. Anything not
/// recognised is treated as an attempt to add a constraint.
pub fn classify_intent(utterance: &Utterance) -> Intent {
    let norm = normalize(&utterance.text);
    let words: Vec<&str> = norm.split_whitespace().collect();
    let first = words.first().copied().unwrap_or("");
    if first == "why" {
        Intent::WhyQuery
    } else if SOLVE.contains(&first) {
        Intent::Solve
    } else if SHOW.contains(&first) {
        Intent::ShowState
    } else if REMOVE.contains(&first) {
        Intent::RemoveConstraint
    } else if ACCEPT.contains(&norm.as_str()) || first == "accept" {
        Intent::DialogueReply(Reply::Accept)
    } else if REJECT.contains(&norm.as_str()) || first == "reject" {
        Intent::DialogueReply(Reply::Reject)
    } else if IGNORE.contains(&norm.as_str()) || first == "ignore" {
        Intent::DialogueReply(Reply::Ignore)
    } else if first == "amend" || first == "modify" {
        Intent::DialogueReply(Reply::Amend)
    } else {
        Intent::AddConstraint
    }
}

/// Maps utterances to commands. The grammar-backed implementation is the
/// only one shipped; other front ends can slot in behind this trait.
pub trait Translator: Send + Sync {
    fn classify(&self, utterance: &Utterance) -> Intent;
    fn interpret(&self, utterance: &Utterance, instance: &ProblemInstance) -> Result<Command, ParseError>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct GrammarTranslator;

impl Translator for GrammarTranslator {
    fn classify(&self, utterance: &Utterance) -> Intent {
        classify_intent(utterance)
    }

    fn interpret(&self, utterance: &Utterance, instance: &ProblemInstance) -> Result<Command, ParseError> {
        parse_command(utterance, classify_intent(utterance), instance)
    }
}
