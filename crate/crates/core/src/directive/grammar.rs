use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::ProblemInstance;

use super::{Command, Directive, DirectiveBody, DirectiveId, Intent, Polarity, Reply, Utterance, WhyQuery};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntityKind {
    Agent,
    Task,
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EntityKind::Agent => "agent",
            EntityKind::Task => "task",
        })
    }
}

/// `position` is a byte offset into the utterance text.
#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
#[serde(tag = "error", rename_all = "snake_case")]
pub enum ParseError {
    #[error("empty command")]
    Empty,
    #[error("unknown {kind} `{name}` at position {position}{}", hint(suggestion))]
    UnknownEntity { kind: EntityKind, name: String, position: usize, suggestion: Option<String> },
    #[error("expected {expected} at position {position}{}{}", found.as_ref().map(|f| format!(", found `{f}`")).unwrap_or_default(), hint(suggestion))]
    MalformedCommand { position: usize, expected: String, found: Option<String>, suggestion: Option<String> },
}

fn hint(suggestion: &Option<String>) -> String {
    suggestion.as_ref().map(|s| format!(" (did you mean `{s}`?)")).unwrap_or_default()
}

impl ParseError {
    pub(crate) fn unknown(kind: EntityKind, name: &str, position: usize, suggestion: Option<String>) -> Self {
        ParseError::UnknownEntity { kind, name: name.to_string(), position, suggestion }
    }

    pub fn position(&self) -> Option<usize> {
        match self {
            ParseError::Empty => None,
            ParseError::UnknownEntity { position, .. } | ParseError::MalformedCommand { position, .. } => Some(*position),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    at: usize,
}

fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in text.char_indices().chain(std::iter::once((text.len(), ' '))) {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                let word = text[s..i].trim_end_matches(['?', '.', '!', ';', ',']);
                if !word.is_empty() {
                    out.push(Token { text: word, at: s });
                }
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    out
}

fn nearest<'a>(word: &str, candidates: impl IntoIterator<Item = &'a str>) -> Option<String> {
    let word = word.to_lowercase();
    let limit = (word.chars().count() / 2).clamp(1, 3);
    candidates
        .into_iter()
        .map(|c| (strsim::levenshtein(&word, &c.to_lowercase()), c))
        .filter(|&(d, _)| d > 0 && d <= limit)
        .min_by_key(|&(d, _)| d)
        .map(|(_, c)| c.to_string())
}

/// Leading words of every command form, used for "did you mean" hints.
const OPENERS: &[&str] = &["assign", "forbid", "do", "task", "skip", "drop", "agent", "why", "solve", "remove"];

struct Parser<'a> {
    toks: Vec<Token<'a>>,
    pos: usize,
    end: usize,
    instance: &'a ProblemInstance,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str, instance: &'a ProblemInstance) -> Self {
        Parser { toks: tokenize(text), pos: 0, end: text.len(), instance }
    }

    fn here(&self) -> usize {
        self.toks.get(self.pos).map_or(self.end, |t| t.at)
    }

    fn peek(&self) -> Option<Token<'a>> {
        self.toks.get(self.pos).copied()
    }

    fn at_word(&self, offset: usize, word: &str) -> bool {
        self.toks.get(self.pos + offset).is_some_and(|t| t.text.eq_ignore_ascii_case(word))
    }

    /// Consumes `phrase` (space separated keywords) if it follows.
    fn eat(&mut self, phrase: &str) -> bool {
        let words: Vec<&str> = phrase.split(' ').collect();
        if words.iter().enumerate().all(|(k, w)| self.at_word(k, w)) {
            self.pos += words.len();
            true
        } else {
            false
        }
    }

    fn malformed(&self, expected: &[&str]) -> ParseError {
        let found = self.peek().map(|t| t.text.to_string());
        let suggestion = found.as_deref().and_then(|f| nearest(f, expected.iter().map(|e| e.split(' ').next().unwrap())));
        let expected = match expected {
            [one] => format!("`{one}`"),
            many => format!("one of {}", many.iter().map(|e| format!("`{e}`")).collect::<Vec<_>>().join(", ")),
        };
        ParseError::MalformedCommand { position: self.here(), expected, found, suggestion }
    }

    fn expect(&mut self, phrase: &str) -> Result<(), ParseError> {
        self.expect_any(&[phrase]).map(|_| ())
    }

    fn expect_any(&mut self, phrases: &[&str]) -> Result<usize, ParseError> {
        for (k, &p) in phrases.iter().enumerate() {
            if self.eat(p) {
                return Ok(k);
            }
        }
        // Point at the first word that fails to match the closest phrase.
        let mut err = self.malformed(phrases);
        for &p in phrases {
            let words: Vec<&str> = p.split(' ').collect();
            let matched = words.iter().enumerate().take_while(|(k, w)| self.at_word(*k, w)).count();
            if matched > 0 {
                let saved = self.pos;
                self.pos += matched;
                err = self.malformed(&[words[matched]]);
                self.pos = saved;
                break;
            }
        }
        Err(err)
    }

    fn entity(&mut self, kind: EntityKind) -> Result<String, ParseError> {
        let tok = self.peek().ok_or_else(|| ParseError::MalformedCommand {
            position: self.end,
            expected: format!("{kind} name"),
            found: None,
            suggestion: None,
        })?;
        let inst = self.instance;
        let found = match kind {
            EntityKind::Agent => inst
                .agents
                .iter()
                .find(|a| a.id == tok.text)
                .or_else(|| inst.agents.iter().find(|a| a.name == tok.text))
                .map(|a| a.id.clone()),
            EntityKind::Task => inst
                .tasks
                .iter()
                .find(|t| t.id == tok.text)
                .or_else(|| inst.tasks.iter().find(|t| t.name == tok.text))
                .map(|t| t.id.clone()),
        };
        match found {
            Some(id) => {
                self.pos += 1;
                Ok(id)
            }
            None => {
                let suggestion = match kind {
                    EntityKind::Agent => nearest(tok.text, inst.agents.iter().map(|a| a.id.as_str())),
                    EntityKind::Task => nearest(tok.text, inst.tasks.iter().map(|t| t.id.as_str())),
                };
                Err(ParseError::unknown(kind, tok.text, tok.at, suggestion))
            }
        }
    }

    fn agent(&mut self) -> Result<String, ParseError> {
        self.entity(EntityKind::Agent)
    }

    fn task(&mut self) -> Result<String, ParseError> {
        self.entity(EntityKind::Task)
    }

    fn number(&mut self) -> Result<u32, ParseError> {
        match self.peek() {
            Some(t) => match t.text.trim_start_matches('#').parse::<u32>() {
                Ok(n) => {
                    self.pos += 1;
                    Ok(n)
                }
                Err(_) => Err(ParseError::MalformedCommand {
                    position: t.at,
                    expected: "a nonnegative whole number".into(),
                    found: Some(t.text.to_string()),
                    suggestion: None,
                }),
            },
            None => Err(ParseError::MalformedCommand {
                position: self.end,
                expected: "a nonnegative whole number".into(),
                found: None,
                suggestion: None,
            }),
        }
    }

    fn finish(&self) -> Result<(), ParseError> {
        match self.peek() {
            None => Ok(()),
            Some(t) => Err(ParseError::MalformedCommand {
                position: t.at,
                expected: "end of command".into(),
                found: Some(t.text.to_string()),
                suggestion: None,
            }),
        }
    }

    fn directive(&mut self) -> Result<DirectiveBody, ParseError> {
        if self.peek().is_none() {
            return Err(ParseError::Empty);
        }
        let body = if self.eat("assign agent") {
            self.assign()?
        } else if self.eat("forbid") || self.eat("do not assign") || self.eat("don't assign") {
            self.expect("agent")?;
            let agent = self.agent()?;
            self.expect_any(&["from", "to"])?;
            self.expect("task")?;
            DirectiveBody::Forbid { agent, task: self.task()? }
        } else if self.eat("skip task") || self.eat("drop task") {
            DirectiveBody::DropTask { task: self.task()? }
        } else if self.eat("agent") {
            let agent = self.agent()?;
            self.expect_any(&["may take at most", "can take at most"])?;
            let max = self.number()?;
            self.expect_any(&["tasks", "task"])?;
            DirectiveBody::AgentCap { agent, max }
        } else if self.eat("task") {
            self.task_clause()?
        } else {
            let found = self.peek().map(|t| t.text.to_string());
            let suggestion = found.as_deref().and_then(|f| nearest(f, OPENERS.iter().copied()));
            return Err(ParseError::MalformedCommand {
                position: self.here(),
                expected: "a command such as `assign agent A to task T`".into(),
                found,
                suggestion,
            });
        };
        self.finish()?;
        Ok(body)
    }

    fn assign(&mut self) -> Result<DirectiveBody, ParseError> {
        let agent = self.agent()?;
        self.expect("to task")?;
        let task = self.task()?;
        if !self.eat("if agent") {
            return Ok(DirectiveBody::AssignTo { agent, task });
        }
        let other = self.agent()?;
        self.expect_any(&["has already been assigned to it", "has been assigned to it", "is assigned to it"])?;
        Ok(DirectiveBody::ConditionalAssign { agent, other, task })
    }

    /// Everything that opens with "task T ...".
    fn task_clause(&mut self) -> Result<DirectiveBody, ParseError> {
        let task = self.task()?;
        if self.eat("must not start before") || self.eat("should not start before") || self.eat("cannot start before") {
            return Ok(DirectiveBody::ReleaseAfter { task, time: self.number()? });
        }
        self.expect_any(&["must", "should"])?;
        if self.eat("finish by") {
            return Ok(DirectiveBody::Deadline { task, time: self.number()? });
        }
        if self.eat("come before task") || self.eat("happen before task") {
            return Ok(DirectiveBody::Precedence { after: self.task()?, before: task });
        }
        if self.eat("come after task") || self.eat("happen after task") {
            return Ok(DirectiveBody::Precedence { after: task, before: self.task()? });
        }
        self.expect("be completed")?;
        if self.eat("by") {
            return Ok(DirectiveBody::Deadline { task, time: self.number()? });
        }
        if self.eat("after task") {
            return Ok(DirectiveBody::Precedence { after: task, before: self.task()? });
        }
        if self.eat("before task") {
            return Ok(DirectiveBody::Precedence { after: self.task()?, before: task });
        }
        if self.peek().is_none() {
            return Ok(DirectiveBody::RequireTask { task });
        }
        Err(self.malformed(&["by", "after task", "before task"]))
    }

    fn why(&mut self) -> Result<WhyQuery, ParseError> {
        self.expect("why")?;
        let negated = self.eat("wasn't") || self.eat("isn't") || self.eat("was not") || self.eat("is not");
        if !negated {
            self.expect_any(&["was", "is"])?;
        }
        self.expect("agent")?;
        let agent = self.agent()?;
        let negated = self.eat("not") || negated;
        self.expect("assigned to task")?;
        let task = self.task()?;
        self.finish()?;
        Ok(WhyQuery { agent, task, polarity: if negated { Polarity::WhyNot } else { Polarity::Why } })
    }

    fn remove(&mut self) -> Result<Option<DirectiveId>, ParseError> {
        self.expect_any(&["remove", "delete", "retract"])?;
        if self.peek().is_none() || self.eat("it") {
            self.finish()?;
            return Ok(None);
        }
        let _ = self.eat("constraint") || self.eat("directive");
        let id = self.number()?;
        self.finish()?;
        Ok(Some(DirectiveId(id)))
    }
}

/// Parses a directive utterance against the entities of `instance`.
pub fn parse_body(text: &str, instance: &ProblemInstance) -> Result<DirectiveBody, ParseError> {
    Parser::new(text, instance).directive()
}

pub fn parse_directive(utterance: &Utterance, instance: &ProblemInstance, id: DirectiveId) -> Result<Directive, ParseError> {
    let body = parse_body(&utterance.text, instance)?;
    Ok(Directive { id, source: utterance.clone(), body })
}

/// Second pass: reads the utterance according to its classified intent.
pub fn parse_command(utterance: &Utterance, intent: Intent, instance: &ProblemInstance) -> Result<Command, ParseError> {
    let text = utterance.text.as_str();
    let mut p = Parser::new(text, instance);
    if p.peek().is_none() {
        return Err(ParseError::Empty);
    }
    Ok(match intent {
        Intent::AddConstraint => Command::Add { body: p.directive()? },
        Intent::RemoveConstraint => Command::Remove { id: p.remove()? },
        Intent::WhyQuery => Command::Why { query: p.why()? },
        Intent::ShowState => Command::ShowState,
        Intent::Solve => Command::Solve,
        Intent::DialogueReply(Reply::Amend) => {
            p.pos += 1;
            let rest = p.peek().map(|t| text[t.at..].trim().to_string()).filter(|s| !s.is_empty());
            Command::Reply { reply: Reply::Amend, text: rest }
        }
        Intent::DialogueReply(reply) => Command::Reply { reply, text: None },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::tests::tiny_instance;

    fn parse(text: &str) -> Result<DirectiveBody, ParseError> {
        parse_body(text, &tiny_instance())
    }

    #[test]
    fn conditional_sentence() {
        assert_eq!(
            parse("assign agent a to task j if agent b has already been assigned to it").unwrap(),
            DirectiveBody::ConditionalAssign { agent: "a".into(), other: "b".into(), task: "j".into() }
        );
        assert_eq!(
            parse("assign agent a to task j if agent b is assigned to it.").unwrap(),
            DirectiveBody::ConditionalAssign { agent: "a".into(), other: "b".into(), task: "j".into() }
        );
    }

    #[test]
    fn precedence_and_synonyms() {
        let p = DirectiveBody::Precedence { after: "a".into(), before: "b".into() };
        assert_eq!(parse("task a should be completed after task b").unwrap(), p);
        assert_eq!(parse("Task a MUST be completed after task b").unwrap(), p);
        assert_eq!(parse("task b must come before task a").unwrap(), p);
        assert_eq!(parse("task b must be completed before task a").unwrap(), p);
    }

    #[test]
    fn task_forms() {
        assert_eq!(parse("task j must be completed by 12").unwrap(), DirectiveBody::Deadline { task: "j".into(), time: 12 });
        assert_eq!(parse("task j must finish by 3").unwrap(), DirectiveBody::Deadline { task: "j".into(), time: 3 });
        assert_eq!(parse("task j must not start before 4").unwrap(), DirectiveBody::ReleaseAfter { task: "j".into(), time: 4 });
        assert_eq!(parse("task j must be completed").unwrap(), DirectiveBody::RequireTask { task: "j".into() });
        assert_eq!(parse("skip task j").unwrap(), DirectiveBody::DropTask { task: "j".into() });
        assert_eq!(parse("agent a may take at most 2 tasks").unwrap(), DirectiveBody::AgentCap { agent: "a".into(), max: 2 });
        assert_eq!(parse("do not assign agent b to task a").unwrap(), DirectiveBody::Forbid { agent: "b".into(), task: "a".into() });
    }

    #[test]
    fn unknown_entity_points_at_name() {
        let err = parse("assign agent a9 to task j").unwrap_err();
        match &err {
            ParseError::UnknownEntity { kind, name, position, .. } => {
                assert_eq!((*kind, name.as_str(), *position), (EntityKind::Agent, "a9", 13));
            }
            other => panic!("{other:?}"),
        }
        let err = parse("assign agent a to task jj").unwrap_err();
        assert!(matches!(err, ParseError::UnknownEntity { suggestion: Some(ref s), .. } if s == "j"), "{err:?}");
    }

    #[test]
    fn malformed_commands_suggest() {
        let err = parse("asign agent a to task j").unwrap_err();
        assert!(matches!(&err, ParseError::MalformedCommand { position: 0, suggestion: Some(s), .. } if s == "assign"), "{err:?}");
        let err = parse("task j must be completed tomorrow").unwrap_err();
        assert_eq!(err.position(), Some(25));
        assert!(parse("assign agent a to task j please").is_err());
        assert_eq!(parse("   "), Err(ParseError::Empty));
    }

    #[test]
    fn commands_by_intent() {
        let inst = tiny_instance();
        let cmd = |t: &str| {
            let u = Utterance::new(t, 0);
            parse_command(&u, super::super::classify_intent(&u), &inst)
        };
        assert_eq!(cmd("remove constraint 3").unwrap(), Command::Remove { id: Some(DirectiveId(3)) });
        assert_eq!(cmd("remove").unwrap(), Command::Remove { id: None });
        assert_eq!(
            cmd("why wasn't agent a assigned to task j?").unwrap(),
            Command::Why { query: WhyQuery { agent: "a".into(), task: "j".into(), polarity: Polarity::WhyNot } }
        );
        assert_eq!(
            cmd("why was agent b assigned to task a").unwrap(),
            Command::Why { query: WhyQuery { agent: "b".into(), task: "a".into(), polarity: Polarity::Why } }
        );
        assert_eq!(
            cmd("amend task j must be completed by 9").unwrap(),
            Command::Reply { reply: Reply::Amend, text: Some("task j must be completed by 9".into()) }
        );
    }
}
