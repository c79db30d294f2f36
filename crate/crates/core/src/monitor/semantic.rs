use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::assignment::{earliest_starts, ProblemInstance};
use crate::directive::{render_directive, Directive, DirectiveBody, DirectiveId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConflictKind {
    DirectContradiction,
    PrecedenceCycle,
    CapacityOverflow,
    WindowImpossible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConflictFinding {
    pub kind: ConflictKind,
    /// The candidate comes first, then accepted directives by id.
    pub directives: Vec<DirectiveId>,
    pub explanation: String,
}

/// Pre-solve conflict detection. Findings must be sound: the directives they
/// name admit no solution together.
pub trait SemanticChecker: Send + Sync {
    fn check(&self, candidate: &Directive, accepted: &[Directive], instance: &ProblemInstance) -> Vec<ConflictFinding>;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct RuleChecker;

impl SemanticChecker for RuleChecker {
    fn check(&self, candidate: &Directive, accepted: &[Directive], instance: &ProblemInstance) -> Vec<ConflictFinding> {
        semantic_check(candidate, accepted, instance)
    }
}

fn quote(d: &Directive) -> String {
    format!("\"{}\"", render_directive(d))
}

/// Whether two directives can never hold together.
fn contradicts(a: &DirectiveBody, b: &DirectiveBody) -> bool {
    use DirectiveBody::*;
    let one_way = |a: &DirectiveBody, b: &DirectiveBody| match (a, b) {
        (AssignTo { agent: a1, task: t1 }, Forbid { agent: a2, task: t2 }) => a1 == a2 && t1 == t2,
        (AssignTo { agent: a1, task: t1 }, AssignTo { agent: a2, task: t2 }) => t1 == t2 && a1 != a2,
        (RequireTask { task: t1 }, DropTask { task: t2 }) | (AssignTo { task: t1, .. }, DropTask { task: t2 }) => t1 == t2,
        (Precedence { after, before }, DropTask { task }) => after == task || before == task,
        // x[a,j] >= x[b,j] = 1 puts two agents on j.
        (ConditionalAssign { agent, other, task: t1 }, AssignTo { agent: a2, task: t2 }) => {
            agent != other && other == a2 && t1 == t2
        }
        _ => false,
    };
    one_way(a, b) || one_way(b, a)
}

fn precedence_cycle(candidate: &Directive, accepted: &[Directive], instance: &ProblemInstance) -> Option<ConflictFinding> {
    let DirectiveBody::Precedence { after, before } = &candidate.body else { return None };
    // Edges run before -> after; the candidate closes a cycle when a path
    // already leads from its `after` back to its `before`.
    let mut edges: BTreeMap<&str, Vec<(&str, &Directive)>> = BTreeMap::new();
    for d in accepted {
        if let DirectiveBody::Precedence { after: a, before: b } = &d.body {
            edges.entry(b.as_str()).or_default().push((a.as_str(), d));
        }
    }
    let mut parent: BTreeMap<&str, (&str, &Directive)> = BTreeMap::new();
    let mut queue = VecDeque::from([after.as_str()]);
    let mut seen = BTreeSet::from([after.as_str()]);
    while let Some(node) = queue.pop_front() {
        if node == before.as_str() {
            break;
        }
        for &(next, d) in edges.get(node).into_iter().flatten() {
            if seen.insert(next) {
                parent.insert(next, (node, d));
                queue.push_back(next);
            }
        }
    }
    if after == before || !seen.contains(before.as_str()) {
        return None;
    }
    let mut path = Vec::new();
    let mut node = before.as_str();
    while node != after.as_str() {
        let (prev, d) = parent[node];
        path.push(d);
        node = prev;
    }
    path.reverse();
    // Around the cycle the start times must grow by the summed durations.
    let duration = |t: &str| instance.task(t).map_or(0.0, |t| t.duration);
    let total: f64 = duration(before) + path.iter().map(|d| match &d.body {
        DirectiveBody::Precedence { before, .. } => duration(before),
        _ => 0.0,
    }).sum::<f64>();
    if total <= 0.0 {
        return None;
    }
    let mut directives = vec![candidate.id];
    directives.extend(path.iter().map(|d| d.id));
    let mut chain: Vec<String> = vec![quote(candidate)];
    chain.extend(path.iter().map(|d| quote(d)));
    Some(ConflictFinding {
        kind: ConflictKind::PrecedenceCycle,
        directives,
        explanation: format!("these directives order tasks in a cycle: {}", chain.join(", ")),
    })
}

fn capacity(candidate: &Directive, accepted: &[Directive], instance: &ProblemInstance) -> Vec<ConflictFinding> {
    let mut all: Vec<&Directive> = accepted.iter().collect();
    all.push(candidate);
    let mut out = Vec::new();

    let mut caps: BTreeMap<&str, (u32, &Directive)> = BTreeMap::new();
    for d in &all {
        if let DirectiveBody::AgentCap { agent, max } = &d.body {
            let slot = caps.entry(agent.as_str()).or_insert((*max, d));
            if *max < slot.0 {
                *slot = (*max, d);
            }
        }
    }
    for (&agent, &(max, cap)) in &caps {
        let mut tasks = BTreeSet::new();
        let mut forcing = Vec::new();
        for d in &all {
            if let DirectiveBody::AssignTo { agent: a, task } = &d.body {
                if a == agent && tasks.insert(task.as_str()) {
                    forcing.push(*d);
                }
            }
        }
        let involved = forcing.iter().any(|d| d.id == candidate.id) || cap.id == candidate.id;
        if tasks.len() as u32 > max && involved {
            let mut ids: Vec<DirectiveId> = std::iter::once(cap).chain(forcing).map(|d| d.id).collect();
            order_ids(&mut ids, candidate.id);
            out.push(ConflictFinding {
                kind: ConflictKind::CapacityOverflow,
                directives: ids,
                explanation: format!(
                    "agent {agent} may take at most {max} tasks but {} assignments name it ({})",
                    tasks.len(),
                    quote(cap)
                ),
            });
        }
    }

    // Every agent capped: the required tasks must fit in the summed capacity.
    if !instance.agents.is_empty() && instance.agents.iter().all(|a| caps.contains_key(a.id.as_str())) {
        let total: u64 = caps.values().map(|(m, _)| *m as u64).sum();
        let mut required = BTreeSet::new();
        let mut forcing = Vec::new();
        for d in &all {
            let tasks: Vec<&str> = match &d.body {
                DirectiveBody::RequireTask { task } | DirectiveBody::AssignTo { task, .. } => vec![task],
                DirectiveBody::Precedence { after, before } => vec![after, before],
                _ => vec![],
            };
            let mut adds = false;
            for t in tasks {
                adds |= required.insert(t);
            }
            if adds {
                forcing.push(*d);
            }
        }
        let caps_involved = caps.values().any(|(_, d)| d.id == candidate.id);
        if required.len() as u64 > total && (caps_involved || forcing.iter().any(|d| d.id == candidate.id)) {
            let mut ids: Vec<DirectiveId> = caps.values().map(|(_, d)| d.id).chain(forcing.iter().map(|d| d.id)).collect();
            ids.sort();
            ids.dedup();
            order_ids(&mut ids, candidate.id);
            if !out.iter().any(|f| f.directives == ids) {
                out.push(ConflictFinding {
                    kind: ConflictKind::CapacityOverflow,
                    directives: ids,
                    explanation: format!(
                        "{} tasks are required but all agents together may take at most {total}",
                        required.len()
                    ),
                });
            }
        }
    }
    out
}

fn window(candidate: &Directive, accepted: &[Directive], instance: &ProblemInstance) -> Option<ConflictFinding> {
    let task = match &candidate.body {
        DirectiveBody::Deadline { task, .. } | DirectiveBody::ReleaseAfter { task, .. } => task,
        _ => return None,
    };
    let j = instance.task_index(task)?;
    let spec = &instance.tasks[j];
    let lower = earliest_starts(instance)[j].min(instance.horizon);
    let mut deadline: Option<(u32, &Directive)> = None;
    let mut release: Option<(u32, &Directive)> = None;
    for d in accepted.iter().chain(std::iter::once(candidate)) {
        match &d.body {
            DirectiveBody::Deadline { task: t, time } if t == task && deadline.is_none_or(|(b, _)| *time < b) => {
                deadline = Some((*time, d))
            }
            DirectiveBody::ReleaseAfter { task: t, time } if t == task && release.is_none_or(|(b, _)| *time > b) => {
                release = Some((*time, d))
            }
            _ => {}
        }
    }
    let start = release.map_or(lower, |(r, _)| lower.max(r as f64));
    let (text, involved): (String, Vec<&Directive>) = match (deadline, release) {
        (_, Some((r, d))) if r as f64 > instance.horizon => {
            (format!("task {task} cannot start before {r}: the horizon ends at {}", instance.horizon), vec![d])
        }
        (Some((t, dd)), rel) if start + spec.duration > t as f64 => {
            let mut involved = vec![dd];
            let why = match rel {
                Some((r, rd)) if r as f64 >= lower => {
                    involved.push(rd);
                    format!("it may not start before {r}")
                }
                _ => format!("it cannot be reached before {lower}"),
            };
            (
                format!(
                    "task {task} cannot be completed by {t}: {why} and takes {}, so it finishes no earlier than {}",
                    spec.duration,
                    start + spec.duration
                ),
                involved,
            )
        }
        _ => return None,
    };
    if !involved.iter().any(|d| d.id == candidate.id) {
        return None;
    }
    let mut ids: Vec<DirectiveId> = involved.iter().map(|d| d.id).collect();
    order_ids(&mut ids, candidate.id);
    Some(ConflictFinding { kind: ConflictKind::WindowImpossible, directives: ids, explanation: text })
}

fn order_ids(ids: &mut Vec<DirectiveId>, candidate: DirectiveId) {
    ids.sort_by_key(|&d| (d != candidate, d));
    ids.dedup();
}

/// Rule-based conflicts between `candidate` and the accepted directives.
/// Sound but incomplete: anything missed is caught by the solver phases.
pub fn semantic_check(candidate: &Directive, accepted: &[Directive], instance: &ProblemInstance) -> Vec<ConflictFinding> {
    let mut out = Vec::new();
    for d in accepted {
        if contradicts(&candidate.body, &d.body) {
            out.push(ConflictFinding {
                kind: ConflictKind::DirectContradiction,
                directives: vec![candidate.id, d.id],
                explanation: format!("{} contradicts directive {}: {}", quote(candidate), d.id, quote(d)),
            });
        }
    }
    out.extend(precedence_cycle(candidate, accepted, instance));
    out.extend(capacity(candidate, accepted, instance));
    out.extend(window(candidate, accepted, instance));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::tests::tiny_instance;
    use crate::directive::Utterance;

    fn d(id: u32, body: DirectiveBody) -> Directive {
        Directive { id: DirectiveId(id), source: Utterance::new("", 0), body }
    }

    fn prec(after: &str, before: &str) -> DirectiveBody {
        DirectiveBody::Precedence { after: after.into(), before: before.into() }
    }

    #[test]
    fn reversed_precedence_is_one_cycle() {
        let inst = tiny_instance();
        let found = semantic_check(&d(2, prec("b", "a")), &[d(1, prec("a", "b"))], &inst);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].kind, ConflictKind::PrecedenceCycle);
        assert_eq!(found[0].directives, vec![DirectiveId(2), DirectiveId(1)]);
    }

    #[test]
    fn longer_cycle_lists_the_path() {
        let inst = tiny_instance();
        let accepted = [d(1, prec("a", "b")), d(2, prec("b", "j")), d(3, prec("j", "a"))];
        assert!(semantic_check(&accepted[2], &accepted[..2], &inst)[0].directives.len() == 3);
        assert!(semantic_check(&d(4, prec("j", "b")), &accepted[..1], &inst).is_empty());
    }

    #[test]
    fn nothing_accepted_nothing_found() {
        let inst = tiny_instance();
        let c = d(1, DirectiveBody::AssignTo { agent: "a".into(), task: "j".into() });
        assert!(semantic_check(&c, &[], &inst).is_empty());
    }

    #[test]
    fn assign_then_forbid() {
        let inst = tiny_instance();
        let found = semantic_check(
            &d(2, DirectiveBody::Forbid { agent: "a".into(), task: "j".into() }),
            &[d(1, DirectiveBody::AssignTo { agent: "a".into(), task: "j".into() })],
            &inst,
        );
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].kind, ConflictKind::DirectContradiction);
    }

    #[test]
    fn cap_overflow_and_windows() {
        let inst = tiny_instance();
        let accepted = [
            d(1, DirectiveBody::AssignTo { agent: "a".into(), task: "j".into() }),
            d(2, DirectiveBody::AssignTo { agent: "a".into(), task: "b".into() }),
        ];
        let found = semantic_check(&d(3, DirectiveBody::AgentCap { agent: "a".into(), max: 1 }), &accepted, &inst);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].kind, ConflictKind::CapacityOverflow);

        // Reaching j costs 1 and it runs for 2, so 2 is too early.
        let found = semantic_check(&d(4, DirectiveBody::Deadline { task: "j".into(), time: 2 }), &[], &inst);
        assert_eq!(found[0].kind, ConflictKind::WindowImpossible);
        assert!(semantic_check(&d(4, DirectiveBody::Deadline { task: "j".into(), time: 3 }), &[], &inst).is_empty());
        let release = d(5, DirectiveBody::ReleaseAfter { task: "j".into(), time: 4 });
        let found = semantic_check(&release, &[d(4, DirectiveBody::Deadline { task: "j".into(), time: 5 })], &inst);
        assert_eq!(found[0].directives, vec![DirectiveId(5), DirectiveId(4)]);
    }
}
