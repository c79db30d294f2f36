use crate::assignment::{DecisionIndex, PreRule, ProblemInstance, VarRole, START_ID};
use crate::milp::{LinearConstraint, LinearExpr, Origin, VarId};

use super::{Directive, DirectiveBody};

pub(crate) fn render_body(body: &DirectiveBody) -> String {
    use DirectiveBody::*;
    match body {
        AssignTo { agent, task } => format!("assign agent {agent} to task {task}"),
        Forbid { agent, task } => format!("forbid agent {agent} from task {task}"),
        ConditionalAssign { agent, other, task } => {
            format!("assign agent {agent} to task {task} if agent {other} is assigned to it")
        }
        Precedence { after, before } => format!("task {after} must be completed after task {before}"),
        Deadline { task, time } => format!("task {task} must be completed by {time}"),
        ReleaseAfter { task, time } => format!("task {task} must not start before {time}"),
        RequireTask { task } => format!("task {task} must be completed"),
        DropTask { task } => format!("skip task {task}"),
        AgentCap { agent, max } => format!("agent {agent} may take at most {max} tasks"),
    }
}

/// Canonical sentence for a directive; parsing it yields the same body.
pub fn render_directive(directive: &Directive) -> String {
    render_body(&directive.body)
}

pub fn render_pre_rule(rule: &PreRule, instance: &ProblemInstance) -> String {
    let a = |i: usize| instance.agents[i].id.as_str();
    let t = |j: usize| instance.tasks[j].id.as_str();
    let text = match *rule {
        PreRule::SingleService { task } => format!("task {} is served by at most one agent", t(task)),
        PreRule::PredecessorLink { agent, task } => {
            format!("agent {} arrives at task {} exactly when it is assigned to it", a(agent), t(task))
        }
        PreRule::SuccessorLink { agent, task } => {
            format!("agent {} leaves task {} at most once and only if assigned to it", a(agent), t(task))
        }
        PreRule::RouteStart { agent } => format!("agent {} starts at most one route", a(agent)),
        PreRule::TimePropagation { agent, from: None, to } => {
            format!("agent {} cannot start task {} before travelling to it", a(agent), t(to))
        }
        PreRule::TimePropagation { agent, from: Some(from), to } => format!(
            "if agent {} goes from task {} to task {}, task {} starts after task {} ends plus travel",
            a(agent),
            t(from),
            t(to),
            t(to),
            t(from)
        ),
        PreRule::Earliness { task } => format!("earliness of task {} is measured from its window", t(task)),
        PreRule::Lateness { task } => format!("lateness of task {} is measured from its window", t(task)),
        PreRule::Completion { task } => format!("task {} must end within the horizon {}", t(task), instance.horizon),
        PreRule::Dependency { before, after } => format!("task {} can only be done if task {} is", t(after), t(before)),
        PreRule::ChainTiming { before, after } => {
            format!("task {} starts only after task {} is finished", t(after), t(before))
        }
    };
    format!("built-in rule: {text}")
}

fn var_name(var: VarId, index: &DecisionIndex, instance: &ProblemInstance) -> String {
    let a = |i: usize| instance.agents[i].id.as_str();
    let t = |j: usize| instance.tasks[j].id.as_str();
    match index.role(var) {
        VarRole::Assign { agent, task } => format!("x[{},{}]", a(agent), t(task)),
        VarRole::Arc { agent, from, to } => format!("z[{},{},{}]", a(agent), from.map_or(START_ID, t), t(to)),
        VarRole::Start { task } => format!("s[{}]", t(task)),
        VarRole::Earliness { task } => format!("p1[{}]", t(task)),
        VarRole::Lateness { task } => format!("p2[{}]", t(task)),
        VarRole::Other => var.to_string(),
    }
}

fn algebraic(c: &LinearConstraint, index: &DecisionIndex, instance: &ProblemInstance) -> String {
    let expr = c.expr.normalized();
    let mut out = String::new();
    for (k, &(coef, var)) in expr.terms.iter().enumerate() {
        let sign = if coef < 0.0 { "-" } else if k > 0 { "+" } else { "" };
        let mag = coef.abs();
        let name = var_name(var, index, instance);
        let term = if mag == 1.0 { name } else { format!("{mag}*{name}") };
        if k > 0 {
            out.push(' ');
        }
        if sign.is_empty() {
            out.push_str(&term);
        } else if k == 0 {
            out.push_str(&format!("-{term}"));
        } else {
            out.push_str(&format!("{sign} {term}"));
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    if expr.constant != 0.0 {
        out.push_str(&format!(" + {}", expr.constant));
    }
    format!("{out} {} {}", c.sense.symbol(), c.rhs)
}

fn find<T>(expr: &LinearExpr, index: &DecisionIndex, coef: f64, pick: impl Fn(VarRole) -> Option<T>) -> Option<T> {
    expr.terms.iter().filter(|(c, _)| *c == coef).find_map(|&(_, v)| pick(index.role(v)))
}

fn user_sentence(c: &LinearConstraint, index: &DecisionIndex, instance: &ProblemInstance) -> Option<String> {
    let kind = c.label.rsplit_once(':').map(|(_, k)| k)?;
    let expr = c.expr.normalized();
    let assign = |coef| {
        find(&expr, index, coef, |r| match r {
            VarRole::Assign { agent, task } => Some((agent, task)),
            _ => None,
        })
    };
    let start = |coef| {
        find(&expr, index, coef, |r| match r {
            VarRole::Start { task } => Some(task),
            _ => None,
        })
    };
    let a = |i: usize| instance.agents[i].id.clone();
    let t = |j: usize| instance.tasks[j].id.clone();
    let body = match kind {
        "assign" => {
            let (i, j) = assign(1.0)?;
            DirectiveBody::AssignTo { agent: a(i), task: t(j) }
        }
        "forbid" => {
            let (i, j) = assign(1.0)?;
            DirectiveBody::Forbid { agent: a(i), task: t(j) }
        }
        "conditional" => {
            let (i, j) = assign(1.0)?;
            let (o, _) = assign(-1.0)?;
            DirectiveBody::ConditionalAssign { agent: a(i), other: a(o), task: t(j) }
        }
        "precedence" => DirectiveBody::Precedence { after: t(start(1.0)?), before: t(start(-1.0)?) },
        "precedence_after_served" | "precedence_before_served" | "require" => {
            DirectiveBody::RequireTask { task: t(assign(1.0)?.1) }
        }
        "drop" => DirectiveBody::DropTask { task: t(assign(1.0)?.1) },
        "deadline" => {
            let j = start(1.0)?;
            let time = c.rhs + instance.tasks[j].duration;
            return Some(format!("task {} must be completed by {}", t(j), time));
        }
        "release" => return Some(format!("task {} must not start before {}", t(start(1.0)?), c.rhs)),
        "cap" => return Some(format!("agent {} may take at most {} tasks", a(assign(1.0)?.0), c.rhs)),
        _ => return None,
    };
    Some(render_body(&body))
}

/// English for a single model row. User rows use the directive templates;
/// everything else is prefixed with "built-in rule".
pub fn render_constraint(c: &LinearConstraint, index: &DecisionIndex, instance: &ProblemInstance) -> String {
    match c.origin {
        Origin::User(_) => user_sentence(c, index, instance).unwrap_or_else(|| algebraic(c, index, instance)),
        Origin::Pre => match index.pre_rules.get(&c.id) {
            Some(rule) => render_pre_rule(rule, instance),
            None => format!("built-in rule: {}", algebraic(c, index, instance)),
        },
        Origin::Internal => format!("built-in rule: {}", algebraic(c, index, instance)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::build_base_model;
    use crate::assignment::tests::tiny_instance;
    use crate::directive::{compile_directive, DirectiveId, Utterance};
    use crate::milp::Sense;

    #[test]
    fn templates() {
        let p = DirectiveBody::Precedence { after: "a".into(), before: "b".into() };
        assert_eq!(render_body(&p), "task a must be completed after task b");
        let c = DirectiveBody::ConditionalAssign { agent: "a".into(), other: "b".into(), task: "j".into() };
        assert_eq!(render_body(&c), "assign agent a to task j if agent b is assigned to it");
    }

    #[test]
    fn compiled_rows_render_like_their_directive() {
        let inst = tiny_instance();
        let (mut model, index) = build_base_model(&inst).unwrap();
        let bodies = [
            DirectiveBody::AssignTo { agent: "a".into(), task: "j".into() },
            DirectiveBody::Forbid { agent: "b".into(), task: "j".into() },
            DirectiveBody::ConditionalAssign { agent: "b".into(), other: "a".into(), task: "a".into() },
            DirectiveBody::Precedence { after: "a".into(), before: "b".into() },
            DirectiveBody::Deadline { task: "j".into(), time: 5 },
            DirectiveBody::ReleaseAfter { task: "b".into(), time: 2 },
            DirectiveBody::RequireTask { task: "b".into() },
            DirectiveBody::DropTask { task: "a".into() },
            DirectiveBody::AgentCap { agent: "a".into(), max: 1 },
        ];
        for (n, body) in bodies.into_iter().enumerate() {
            let d = Directive { id: DirectiveId(n as u32 + 1), source: Utterance::new("", 0), body };
            let ids = compile_directive(&d, &index, &inst).unwrap().install(&mut model);
            let first = model.constraint(ids[0]).unwrap();
            assert_eq!(render_constraint(first, &index, &inst), render_directive(&d));
        }
    }

    #[test]
    fn non_user_rows_are_built_in() {
        let inst = tiny_instance();
        let (mut model, index) = build_base_model(&inst).unwrap();
        let single = model.constraints.iter().find(|c| c.label.starts_with("single[")).unwrap();
        assert_eq!(render_constraint(single, &index, &inst), "built-in rule: task a is served by at most one agent");
        let id = model.add_constraint(LinearExpr::term(1.0, index.x(0, 2)), Sense::Eq, 1.0, Origin::Internal, "probe");
        assert_eq!(render_constraint(model.constraint(id).unwrap(), &index, &inst), "built-in rule: x[a,j] = 1");
    }
}
