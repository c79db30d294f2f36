use serde::{Deserialize, Serialize};

use crate::assignment::{DecisionIndex, ProblemInstance};
use crate::milp::{ConstraintId, LinearExpr, Model, Origin, Sense};

use super::{Directive, DirectiveBody, DirectiveId, EntityKind, ParseError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompiledRow {
    pub expr: LinearExpr,
    pub sense: Sense,
    pub rhs: f64,
    pub label: String,
}

/// The rows one directive contributes; all carry `Origin::User(directive)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompiledConstraint {
    pub directive: DirectiveId,
    pub rows: Vec<CompiledRow>,
}

impl CompiledConstraint {
    pub fn install(&self, model: &mut Model) -> Vec<ConstraintId> {
        self.rows
            .iter()
            .map(|r| model.add_constraint(r.expr.clone(), r.sense, r.rhs, Origin::User(self.directive), r.label.clone()))
            .collect()
    }
}

fn agent(instance: &ProblemInstance, id: &str) -> Result<usize, ParseError> {
    instance.agent_index(id).ok_or_else(|| ParseError::unknown(EntityKind::Agent, id, 0, None))
}

fn task(instance: &ProblemInstance, id: &str) -> Result<usize, ParseError> {
    instance.task_index(id).ok_or_else(|| ParseError::unknown(EntityKind::Task, id, 0, None))
}

/// Translates a directive into rows over the decision variables of `index`.
/// Fails only when the directive names entities missing from `instance`.
pub fn compile_directive(
    directive: &Directive,
    index: &DecisionIndex,
    instance: &ProblemInstance,
) -> Result<CompiledConstraint, ParseError> {
    let d = directive.id;
    let row = |expr: LinearExpr, sense: Sense, rhs: f64, what: &str| CompiledRow {
        expr,
        sense,
        rhs,
        label: format!("d{d}:{what}"),
    };
    let rows = match &directive.body {
        DirectiveBody::AssignTo { agent: a, task: t } => {
            let x = index.x(agent(instance, a)?, task(instance, t)?);
            vec![row(LinearExpr::term(1.0, x), Sense::Eq, 1.0, "assign")]
        }
        DirectiveBody::Forbid { agent: a, task: t } => {
            let x = index.x(agent(instance, a)?, task(instance, t)?);
            vec![row(LinearExpr::term(1.0, x), Sense::Eq, 0.0, "forbid")]
        }
        DirectiveBody::ConditionalAssign { agent: a, other: b, task: t } => {
            let j = task(instance, t)?;
            let expr = LinearExpr::term(1.0, index.x(agent(instance, a)?, j)).with(-1.0, index.x(agent(instance, b)?, j));
            vec![row(expr, Sense::Ge, 0.0, "conditional")]
        }
        DirectiveBody::Precedence { after, before } => {
            let (a, b) = (task(instance, after)?, task(instance, before)?);
            let timing = LinearExpr::term(1.0, index.start[a]).with(-1.0, index.start[b]);
            vec![
                row(timing, Sense::Ge, instance.tasks[b].duration, "precedence"),
                row(index.served(a), Sense::Eq, 1.0, "precedence_after_served"),
                row(index.served(b), Sense::Eq, 1.0, "precedence_before_served"),
            ]
        }
        DirectiveBody::Deadline { task: t, time } => {
            let j = task(instance, t)?;
            let rhs = *time as f64 - instance.tasks[j].duration;
            vec![row(LinearExpr::term(1.0, index.start[j]), Sense::Le, rhs, "deadline")]
        }
        DirectiveBody::ReleaseAfter { task: t, time } => {
            let j = task(instance, t)?;
            vec![row(LinearExpr::term(1.0, index.start[j]), Sense::Ge, *time as f64, "release")]
        }
        DirectiveBody::RequireTask { task: t } => {
            vec![row(index.served(task(instance, t)?), Sense::Eq, 1.0, "require")]
        }
        DirectiveBody::DropTask { task: t } => {
            vec![row(index.served(task(instance, t)?), Sense::Eq, 0.0, "drop")]
        }
        DirectiveBody::AgentCap { agent: a, max } => {
            let i = agent(instance, a)?;
            vec![row(LinearExpr::sum(index.assign[i].iter().copied()), Sense::Le, *max as f64, "cap")]
        }
    };
    Ok(CompiledConstraint { directive: d, rows })
}
