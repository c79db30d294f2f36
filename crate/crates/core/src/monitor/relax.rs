use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::assignment::{decode_solution, ProblemInstance, Schedule};
use crate::directive::{render_constraint, Directive, DirectiveBody, DirectiveId};
use crate::milp::{elastic_relax, slack_objective, ConstraintId, Model, Origin, Sense, SolveConfig, SolveOutcome};

use super::{body_of, solve_checked, MonitorError, SteeredModel};

/// Weight of every unit of slack in the first stage.
const SLACK_WEIGHT: f64 = 1.0;

/// Raw result of the two-stage elastic solve.
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxationSolve {
    /// Only rows with positive slack.
    pub slacks: BTreeMap<ConstraintId, f64>,
    pub total_slack: f64,
    /// Stage-two outcome; values extend the input model's variables.
    pub outcome: SolveOutcome,
}

fn tidy(v: f64, tol: f64) -> f64 {
    if (v - v.round()).abs() <= tol {
        v.round()
    } else {
        v
    }
}

/// Minimises total slack over the `targets`, then re-solves for the original
/// objective with total slack held at that minimum. `Ok(None)` when even
/// unlimited slack cannot restore feasibility.
pub fn relaxation_check(
    model: &Model,
    targets: &[ConstraintId],
    config: &SolveConfig,
) -> Result<Option<RelaxationSolve>, MonitorError> {
    let elastic = elastic_relax(model, targets, SLACK_WEIGHT)?;
    let mut stage1 = elastic.model.clone();
    stage1.objective = slack_objective(&elastic);
    let Some(first) = solve_checked(&stage1, config)? else { return Ok(None) };
    let minimum = first.objective.max(0.0);

    let mut stage2 = elastic.model.clone();
    stage2.objective = model.objective.clone();
    stage2.add_constraint(
        slack_objective(&elastic),
        Sense::Le,
        minimum + config.feasibility_tolerance,
        Origin::Internal,
        "slack_cap",
    );
    let Some(second) = solve_checked(&stage2, config)? else { return Ok(None) };

    let tol = config.integrality_tolerance;
    let mut slacks = BTreeMap::new();
    for (&row, pair) in &elastic.slacks {
        let amount = tidy(pair.amount(&second.values), tol);
        if amount > tol {
            slacks.insert(row, amount);
        }
    }
    let total_slack = tidy(elastic.total_slack(&second.values), tol);
    Ok(Some(RelaxationSolve { slacks, total_slack, outcome: second }))
}

/// The directive after stretching its bound by `amount`, for numeric kinds.
pub fn amend_directive(body: &DirectiveBody, amount: f64) -> Option<DirectiveBody> {
    let up = amount.ceil().max(0.0) as u32;
    match body {
        DirectiveBody::Deadline { task, time } => Some(DirectiveBody::Deadline { task: task.clone(), time: time + up }),
        DirectiveBody::ReleaseAfter { task, time } => {
            Some(DirectiveBody::ReleaseAfter { task: task.clone(), time: time.saturating_sub(up) })
        }
        DirectiveBody::AgentCap { agent, max } => Some(DirectiveBody::AgentCap { agent: agent.clone(), max: max + up }),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxedConstraint {
    pub constraint: ConstraintId,
    pub directive: DirectiveId,
    pub amount: f64,
    /// What the directive would read as with the slack folded in.
    pub amended: Option<DirectiveBody>,
    pub explanation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelaxationReport {
    pub relaxed: Vec<RelaxedConstraint>,
    pub total_slack: f64,
    pub total_penalty: f64,
    pub schedule: Schedule,
}

impl RelaxationReport {
    pub(crate) fn from_solve(
        solve: &RelaxationSolve,
        steered: &SteeredModel,
        accepted: &[Directive],
        instance: &ProblemInstance,
    ) -> Result<Self, MonitorError> {
        let schedule = decode_solution(&solve.outcome, &steered.index, instance)?;
        let mut relaxed = Vec::new();
        for (&row, &amount) in &solve.slacks {
            let con = steered.model.constraint(row).expect("relaxed row exists");
            let Origin::User(directive) = con.origin else { continue };
            let amended = body_of(accepted, directive).and_then(|b| amend_directive(b, amount));
            let original = render_constraint(con, &steered.index, instance);
            let explanation = match &amended {
                Some(body) => format!("\"{original}\" misses by {amount}; it holds as \"{body}\""),
                None => format!("\"{original}\" is violated by {amount}"),
            };
            relaxed.push(RelaxedConstraint { constraint: row, directive, amount, amended, explanation });
        }
        Ok(RelaxationReport {
            relaxed,
            total_slack: solve.total_slack,
            total_penalty: SLACK_WEIGHT * solve.total_slack,
            schedule,
        })
    }
}
