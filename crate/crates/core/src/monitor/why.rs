use serde::{Deserialize, Serialize};

use crate::assignment::{decode_solution, ObjectiveBreakdown, ProblemInstance, Schedule};
use crate::directive::{render_directive, render_pre_rule, Directive, DirectiveId, EntityKind, ParseError};
use crate::milp::{elastic_relax, slack_objective, LinearExpr, Origin, Sense, SolveConfig};

use super::ablate::minimal_removal;
use super::{solve_checked, MonitorError, Polarity, SteeredModel, WhyQuery};

/// Objective gaps below this are reported as ties.
const TIE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ExplanationKind {
    /// The counterfactual is infeasible because of these directives or, when
    /// none are to blame, these built-in rules.
    Blocked { directives: Vec<DirectiveId>, rules: Vec<String> },
    /// WhyNot: making the assignment is possible but worse by `delta`.
    Costlier { delta: f64, breakdown: ObjectiveBreakdown },
    /// Why: the assignment beats every plan without it by `-delta`.
    Confirmed { delta: f64, breakdown: ObjectiveBreakdown },
    Tie { delta: f64 },
}

/// `delta` and `breakdown` always read as (plan with the assignment) minus
/// (plan without it).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub query: WhyQuery,
    pub kind: ExplanationKind,
    pub text: String,
}

fn components(b: &ObjectiveBreakdown) -> String {
    let signed = |v: f64| if v < 0.0 { format!("{v}") } else { format!("+{v}") };
    format!(
        "travel cost {}, reward {}, penalty {}",
        signed(b.travel_cost),
        signed(b.reward),
        signed(b.penalty)
    )
}

/// Fixes the queried assignment, re-solves, and explains the difference
/// against the current plan. Never changes `accepted`.
pub fn counterfactual_why(
    query: &WhyQuery,
    instance: &ProblemInstance,
    accepted: &[Directive],
    last_schedule: Option<&Schedule>,
    config: &SolveConfig,
) -> Result<Explanation, MonitorError> {
    let i = instance
        .agent_index(&query.agent)
        .ok_or_else(|| ParseError::unknown(EntityKind::Agent, &query.agent, 0, None))?;
    let j = instance
        .task_index(&query.task)
        .ok_or_else(|| ParseError::unknown(EntityKind::Task, &query.task, 0, None))?;
    let fixed = match query.polarity {
        Polarity::WhyNot => 1.0,
        Polarity::Why => 0.0,
    };
    let build = |subset: &[&Directive]| -> Result<SteeredModel, MonitorError> {
        let mut s = SteeredModel::build(instance, subset.iter().copied())?;
        let x = s.index.x(i, j);
        s.model.add_constraint(LinearExpr::term(1.0, x), Sense::Eq, fixed, Origin::Internal, "counterfactual");
        Ok(s)
    };
    let all: Vec<&Directive> = accepted.iter().collect();
    let (a, t) = (&query.agent, &query.task);

    let cf = build(&all)?;
    if let Some(out) = solve_checked(&cf.model, config)? {
        let alternative = decode_solution(&out, &cf.index, instance)?.breakdown;
        let current = SteeredModel::build(instance, accepted.iter())?;
        let base = match solve_checked(&current.model, config)? {
            Some(o) => decode_solution(&o, &current.index, instance)?.breakdown,
            None => last_schedule.map_or(alternative, |s| s.breakdown),
        };
        let (with, without) = match query.polarity {
            Polarity::WhyNot => (alternative, base),
            Polarity::Why => (base, alternative),
        };
        let breakdown = with.minus(&without);
        let delta = breakdown.net;
        let (kind, text) = if delta.abs() <= TIE_TOLERANCE {
            let text = match query.polarity {
                Polarity::WhyNot => format!("assigning agent {a} to task {t} is possible at no extra cost; the plans tie"),
                Polarity::Why => format!("agent {a} could leave task {t} at no extra cost; the plans tie"),
            };
            (ExplanationKind::Tie { delta: 0.0 }, text)
        } else {
            match query.polarity {
                Polarity::WhyNot => (
                    ExplanationKind::Costlier { delta, breakdown },
                    format!(
                        "assigning agent {a} to task {t} is possible but costlier by {delta} ({})",
                        components(&breakdown)
                    ),
                ),
                Polarity::Why => (
                    ExplanationKind::Confirmed { delta, breakdown },
                    format!(
                        "agent {a} takes task {t} because the best plan without it is costlier by {} ({})",
                        -delta,
                        components(&without.minus(&with))
                    ),
                ),
            }
        };
        return Ok(Explanation { query: query.clone(), kind, text });
    }

    let mut sorted = accepted.to_vec();
    sorted.sort_by_key(|d| d.id);
    let removal = minimal_removal(&sorted, |subset| Ok(solve_checked(&build(subset)?.model, config)?.is_some()))?;
    let lead = match query.polarity {
        Polarity::WhyNot => format!("agent {a} cannot be assigned to task {t}"),
        Polarity::Why => format!("agent {a} cannot be kept off task {t}"),
    };
    let (kind, text) = match removal {
        Some(ids) if !ids.is_empty() => {
            let mut ids = ids;
            ids.sort();
            let cited: Vec<String> = ids
                .iter()
                .map(|id| {
                    let d = sorted.iter().find(|d| d.id == *id).unwrap();
                    format!("directive {id}: \"{}\"", render_directive(d))
                })
                .collect();
            (ExplanationKind::Blocked { directives: ids, rules: vec![] }, format!("{lead} because of {}", cited.join(" and ")))
        }
        _ => {
            let rules = blocking_rules(&build(&[])?, instance, config)?;
            let text = if rules.is_empty() {
                format!("{lead} under the built-in rules")
            } else {
                format!("{lead}: {}", rules.join("; "))
            };
            (ExplanationKind::Blocked { directives: vec![], rules }, text)
        }
    };
    Ok(Explanation { query: query.clone(), kind, text })
}

/// Built-in rows that need the least stretching to admit the counterfactual.
fn blocking_rules(cf: &SteeredModel, instance: &ProblemInstance, config: &SolveConfig) -> Result<Vec<String>, MonitorError> {
    let mut model = cf.model.clone();
    let pre: Vec<_> = model.constraints.iter().filter(|c| c.origin == Origin::Pre).map(|c| c.id).collect();
    for &id in &pre {
        model.constraints[id.0].origin = Origin::Internal;
    }
    let elastic = elastic_relax(&model, &pre, 1.0)?;
    let mut probe = elastic.model.clone();
    probe.objective = slack_objective(&elastic);
    let Some(out) = solve_checked(&probe, config)? else { return Ok(vec![]) };
    Ok(elastic
        .slacks
        .iter()
        .filter(|(_, pair)| pair.amount(&out.values) > config.integrality_tolerance)
        .filter_map(|(id, _)| cf.index.pre_rules.get(id))
        .map(|rule| render_pre_rule(rule, instance))
        .collect())
}
