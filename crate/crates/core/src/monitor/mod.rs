//! Consistency checking for user directives: symbolic conflict rules at
//! submission time, then solve, relax, or ablate at solve time.

mod ablate;
mod relax;
mod semantic;
mod why;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::{
    build_base_model, decode_solution, DecisionIndex, DecodeError, InstanceError, ProblemInstance, Schedule,
};
use crate::directive::{compile_directive, Directive, DirectiveBody, DirectiveId, ParseError};
use crate::milp::{solve_mip, ConstraintId, MilpError, Model, SolveConfig, SolveOutcome, SolveStatus};

pub use ablate::{ablation_check, AblationReport};
pub use relax::{amend_directive, relaxation_check, RelaxationReport, RelaxationSolve, RelaxedConstraint};
pub use semantic::{semantic_check, ConflictFinding, ConflictKind, RuleChecker, SemanticChecker};
pub use why::{counterfactual_why, Explanation, ExplanationKind};

pub use crate::directive::{Polarity, WhyQuery};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MonitorError {
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Entity(#[from] ParseError),
    #[error(transparent)]
    Milp(#[from] MilpError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("solver stopped at its limit after {nodes} nodes without proving a result")]
    SolverLimit { nodes: usize },
    #[error("model is unbounded")]
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum MonitorVerdict {
    Pass { schedule: Schedule },
    SemanticWarning { findings: Vec<ConflictFinding> },
    RelaxedSolution { report: RelaxationReport },
    AblatedSolution { report: AblationReport },
    Unresolvable { reason: String },
}

impl MonitorVerdict {
    pub fn schedule(&self) -> Option<&Schedule> {
        match self {
            MonitorVerdict::Pass { schedule } => Some(schedule),
            MonitorVerdict::RelaxedSolution { report } => Some(&report.schedule),
            MonitorVerdict::AblatedSolution { report } => Some(&report.schedule),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MonitorVerdict::Pass { .. } => "pass",
            MonitorVerdict::SemanticWarning { .. } => "semantic_warning",
            MonitorVerdict::RelaxedSolution { .. } => "relaxed_solution",
            MonitorVerdict::AblatedSolution { .. } => "ablated_solution",
            MonitorVerdict::Unresolvable { .. } => "unresolvable",
        }
    }
}

/// Base model plus the rows of a set of directives.
#[derive(Debug, Clone)]
pub struct SteeredModel {
    pub model: Model,
    pub index: DecisionIndex,
    pub rows: BTreeMap<DirectiveId, Vec<ConstraintId>>,
}

impl SteeredModel {
    pub fn build<'a>(
        instance: &ProblemInstance,
        directives: impl IntoIterator<Item = &'a Directive>,
    ) -> Result<Self, MonitorError> {
        let (mut model, index) = build_base_model(instance)?;
        let mut rows = BTreeMap::new();
        for d in directives {
            let ids = compile_directive(d, &index, instance)?.install(&mut model);
            rows.entry(d.id).or_insert_with(Vec::new).extend(ids);
        }
        Ok(SteeredModel { model, index, rows })
    }

    pub fn directive_of(&self, row: ConstraintId) -> Option<DirectiveId> {
        self.rows.iter().find(|(_, ids)| ids.contains(&row)).map(|(&d, _)| d)
    }
}

/// Solves and maps limits to errors; `Ok(None)` means infeasible.
pub(crate) fn solve_checked(model: &Model, config: &SolveConfig) -> Result<Option<SolveOutcome>, MonitorError> {
    let out = solve_mip(model, config)?;
    match out.status {
        SolveStatus::Optimal => Ok(Some(out)),
        SolveStatus::Infeasible => Ok(None),
        SolveStatus::Unbounded => Err(MonitorError::Unbounded),
        SolveStatus::LimitReached => Err(MonitorError::SolverLimit { nodes: out.stats.nodes }),
    }
}

pub(crate) fn feasible(instance: &ProblemInstance, directives: &[&Directive], config: &SolveConfig) -> Result<bool, MonitorError> {
    let steered = SteeredModel::build(instance, directives.iter().copied())?;
    Ok(solve_checked(&steered.model, config)?.is_some())
}

/// Solves the instance under `accepted`, escalating through relaxation and
/// ablation when the directives admit no solution.
pub fn check_and_solve(
    instance: &ProblemInstance,
    accepted: &[Directive],
    config: &SolveConfig,
) -> Result<MonitorVerdict, MonitorError> {
    match escalate(instance, accepted, config) {
        Err(MonitorError::SolverLimit { nodes }) => Ok(MonitorVerdict::Unresolvable {
            reason: format!("solver limit reached after {nodes} nodes; try a longer time limit"),
        }),
        Err(MonitorError::Unbounded) => Ok(MonitorVerdict::Unresolvable { reason: "model is unbounded".into() }),
        other => other,
    }
}

fn escalate(instance: &ProblemInstance, accepted: &[Directive], config: &SolveConfig) -> Result<MonitorVerdict, MonitorError> {
    let steered = SteeredModel::build(instance, accepted)?;
    if let Some(out) = solve_checked(&steered.model, config)? {
        let schedule = decode_solution(&out, &steered.index, instance)?;
        return Ok(MonitorVerdict::Pass { schedule });
    }

    // Only numeric bounds can be stretched; logical directives go to ablation.
    let targets: Vec<ConstraintId> = accepted
        .iter()
        .filter(|d| d.body.is_numeric())
        .flat_map(|d| steered.rows[&d.id].iter().copied())
        .collect();
    if !targets.is_empty() {
        if let Some(solve) = relaxation_check(&steered.model, &targets, config)? {
            let report = RelaxationReport::from_solve(&solve, &steered, accepted, instance)?;
            return Ok(MonitorVerdict::RelaxedSolution { report });
        }
    }

    Ok(match ablation_check(instance, accepted, config)? {
        Some(report) => MonitorVerdict::AblatedSolution { report },
        None => MonitorVerdict::Unresolvable {
            reason: "no solution exists even without any directives; the scenario itself is inconsistent".into(),
        },
    })
}

pub(crate) fn body_of(accepted: &[Directive], id: DirectiveId) -> Option<&DirectiveBody> {
    accepted.iter().find(|d| d.id == id).map(|d| &d.body)
}
