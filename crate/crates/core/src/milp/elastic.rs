use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{ConstraintId, LinearExpr, MilpError, Model, Origin, Sense, VarId};

/// Slack columns attached to one relaxed row. `under` covers a shortfall
/// below the right-hand side, `over` an excess above it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlackPair {
    pub under: Option<VarId>,
    pub over: Option<VarId>,
}

impl SlackPair {
    pub fn vars(&self) -> impl Iterator<Item = VarId> {
        self.under.into_iter().chain(self.over)
    }

    /// Total slack this row absorbs in `values`.
    pub fn amount(&self, values: &[f64]) -> f64 {
        self.vars().map(|v| values[v.0]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElasticModel {
    pub model: Model,
    pub slacks: BTreeMap<ConstraintId, SlackPair>,
}

impl ElasticModel {
    pub fn slack_vars(&self) -> Vec<VarId> {
        self.slacks.values().flat_map(SlackPair::vars).collect()
    }

    pub fn total_slack(&self, values: &[f64]) -> f64 {
        self.slacks.values().map(|s| s.amount(values)).sum()
    }
}

/// Returns a copy of `model` in which every target row gains nonnegative
/// slack on its violated side and the objective pays `penalty` per unit.
pub fn elastic_relax(model: &Model, targets: &[ConstraintId], penalty: f64) -> Result<ElasticModel, MilpError> {
    if !(penalty > 0.0) || !penalty.is_finite() {
        return Err(MilpError::InvalidPenalty);
    }
    for &id in targets {
        let con = model.constraint(id).ok_or(MilpError::UnknownConstraint(id))?;
        if con.origin == Origin::Pre {
            return Err(MilpError::RelaxPre(id));
        }
    }
    let mut relaxed = model.clone();
    let mut slacks = BTreeMap::new();
    let mut ordered: Vec<ConstraintId> = targets.to_vec();
    ordered.sort();
    ordered.dedup();
    for id in ordered {
        let sense = relaxed.constraints[id.0].sense;
        let add = |relaxed: &mut Model, side: &str, coef: f64| {
            let v = relaxed.add_continuous(0.0, f64::INFINITY, format!("slack_{side}[{id}]"));
            relaxed.constraints[id.0].expr.add_term(coef, v);
            relaxed.objective.add_term(penalty, v);
            v
        };
        let pair = match sense {
            Sense::Le => SlackPair { under: None, over: Some(add(&mut relaxed, "over", -1.0)) },
            Sense::Ge => SlackPair { under: Some(add(&mut relaxed, "under", 1.0)), over: None },
            Sense::Eq => {
                let under = add(&mut relaxed, "under", 1.0);
                let over = add(&mut relaxed, "over", -1.0);
                SlackPair { under: Some(under), over: Some(over) }
            }
        };
        slacks.insert(id, pair);
    }
    Ok(ElasticModel { model: relaxed, slacks })
}

/// Objective that only prices the slack columns of `elastic`.
pub fn slack_objective(elastic: &ElasticModel) -> LinearExpr {
    LinearExpr::sum(elastic.slack_vars())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::milp::{solve_mip, DirectiveId, SolveConfig, SolveStatus};

    fn contradictory() -> (Model, ConstraintId, ConstraintId) {
        let mut m = Model::new();
        let y = m.add_binary("y");
        let a = m.add_constraint(LinearExpr::term(1.0, y), Sense::Ge, 1.0, Origin::User(DirectiveId(1)), "a");
        let b = m.add_constraint(LinearExpr::term(1.0, y), Sense::Le, 0.0, Origin::User(DirectiveId(2)), "b");
        (m, a, b)
    }

    #[test]
    fn one_unit_of_slack_restores_feasibility() {
        let (m, a, b) = contradictory();
        let relaxed = elastic_relax(&m, &[a, b], 100.0).unwrap();
        let out = solve_mip(&relaxed.model, &SolveConfig::default()).unwrap();
        assert_eq!(out.status, SolveStatus::Optimal);
        assert!((relaxed.total_slack(&out.values) - 1.0).abs() < 1e-9);
        assert!((out.objective - 100.0).abs() < 1e-9);
        assert_eq!(m.variables.len(), 1, "input model untouched");
    }

    #[test]
    fn pre_rows_are_never_relaxed() {
        let mut m = Model::new();
        let y = m.add_binary("y");
        let c = m.add_constraint(LinearExpr::term(1.0, y), Sense::Le, 0.0, Origin::Pre, "p");
        assert_eq!(elastic_relax(&m, &[c], 1.0).unwrap_err(), MilpError::RelaxPre(c));
        assert_eq!(elastic_relax(&m, &[ConstraintId(9)], 1.0).unwrap_err(), MilpError::UnknownConstraint(ConstraintId(9)));
        assert_eq!(elastic_relax(&m, &[], 0.0).unwrap_err(), MilpError::InvalidPenalty);
    }

    #[test]
    fn equality_gets_two_slacks() {
        let mut m = Model::new();
        let x = m.add_continuous(0.0, 1.0, "x");
        let c = m.add_constraint(LinearExpr::term(1.0, x), Sense::Eq, 3.0, Origin::Internal, "e");
        let relaxed = elastic_relax(&m, &[c], 1.0).unwrap();
        let pair = relaxed.slacks[&c];
        assert!(pair.under.is_some() && pair.over.is_some());
        let out = solve_mip(&relaxed.model, &SolveConfig::default()).unwrap();
        assert!((relaxed.total_slack(&out.values) - 2.0).abs() < 1e-9);
    }
}
