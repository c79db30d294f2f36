//! Mixed-integer linear programs over binary and continuous variables.
//!
//! A [`Model`] is always a minimization. LP relaxations are solved by a
//! bounded-variable two-phase primal simplex ([`solve_lp`]), integrality is
//! enforced by best-bound branch-and-bound ([`solve_mip`]), and selected
//! constraints can be made elastic with [`elastic_relax`].

mod branch;
mod dump;
mod elastic;
mod simplex;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use branch::solve_mip;
pub use elastic::{elastic_relax, slack_objective, ElasticModel, SlackPair};
pub use simplex::{solve_lp, solve_lp_with};

/// Dense ordinal of a variable inside its [`Model`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VarId(pub usize);

/// Dense ordinal of a constraint inside its [`Model`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConstraintId(pub usize);

/// Identifier of a user directive; carried by constraints compiled from it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DirectiveId(pub u32);

impl fmt::Display for VarId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}", self.0)
    }
}

impl fmt::Display for ConstraintId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "c{}", self.0)
    }
}

impl fmt::Display for DirectiveId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Binary,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableDef {
    pub id: VarId,
    pub kind: VarKind,
    pub lower: f64,
    /// `f64::INFINITY` for an unbounded variable.
    pub upper: f64,
    pub label: String,
}

/// Sum of `coefficient * variable` terms plus a constant.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LinearExpr {
    pub terms: Vec<(f64, VarId)>,
    pub constant: f64,
}

impl LinearExpr {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn constant(value: f64) -> Self {
        Self { terms: Vec::new(), constant: value }
    }

    pub fn term(coef: f64, var: VarId) -> Self {
        Self { terms: vec![(coef, var)], constant: 0.0 }
    }

    pub fn sum<I: IntoIterator<Item = VarId>>(vars: I) -> Self {
        Self { terms: vars.into_iter().map(|v| (1.0, v)).collect(), constant: 0.0 }
    }

    pub fn with(mut self, coef: f64, var: VarId) -> Self {
        self.terms.push((coef, var));
        self
    }

    pub fn add_term(&mut self, coef: f64, var: VarId) {
        self.terms.push((coef, var));
    }

    pub fn add_constant(&mut self, value: f64) {
        self.constant += value;
    }

    pub fn extend(&mut self, other: &LinearExpr, scale: f64) {
        self.terms.extend(other.terms.iter().map(|&(c, v)| (c * scale, v)));
        self.constant += other.constant * scale;
    }

    /// Merges duplicate variables, drops zero coefficients and sorts by id.
    pub fn normalized(&self) -> LinearExpr {
        let mut terms = self.terms.clone();
        terms.sort_by_key(|&(_, v)| v);
        let mut merged: Vec<(f64, VarId)> = Vec::with_capacity(terms.len());
        for (c, v) in terms {
            match merged.last_mut() {
                Some((acc, last)) if *last == v => *acc += c,
                _ => merged.push((c, v)),
            }
        }
        merged.retain(|&(c, _)| c != 0.0);
        LinearExpr { terms: merged, constant: self.constant }
    }

    pub fn evaluate(&self, values: &[f64]) -> f64 {
        self.constant + self.terms.iter().map(|&(c, v)| c * values[v.0]).sum::<f64>()
    }

    pub fn coefficient(&self, var: VarId) -> f64 {
        self.terms.iter().filter(|&&(_, v)| v == var).map(|&(c, _)| c).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

impl Sense {
    pub fn symbol(self) -> &'static str {
        match self {
            Sense::Le => "<=",
            Sense::Ge => ">=",
            Sense::Eq => "=",
        }
    }
}

/// Which constraint family a row belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    /// Built-in scheduling rules; never relaxed or removed.
    Pre,
    User(DirectiveId),
    /// Auxiliary rows added by the solver pipeline itself.
    Internal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearConstraint {
    pub id: ConstraintId,
    pub expr: LinearExpr,
    pub sense: Sense,
    pub rhs: f64,
    pub origin: Origin,
    pub label: String,
}

impl LinearConstraint {
    /// Signed violation of the row at `values` (0 when satisfied).
    pub fn violation(&self, values: &[f64]) -> f64 {
        let lhs = self.expr.evaluate(values);
        match self.sense {
            Sense::Le => (lhs - self.rhs).max(0.0),
            Sense::Ge => (self.rhs - lhs).max(0.0),
            Sense::Eq => (lhs - self.rhs).abs(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub variables: Vec<VariableDef>,
    pub constraints: Vec<LinearConstraint>,
    /// Always minimized.
    pub objective: LinearExpr,
}

impl Model {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_binary(&mut self, label: impl Into<String>) -> VarId {
        self.add_variable(VarKind::Binary, 0.0, 1.0, label)
    }

    pub fn add_continuous(&mut self, lower: f64, upper: f64, label: impl Into<String>) -> VarId {
        self.add_variable(VarKind::Continuous, lower, upper, label)
    }

    pub fn add_variable(&mut self, kind: VarKind, lower: f64, upper: f64, label: impl Into<String>) -> VarId {
        let id = VarId(self.variables.len());
        self.variables.push(VariableDef { id, kind, lower, upper, label: label.into() });
        id
    }

    pub fn add_constraint(
        &mut self,
        expr: LinearExpr,
        sense: Sense,
        rhs: f64,
        origin: Origin,
        label: impl Into<String>,
    ) -> ConstraintId {
        let id = ConstraintId(self.constraints.len());
        self.constraints.push(LinearConstraint { id, expr, sense, rhs, origin, label: label.into() });
        id
    }

    pub fn constraint(&self, id: ConstraintId) -> Option<&LinearConstraint> {
        self.constraints.get(id.0)
    }

    pub fn num_binaries(&self) -> usize {
        self.variables.iter().filter(|v| v.kind == VarKind::Binary).count()
    }

    pub fn constraints_with_origin(&self, pred: impl Fn(Origin) -> bool) -> Vec<ConstraintId> {
        self.constraints.iter().filter(|c| pred(c.origin)).map(|c| c.id).collect()
    }

    /// Checks the structural invariants every solver entry point relies on.
    pub fn validate(&self) -> Result<(), MilpError> {
        for (pos, var) in self.variables.iter().enumerate() {
            if var.id.0 != pos {
                return Err(MilpError::NonDenseVariable(var.id));
            }
            if !var.lower.is_finite() || var.upper.is_nan() || var.lower > var.upper {
                return Err(MilpError::InvalidBounds(var.id));
            }
            if var.kind == VarKind::Binary && (var.lower < 0.0 || var.upper > 1.0) {
                return Err(MilpError::InvalidBounds(var.id));
            }
        }
        let check_expr = |expr: &LinearExpr, at: Option<ConstraintId>| -> Result<(), MilpError> {
            if !expr.constant.is_finite() {
                return Err(MilpError::NonFinite(at));
            }
            for &(c, v) in &expr.terms {
                if v.0 >= self.variables.len() {
                    return Err(MilpError::UndefinedVariable(v));
                }
                if !c.is_finite() {
                    return Err(MilpError::NonFinite(at));
                }
            }
            Ok(())
        };
        check_expr(&self.objective, None)?;
        for (pos, con) in self.constraints.iter().enumerate() {
            if con.id.0 != pos {
                return Err(MilpError::NonDenseConstraint(con.id));
            }
            if !con.rhs.is_finite() {
                return Err(MilpError::NonFinite(Some(con.id)));
            }
            check_expr(&con.expr, Some(con.id))?;
        }
        Ok(())
    }

    /// Largest row violation and the largest integrality gap at `values`.
    pub fn max_violation(&self, values: &[f64]) -> (f64, f64) {
        let rows = self.constraints.iter().map(|c| c.violation(values)).fold(0.0, f64::max);
        let bounds = self
            .variables
            .iter()
            .map(|v| (v.lower - values[v.id.0]).max(values[v.id.0] - v.upper).max(0.0))
            .fold(0.0, f64::max);
        let integrality = self
            .variables
            .iter()
            .filter(|v| v.kind == VarKind::Binary)
            .map(|v| {
                let x = values[v.id.0];
                (x - x.round()).abs()
            })
            .fold(0.0, f64::max);
        (rows.max(bounds), integrality)
    }
}

/// Solver tolerances and limits. Every epsilon the solvers use lives here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    pub feasibility_tolerance: f64,
    pub integrality_tolerance: f64,
    /// Reduced-cost threshold for simplex optimality.
    pub optimality_tolerance: f64,
    /// Smallest tableau entry accepted as a pivot.
    pub pivot_tolerance: f64,
    pub node_limit: usize,
    pub time_limit_secs: f64,
    /// Per-LP simplex iteration cap.
    pub iteration_limit: usize,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_streak: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            feasibility_tolerance: 1e-7,
            integrality_tolerance: 1e-6,
            optimality_tolerance: 1e-9,
            pivot_tolerance: 1e-9,
            node_limit: 100_000,
            time_limit_secs: 30.0,
            iteration_limit: 50_000,
            degenerate_streak: 50,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), MilpError> {
        let positive = [
            self.feasibility_tolerance,
            self.integrality_tolerance,
            self.optimality_tolerance,
            self.pivot_tolerance,
            self.time_limit_secs,
        ];
        if positive.iter().any(|v| !(*v > 0.0)) || self.node_limit == 0 || self.iteration_limit == 0 {
            return Err(MilpError::InvalidConfig);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    LimitReached,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveStats {
    pub nodes: usize,
    pub simplex_iterations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOutcome {
    pub status: SolveStatus,
    /// Indexed by [`VarId`]; empty unless a solution is available.
    pub values: Vec<f64>,
    pub objective: f64,
    /// False for `LimitReached` incumbents.
    pub proven_optimal: bool,
    pub stats: SolveStats,
}

impl SolveOutcome {
    pub(crate) fn without_solution(status: SolveStatus, stats: SolveStats) -> Self {
        Self { status, values: Vec::new(), objective: f64::NAN, proven_optimal: false, stats }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }

    pub fn has_solution(&self) -> bool {
        matches!(self.status, SolveStatus::Optimal) || !self.values.is_empty()
    }

    pub fn value(&self, var: VarId) -> f64 {
        self.values[var.0]
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MilpError {
    #[error("expression references undefined variable {0}")]
    UndefinedVariable(VarId),
    #[error("variable {0} is not at its dense position")]
    NonDenseVariable(VarId),
    #[error("constraint {0} is not at its dense position")]
    NonDenseConstraint(ConstraintId),
    #[error("variable {0} has invalid bounds")]
    InvalidBounds(VarId),
    #[error("non-finite coefficient or right-hand side (constraint {0:?})")]
    NonFinite(Option<ConstraintId>),
    #[error("unknown constraint {0}")]
    UnknownConstraint(ConstraintId),
    #[error("constraint {0} is built-in and cannot be relaxed")]
    RelaxPre(ConstraintId),
    #[error("penalty weight must be positive and finite")]
    InvalidPenalty,
    #[error("solver configuration values must be positive")]
    InvalidConfig,
}
