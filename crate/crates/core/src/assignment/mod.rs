//! The task-assignment and scheduling problem: agents, tasks, travel costs
//! and window penalties, encoded on top of [`crate::milp`].

mod build;
mod decode;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use build::{build_base_model, earliest_starts, DecisionIndex, PreRule, VarRole};
pub use decode::{decode_solution, objective_breakdown, DecodeError, DECODE_TOLERANCE};

/// Reserved identifier of the dummy route start.
pub const START_ID: &str = "0";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub id: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: String,
    pub name: String,
    pub reward: f64,
    pub duration: f64,
    pub earliest: f64,
    pub latest: f64,
    pub location: String,
}

/// Travel cost `k[agent][from][to]`, where `from = None` is the route start.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostParams {
    agents: usize,
    tasks: usize,
    values: Vec<f64>,
}

impl CostParams {
    pub fn from_fn(agents: usize, tasks: usize, mut k: impl FnMut(usize, Option<usize>, usize) -> f64) -> Self {
        let mut values = Vec::with_capacity(agents * (tasks + 1) * tasks);
        for i in 0..agents {
            for from in 0..=tasks {
                for to in 0..tasks {
                    let from = from.checked_sub(1);
                    values.push(if from == Some(to) { 0.0 } else { k(i, from, to) });
                }
            }
        }
        Self { agents, tasks, values }
    }

    pub fn uniform(agents: usize, tasks: usize, cost: f64) -> Self {
        Self::from_fn(agents, tasks, |_, _, _| cost)
    }

    fn offset(&self, agent: usize, from: Option<usize>, to: usize) -> usize {
        let from = from.map_or(0, |f| f + 1);
        (agent * (self.tasks + 1) + from) * self.tasks + to
    }

    pub fn get(&self, agent: usize, from: Option<usize>, to: usize) -> f64 {
        self.values[self.offset(agent, from, to)]
    }

    pub fn set(&mut self, agent: usize, from: Option<usize>, to: usize, cost: f64) {
        let at = self.offset(agent, from, to);
        self.values[at] = cost;
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.agents, self.tasks)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Weights {
    /// Price per time unit of starting before the window opens.
    pub alpha1: f64,
    /// Price per time unit of finishing after the window closes.
    pub alpha2: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self { alpha1: 1.0, alpha2: 1.0 }
    }
}

/// Built-in ordering between two tasks, e.g. consecutive steps of one dish.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskPrecedence {
    pub before: String,
    pub after: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemInstance {
    pub agents: Vec<AgentSpec>,
    pub tasks: Vec<TaskSpec>,
    pub costs: CostParams,
    pub weights: Weights,
    pub horizon: f64,
    #[serde(default)]
    pub precedences: Vec<TaskPrecedence>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("duplicate {kind} id `{id}`")]
    DuplicateId { kind: &'static str, id: String },
    #[error("task id `0` is reserved for the route start")]
    ReservedTaskId,
    #[error("task `{0}` has an invalid window, duration or reward")]
    InvalidTask(String),
    #[error("horizon must be positive and cover every task window")]
    InvalidHorizon,
    #[error("cost table has shape {found:?}, expected {expected:?}")]
    CostShape { expected: (usize, usize), found: (usize, usize) },
    #[error("cost entries must be finite and nonnegative")]
    InvalidCost,
    #[error("weights must be finite and nonnegative")]
    InvalidWeights,
    #[error("precedence references unknown task `{0}`")]
    UnknownPrecedenceTask(String),
    #[error("agent `{agent}` can cycle through tasks {tasks:?} in zero time")]
    ZeroLengthCycle { agent: String, tasks: Vec<String> },
}

impl ProblemInstance {
    pub fn agent_index(&self, id: &str) -> Option<usize> {
        self.agents.iter().position(|a| a.id == id)
    }

    pub fn task_index(&self, id: &str) -> Option<usize> {
        self.tasks.iter().position(|t| t.id == id)
    }

    pub fn task(&self, id: &str) -> Option<&TaskSpec> {
        self.tasks.iter().find(|t| t.id == id)
    }

    /// Largest constant needed to switch off any gated row.
    pub fn big_m(&self) -> f64 {
        let max_duration = self.tasks.iter().map(|t| t.duration).fold(0.0, f64::max);
        self.horizon + max_duration + self.costs.max()
    }

    pub fn validate(&self) -> Result<(), InstanceError> {
        let mut seen = BTreeSet::new();
        for a in &self.agents {
            if !seen.insert(a.id.as_str()) {
                return Err(InstanceError::DuplicateId { kind: "agent", id: a.id.clone() });
            }
        }
        let mut seen = BTreeSet::new();
        for t in &self.tasks {
            if t.id == START_ID {
                return Err(InstanceError::ReservedTaskId);
            }
            if !seen.insert(t.id.as_str()) {
                return Err(InstanceError::DuplicateId { kind: "task", id: t.id.clone() });
            }
            let finite = [t.reward, t.duration, t.earliest, t.latest].iter().all(|v| v.is_finite());
            if !finite || t.reward < 0.0 || t.duration < 0.0 || t.earliest < 0.0 || t.earliest > t.latest {
                return Err(InstanceError::InvalidTask(t.id.clone()));
            }
        }
        let latest = self.tasks.iter().map(|t| t.latest).fold(0.0, f64::max);
        if !(self.horizon > 0.0) || !self.horizon.is_finite() || self.horizon < latest {
            return Err(InstanceError::InvalidHorizon);
        }
        let expected = (self.agents.len(), self.tasks.len());
        if self.costs.dims() != expected || self.costs.values.len() != expected.0 * (expected.1 + 1) * expected.1 {
            return Err(InstanceError::CostShape { expected, found: self.costs.dims() });
        }
        if self.costs.values.iter().any(|k| !k.is_finite() || *k < 0.0) {
            return Err(InstanceError::InvalidCost);
        }
        let w = self.weights;
        if !(w.alpha1.is_finite() && w.alpha2.is_finite() && w.alpha1 >= 0.0 && w.alpha2 >= 0.0) {
            return Err(InstanceError::InvalidWeights);
        }
        for p in &self.precedences {
            for id in [&p.before, &p.after] {
                if self.task_index(id).is_none() {
                    return Err(InstanceError::UnknownPrecedenceTask(id.clone()));
                }
            }
        }
        self.check_zero_cycles()
    }

    /// Time propagation only separates tasks on a cycle when the cycle has
    /// positive length, so zero-length cycles would admit detached subtours.
    fn check_zero_cycles(&self) -> Result<(), InstanceError> {
        let n = self.tasks.len();
        for (i, agent) in self.agents.iter().enumerate() {
            let zero = |a: usize, b: usize| a != b && self.tasks[a].duration + self.costs.get(i, Some(a), b) == 0.0;
            // Colors: 0 unvisited, 1 on stack, 2 done.
            let mut color = vec![0u8; n];
            let mut stack_path = Vec::new();
            fn dfs(
                v: usize,
                n: usize,
                zero: &dyn Fn(usize, usize) -> bool,
                color: &mut [u8],
                path: &mut Vec<usize>,
            ) -> Option<Vec<usize>> {
                color[v] = 1;
                path.push(v);
                for w in 0..n {
                    if !zero(v, w) {
                        continue;
                    }
                    if color[w] == 1 {
                        let start = path.iter().position(|&p| p == w).unwrap_or(0);
                        return Some(path[start..].to_vec());
                    }
                    if color[w] == 0 {
                        if let Some(c) = dfs(w, n, zero, color, path) {
                            return Some(c);
                        }
                    }
                }
                path.pop();
                color[v] = 2;
                None
            }
            for v in 0..n {
                if color[v] == 0 {
                    if let Some(cycle) = dfs(v, n, &zero, &mut color, &mut stack_path) {
                        return Err(InstanceError::ZeroLengthCycle {
                            agent: agent.id.clone(),
                            tasks: cycle.into_iter().map(|t| self.tasks[t].id.clone()).collect(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// One visit on an agent's route.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stop {
    pub task: String,
    pub start: f64,
    pub earliness: f64,
    pub lateness: f64,
    /// Cost of the arc that led here.
    pub travel_cost: f64,
    pub reward: f64,
    /// `alpha1 * earliness + alpha2 * lateness`.
    pub penalty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRoute {
    pub agent: String,
    pub stops: Vec<Stop>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub travel_cost: f64,
    pub reward: f64,
    pub penalty: f64,
    pub net: f64,
}

impl ObjectiveBreakdown {
    pub fn minus(&self, other: &ObjectiveBreakdown) -> ObjectiveBreakdown {
        ObjectiveBreakdown {
            travel_cost: self.travel_cost - other.travel_cost,
            reward: self.reward - other.reward,
            penalty: self.penalty - other.penalty,
            net: self.net - other.net,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub routes: Vec<AgentRoute>,
    pub unassigned: Vec<String>,
    pub breakdown: ObjectiveBreakdown,
}

impl Schedule {
    /// Schedule in which nobody does anything.
    pub fn idle(instance: &ProblemInstance) -> Self {
        Self {
            routes: instance.agents.iter().map(|a| AgentRoute { agent: a.id.clone(), stops: Vec::new() }).collect(),
            unassigned: instance.tasks.iter().map(|t| t.id.clone()).collect(),
            breakdown: ObjectiveBreakdown::default(),
        }
    }

    pub fn agent_for(&self, task: &str) -> Option<&str> {
        self.routes
            .iter()
            .find(|r| r.stops.iter().any(|s| s.task == task))
            .map(|r| r.agent.as_str())
    }

    pub fn is_assigned(&self, agent: &str, task: &str) -> bool {
        self.agent_for(task) == Some(agent)
    }

    pub fn stop(&self, task: &str) -> Option<&Stop> {
        self.routes.iter().flat_map(|r| r.stops.iter()).find(|s| s.task == task)
    }

    pub fn assigned_count(&self) -> usize {
        self.routes.iter().map(|r| r.stops.len()).sum()
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn task(id: &str, reward: f64, duration: f64, window: (f64, f64)) -> TaskSpec {
        TaskSpec {
            id: id.into(),
            name: id.into(),
            reward,
            duration,
            earliest: window.0,
            latest: window.1,
            location: id.into(),
        }
    }

    fn agent(id: &str) -> AgentSpec {
        AgentSpec { id: id.into(), name: id.into(), start: None }
    }

    /// Agents `a`, `b`; tasks `a`, `b`, `j`, unit costs and wide windows.
    pub(crate) fn tiny_instance() -> ProblemInstance {
        ProblemInstance {
            agents: vec![agent("a"), agent("b")],
            tasks: vec![task("a", 5.0, 1.0, (0.0, 20.0)), task("b", 5.0, 1.0, (0.0, 20.0)), task("j", 5.0, 2.0, (0.0, 20.0))],
            costs: CostParams::uniform(2, 3, 1.0),
            weights: Weights::default(),
            horizon: 20.0,
            precedences: vec![],
        }
    }

    #[test]
    fn cost_table_layout() {
        let k = CostParams::from_fn(2, 3, |i, from, to| (i * 100 + from.map_or(9, |f| f) * 10 + to) as f64);
        assert_eq!(k.get(1, None, 2), 192.0);
        assert_eq!(k.get(0, Some(1), 2), 12.0);
        assert_eq!(k.get(0, Some(1), 1), 0.0);
    }

    #[test]
    fn validation_rejects_bad_instances() {
        let good = ProblemInstance {
            agents: vec![agent("a")],
            tasks: vec![task("t", 1.0, 1.0, (0.0, 5.0))],
            costs: CostParams::uniform(1, 1, 1.0),
            weights: Weights::default(),
            horizon: 10.0,
            precedences: vec![],
        };
        assert!(good.validate().is_ok());

        let mut bad = good.clone();
        bad.tasks[0].id = "0".into();
        assert_eq!(bad.validate(), Err(InstanceError::ReservedTaskId));

        let mut bad = good.clone();
        bad.horizon = 4.0;
        assert_eq!(bad.validate(), Err(InstanceError::InvalidHorizon));

        let mut bad = good.clone();
        bad.tasks[0].earliest = 6.0;
        assert!(matches!(bad.validate(), Err(InstanceError::InvalidTask(_))));

        let mut bad = good.clone();
        bad.agents.push(agent("a"));
        bad.costs = CostParams::uniform(2, 1, 1.0);
        assert!(matches!(bad.validate(), Err(InstanceError::DuplicateId { .. })));
    }

    #[test]
    fn zero_length_cycles_are_rejected() {
        let inst = ProblemInstance {
            agents: vec![agent("a")],
            tasks: vec![task("t1", 1.0, 0.0, (0.0, 5.0)), task("t2", 1.0, 0.0, (0.0, 5.0))],
            costs: CostParams::from_fn(1, 2, |_, from, _| if from.is_none() { 1.0 } else { 0.0 }),
            weights: Weights::default(),
            horizon: 10.0,
            precedences: vec![],
        };
        assert!(matches!(inst.validate(), Err(InstanceError::ZeroLengthCycle { .. })));
    }
}
