use thiserror::Error;

use crate::milp::SolveOutcome;

use super::{AgentRoute, DecisionIndex, ObjectiveBreakdown, ProblemInstance, Schedule, Stop};

/// Slack allowed between solver values and their integral or recomputed
/// counterparts when reading a solution back.
pub const DECODE_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("solver outcome carries no solution")]
    NoSolution,
    #[error("variable `{0}` is not integral")]
    Fractional(String),
    #[error("inconsistent assignment and routing values: {vars:?}")]
    Inconsistent { vars: Vec<String> },
    #[error("recomputed objective {recomputed} disagrees with solver terms {solver}")]
    ObjectiveMismatch { recomputed: f64, solver: f64 },
}

fn binary(outcome: &SolveOutcome, var: crate::milp::VarId, label: impl Fn() -> String) -> Result<bool, DecodeError> {
    let v = outcome.value(var);
    if (v - v.round()).abs() > DECODE_TOLERANCE {
        return Err(DecodeError::Fractional(label()));
    }
    Ok(v.round() >= 1.0)
}

/// Rebuilds routes by following arcs from each agent's start and recomputes
/// the objective breakdown from instance parameters.
pub fn decode_solution(
    outcome: &SolveOutcome,
    index: &DecisionIndex,
    instance: &ProblemInstance,
) -> Result<Schedule, DecodeError> {
    if !outcome.has_solution() {
        return Err(DecodeError::NoSolution);
    }
    let n = instance.tasks.len();
    let x_label = |i: usize, j: usize| format!("x[{},{}]", instance.agents[i].id, instance.tasks[j].id);
    let z_label = |i: usize, from: Option<usize>, to: usize| {
        let f = from.map_or(super::START_ID, |f| instance.tasks[f].id.as_str());
        format!("z[{},{},{}]", instance.agents[i].id, f, instance.tasks[to].id)
    };

    let mut assigned = vec![vec![false; n]; instance.agents.len()];
    for (i, row) in assigned.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = binary(outcome, index.x(i, j), || x_label(i, j))?;
        }
    }
    let mut active_arcs = Vec::new();
    for (&(i, from, to), &z) in &index.arcs {
        if binary(outcome, z, || z_label(i, from, to))? {
            if !assigned[i][to] || from.is_some_and(|f| !assigned[i][f]) {
                return Err(DecodeError::Inconsistent { vars: vec![z_label(i, from, to), x_label(i, to)] });
            }
            active_arcs.push((i, from, to));
        }
    }

    let weights = instance.weights;
    let mut routes = Vec::with_capacity(instance.agents.len());
    for (i, agent) in instance.agents.iter().enumerate() {
        let successor = |from: Option<usize>| -> Result<Option<usize>, DecodeError> {
            let next: Vec<usize> =
                active_arcs.iter().filter(|&&(a, f, _)| a == i && f == from).map(|&(_, _, t)| t).collect();
            match next.as_slice() {
                [] => Ok(None),
                [t] => Ok(Some(*t)),
                many => Err(DecodeError::Inconsistent { vars: many.iter().map(|&t| z_label(i, from, t)).collect() }),
            }
        };
        let mut stops = Vec::new();
        let mut visited = vec![false; n];
        let mut prev: Option<usize> = None;
        while let Some(j) = successor(prev)? {
            if visited[j] {
                return Err(DecodeError::Inconsistent { vars: vec![z_label(i, prev, j)] });
            }
            visited[j] = true;
            let task = &instance.tasks[j];
            let start = outcome.value(index.start[j]);
            let earliness = (task.earliest - start).max(0.0);
            let lateness = (start + task.duration - task.latest).max(0.0);
            stops.push(Stop {
                task: task.id.clone(),
                start,
                earliness,
                lateness,
                travel_cost: instance.costs.get(i, prev, j),
                reward: task.reward,
                penalty: weights.alpha1 * earliness + weights.alpha2 * lateness,
            });
            prev = Some(j);
        }
        let stray: Vec<String> = (0..n).filter(|&j| assigned[i][j] && !visited[j]).map(|j| x_label(i, j)).collect();
        if !stray.is_empty() {
            return Err(DecodeError::Inconsistent { vars: stray });
        }
        routes.push(AgentRoute { agent: agent.id.clone(), stops });
    }

    let mut unassigned = Vec::new();
    for (j, task) in instance.tasks.iter().enumerate() {
        let count = assigned.iter().filter(|row| row[j]).count();
        match count {
            0 => unassigned.push(task.id.clone()),
            1 => {}
            _ => {
                return Err(DecodeError::Inconsistent {
                    vars: (0..instance.agents.len()).filter(|&i| assigned[i][j]).map(|i| x_label(i, j)).collect(),
                })
            }
        }
    }

    let mut schedule = Schedule { routes, unassigned, breakdown: ObjectiveBreakdown::default() };
    schedule.breakdown = objective_breakdown(&schedule);

    // Cross-check against the objective terms as the solver priced them.
    let mut solver = 0.0;
    for &(i, from, to) in &active_arcs {
        solver += instance.costs.get(i, from, to);
    }
    for row in &assigned {
        for (j, &on) in row.iter().enumerate() {
            if on {
                solver -= instance.tasks[j].reward;
            }
        }
    }
    for j in 0..n {
        solver += weights.alpha1 * outcome.value(index.earliness[j]) + weights.alpha2 * outcome.value(index.lateness[j]);
    }
    let net = schedule.breakdown.net;
    if (net - solver).abs() > DECODE_TOLERANCE * (1.0 + net.abs()) {
        return Err(DecodeError::ObjectiveMismatch { recomputed: net, solver });
    }
    Ok(schedule)
}

/// Sums the per-stop accounting: `net = cost - reward + penalty`.
pub fn objective_breakdown(schedule: &Schedule) -> ObjectiveBreakdown {
    let mut b = ObjectiveBreakdown::default();
    for stop in schedule.routes.iter().flat_map(|r| r.stops.iter()) {
        b.travel_cost += stop.travel_cost;
        b.reward += stop.reward;
        b.penalty += stop.penalty;
    }
    b.net = b.travel_cost - b.reward + b.penalty;
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assignment::{build_base_model, AgentSpec, CostParams, TaskSpec, Weights};
    use crate::milp::{SolveStats, SolveStatus};

    fn one_task(reward: f64, window: (f64, f64), alpha2: f64) -> ProblemInstance {
        ProblemInstance {
            agents: vec![AgentSpec { id: "a".into(), name: "a".into(), start: None }],
            tasks: vec![TaskSpec {
                id: "t1".into(),
                name: "t1".into(),
                reward,
                duration: 1.0,
                earliest: window.0,
                latest: window.1,
                location: "L".into(),
            }],
            costs: CostParams::uniform(1, 1, 1.0),
            weights: Weights { alpha1: 1.0, alpha2 },
            horizon: 20.0,
            precedences: vec![],
        }
    }

    fn outcome(model_vars: usize, set: &[(crate::milp::VarId, f64)]) -> SolveOutcome {
        let mut values = vec![0.0; model_vars];
        for &(v, x) in set {
            values[v.0] = x;
        }
        SolveOutcome { status: SolveStatus::Optimal, values, objective: 0.0, proven_optimal: true, stats: SolveStats::default() }
    }

    #[test]
    fn all_zero_is_idle() {
        let inst = one_task(5.0, (0.0, 10.0), 0.0);
        let (model, index) = build_base_model(&inst).unwrap();
        let s = decode_solution(&outcome(model.variables.len(), &[]), &index, &inst).unwrap();
        assert!(s.routes[0].stops.is_empty());
        assert_eq!(s.unassigned, vec!["t1".to_string()]);
        assert_eq!(s.breakdown, ObjectiveBreakdown::default());
    }

    #[test]
    fn single_arc_route() {
        let inst = one_task(5.0, (0.0, 10.0), 0.0);
        let (model, index) = build_base_model(&inst).unwrap();
        let out = outcome(
            model.variables.len(),
            &[(index.x(0, 0), 1.0), (index.z(0, None, 0).unwrap(), 1.0), (index.start[0], 1.0)],
        );
        let s = decode_solution(&out, &index, &inst).unwrap();
        let stop = &s.routes[0].stops[0];
        assert_eq!((stop.task.as_str(), stop.start, stop.earliness, stop.lateness), ("t1", 1.0, 0.0, 0.0));
        assert_eq!(objective_breakdown(&s), ObjectiveBreakdown { travel_cost: 1.0, reward: 5.0, penalty: 0.0, net: -4.0 });
    }

    #[test]
    fn late_completion_is_priced() {
        // Window closes at 2, the task runs 3..4: two units late at alpha2 = 3.
        let inst = one_task(5.0, (0.0, 2.0), 3.0);
        let (model, index) = build_base_model(&inst).unwrap();
        let out = outcome(
            model.variables.len(),
            &[
                (index.x(0, 0), 1.0),
                (index.z(0, None, 0).unwrap(), 1.0),
                (index.start[0], 3.0),
                (index.lateness[0], 2.0),
            ],
        );
        let s = decode_solution(&out, &index, &inst).unwrap();
        assert_eq!(s.routes[0].stops[0].lateness, 2.0);
        assert_eq!(s.breakdown.penalty, 6.0);
    }

    #[test]
    fn arc_without_assignment_is_reported() {
        let inst = one_task(5.0, (0.0, 10.0), 0.0);
        let (model, index) = build_base_model(&inst).unwrap();
        let out = outcome(model.variables.len(), &[(index.z(0, None, 0).unwrap(), 1.0)]);
        match decode_solution(&out, &index, &inst) {
            Err(DecodeError::Inconsistent { vars }) => assert!(vars.contains(&"z[a,0,t1]".to_string())),
            other => panic!("unexpected {other:?}"),
        }
    }
}
