use std::collections::BTreeMap;

use crate::milp::{ConstraintId, LinearExpr, Model, Origin, Sense, VarId};

use super::{InstanceError, ProblemInstance};

/// Which built-in rule a `Pre` row implements. Indices refer to positions in
/// the instance's agent and task lists.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreRule {
    SingleService { task: usize },
    PredecessorLink { agent: usize, task: usize },
    SuccessorLink { agent: usize, task: usize },
    RouteStart { agent: usize },
    TimePropagation { agent: usize, from: Option<usize>, to: usize },
    Earliness { task: usize },
    Lateness { task: usize },
    Completion { task: usize },
    Dependency { before: usize, after: usize },
    ChainTiming { before: usize, after: usize },
}

/// What a model variable stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarRole {
    Assign { agent: usize, task: usize },
    Arc { agent: usize, from: Option<usize>, to: usize },
    Start { task: usize },
    Earliness { task: usize },
    Lateness { task: usize },
    Other,
}

/// Maps problem symbols to model variables.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionIndex {
    /// `x[agent][task]`.
    pub assign: Vec<Vec<VarId>>,
    /// `z[(agent, from, to)]`; `from = None` is the route start.
    pub arcs: BTreeMap<(usize, Option<usize>, usize), VarId>,
    pub start: Vec<VarId>,
    pub earliness: Vec<VarId>,
    pub lateness: Vec<VarId>,
    pub pre_rules: BTreeMap<ConstraintId, PreRule>,
    pub big_m: f64,
    roles: Vec<VarRole>,
}

impl DecisionIndex {
    pub fn x(&self, agent: usize, task: usize) -> VarId {
        self.assign[agent][task]
    }

    pub fn z(&self, agent: usize, from: Option<usize>, to: usize) -> Option<VarId> {
        self.arcs.get(&(agent, from, to)).copied()
    }

    /// `sum_i x[i][task]`: 1 exactly when the task is assigned.
    pub fn served(&self, task: usize) -> LinearExpr {
        LinearExpr::sum(self.assign.iter().map(|row| row[task]))
    }

    pub fn role(&self, var: VarId) -> VarRole {
        self.roles.get(var.0).copied().unwrap_or(VarRole::Other)
    }
}

/// Earliest time each task could start on any route, by shortest paths over
/// `k` plus durations from every agent's start. `INFINITY` when unreachable.
pub fn earliest_starts(instance: &ProblemInstance) -> Vec<f64> {
    let n = instance.tasks.len();
    let mut best = vec![f64::INFINITY; n];
    for i in 0..instance.agents.len() {
        let mut dist: Vec<f64> = (0..n).map(|j| instance.costs.get(i, None, j)).collect();
        // Bellman-Ford style relaxation; weights are nonnegative so n rounds suffice.
        for _ in 0..n {
            let mut changed = false;
            for a in 0..n {
                for b in 0..n {
                    if a == b {
                        continue;
                    }
                    let via = dist[a] + instance.tasks[a].duration + instance.costs.get(i, Some(a), b);
                    if via < dist[b] {
                        dist[b] = via;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        for j in 0..n {
            best[j] = best[j].min(dist[j]);
        }
    }
    best
}

/// Encodes the assignment objective and the built-in rules as a [`Model`].
///
/// Objective: `sum z*k - sum x*rho + sum (alpha1*p1 + alpha2*p2)`. Every row
/// carries [`Origin::Pre`] and is catalogued in [`DecisionIndex::pre_rules`].
pub fn build_base_model(instance: &ProblemInstance) -> Result<(Model, DecisionIndex), InstanceError> {
    instance.validate()?;
    let agents = instance.agents.len();
    let tasks = instance.tasks.len();
    let horizon = instance.horizon;
    let big_m = instance.big_m();
    let mut model = Model::new();
    let mut roles = Vec::new();

    let mut assign = Vec::with_capacity(agents);
    for (i, a) in instance.agents.iter().enumerate() {
        let row: Vec<VarId> = instance
            .tasks
            .iter()
            .enumerate()
            .map(|(j, t)| {
                roles.push(VarRole::Assign { agent: i, task: j });
                model.add_binary(format!("x[{},{}]", a.id, t.id))
            })
            .collect();
        assign.push(row);
    }

    let mut arcs = BTreeMap::new();
    for (i, a) in instance.agents.iter().enumerate() {
        for from in std::iter::once(None).chain((0..tasks).map(Some)) {
            for to in 0..tasks {
                if from == Some(to) {
                    continue;
                }
                let from_id = from.map_or(super::START_ID, |f| instance.tasks[f].id.as_str());
                roles.push(VarRole::Arc { agent: i, from, to });
                let z = model.add_binary(format!("z[{},{},{}]", a.id, from_id, instance.tasks[to].id));
                arcs.insert((i, from, to), z);
            }
        }
    }

    let est = earliest_starts(instance);
    let mut start = Vec::with_capacity(tasks);
    let mut earliness = Vec::with_capacity(tasks);
    let mut lateness = Vec::with_capacity(tasks);
    for (j, t) in instance.tasks.iter().enumerate() {
        roles.push(VarRole::Start { task: j });
        start.push(model.add_continuous(est[j].min(horizon), horizon, format!("s[{}]", t.id)));
        roles.push(VarRole::Earliness { task: j });
        earliness.push(model.add_continuous(0.0, f64::INFINITY, format!("p1[{}]", t.id)));
        roles.push(VarRole::Lateness { task: j });
        lateness.push(model.add_continuous(0.0, f64::INFINITY, format!("p2[{}]", t.id)));
    }

    let mut index = DecisionIndex {
        assign,
        arcs,
        start,
        earliness,
        lateness,
        pre_rules: BTreeMap::new(),
        big_m,
        roles,
    };
    let mut rules = BTreeMap::new();
    let mut pre = |model: &mut Model, expr: LinearExpr, sense: Sense, rhs: f64, rule: PreRule, label: String| {
        let id = model.add_constraint(expr, sense, rhs, Origin::Pre, label);
        rules.insert(id, rule);
    };

    let x = &index.assign;
    let arc_lookup = |i: usize, from: Option<usize>, to: usize| index.arcs[&(i, from, to)];

    for (j, t) in instance.tasks.iter().enumerate() {
        let served = LinearExpr::sum(x.iter().map(|row| row[j]));
        pre(&mut model, served, Sense::Le, 1.0, PreRule::SingleService { task: j }, format!("single[{}]", t.id));
    }

    for (i, a) in instance.agents.iter().enumerate() {
        for (j, t) in instance.tasks.iter().enumerate() {
            let mut into = LinearExpr::new();
            for from in std::iter::once(None).chain((0..tasks).filter(|&f| f != j).map(Some)) {
                into.add_term(1.0, arc_lookup(i, from, j));
            }
            into.add_term(-1.0, x[i][j]);
            pre(&mut model, into, Sense::Eq, 0.0, PreRule::PredecessorLink { agent: i, task: j }, format!("pred[{},{}]", a.id, t.id));

            let mut out = LinearExpr::new();
            for to in (0..tasks).filter(|&to| to != j) {
                out.add_term(1.0, arc_lookup(i, Some(j), to));
            }
            out.add_term(-1.0, x[i][j]);
            pre(&mut model, out, Sense::Le, 0.0, PreRule::SuccessorLink { agent: i, task: j }, format!("succ[{},{}]", a.id, t.id));
        }
        if tasks > 0 {
            let starts = LinearExpr::sum((0..tasks).map(|j| arc_lookup(i, None, j)));
            pre(&mut model, starts, Sense::Le, 1.0, PreRule::RouteStart { agent: i }, format!("route_start[{}]", a.id));
        }
    }

    // s_to >= s_from + d_from + k - M (1 - z), and s_to >= k0 - M (1 - z0).
    for (i, a) in instance.agents.iter().enumerate() {
        for from in std::iter::once(None).chain((0..tasks).map(Some)) {
            for to in 0..tasks {
                if from == Some(to) {
                    continue;
                }
                let z = arc_lookup(i, from, to);
                let k = instance.costs.get(i, from, to);
                let mut e = LinearExpr::term(1.0, index.start[to]).with(-big_m, z);
                let mut rhs = k - big_m;
                if let Some(f) = from {
                    e.add_term(-1.0, index.start[f]);
                    rhs += instance.tasks[f].duration;
                }
                let from_id = from.map_or(super::START_ID, |f| instance.tasks[f].id.as_str());
                pre(
                    &mut model,
                    e,
                    Sense::Ge,
                    rhs,
                    PreRule::TimePropagation { agent: i, from, to },
                    format!("time[{},{},{}]", a.id, from_id, instance.tasks[to].id),
                );
            }
        }
    }

    for (j, t) in instance.tasks.iter().enumerate() {
        let served = LinearExpr::sum(x.iter().map(|row| row[j]));
        // p1 + s - M*served >= e - M
        let mut e = LinearExpr::term(1.0, index.earliness[j]).with(1.0, index.start[j]);
        e.extend(&served, -big_m);
        pre(&mut model, e, Sense::Ge, t.earliest - big_m, PreRule::Earliness { task: j }, format!("early[{}]", t.id));
        // p2 - s - M*served >= d - l - M
        let mut e = LinearExpr::term(1.0, index.lateness[j]).with(-1.0, index.start[j]);
        e.extend(&served, -big_m);
        pre(
            &mut model,
            e,
            Sense::Ge,
            t.duration - t.latest - big_m,
            PreRule::Lateness { task: j },
            format!("late[{}]", t.id),
        );
        // s + M*served <= H - d + M
        let mut e = LinearExpr::term(1.0, index.start[j]);
        e.extend(&served, big_m);
        pre(
            &mut model,
            e,
            Sense::Le,
            horizon - t.duration + big_m,
            PreRule::Completion { task: j },
            format!("complete[{}]", t.id),
        );
    }

    for p in &instance.precedences {
        let before = instance.task_index(&p.before).expect("validated");
        let after = instance.task_index(&p.after).expect("validated");
        let served_before = LinearExpr::sum(x.iter().map(|row| row[before]));
        let served_after = LinearExpr::sum(x.iter().map(|row| row[after]));
        let mut dep = served_after.clone();
        dep.extend(&served_before, -1.0);
        pre(
            &mut model,
            dep,
            Sense::Le,
            0.0,
            PreRule::Dependency { before, after },
            format!("needs[{},{}]", p.after, p.before),
        );
        // s_after - s_before - M*served_after >= d_before - M
        let mut e = LinearExpr::term(1.0, index.start[after]).with(-1.0, index.start[before]);
        e.extend(&served_after, -big_m);
        pre(
            &mut model,
            e,
            Sense::Ge,
            instance.tasks[before].duration - big_m,
            PreRule::ChainTiming { before, after },
            format!("chain[{},{}]", p.before, p.after),
        );
    }

    index.pre_rules = rules;

    let mut objective = LinearExpr::new();
    for (&(i, from, to), &z) in &index.arcs {
        let k = instance.costs.get(i, from, to);
        if k != 0.0 {
            objective.add_term(k, z);
        }
    }
    for row in &index.assign {
        for (j, &v) in row.iter().enumerate() {
            if instance.tasks[j].reward != 0.0 {
                objective.add_term(-instance.tasks[j].reward, v);
            }
        }
    }
    for j in 0..tasks {
        if instance.weights.alpha1 != 0.0 {
            objective.add_term(instance.weights.alpha1, index.earliness[j]);
        }
        if instance.weights.alpha2 != 0.0 {
            objective.add_term(instance.weights.alpha2, index.lateness[j]);
        }
    }
    model.objective = objective;
    Ok((model, index))
}
