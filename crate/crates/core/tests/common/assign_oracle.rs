//! Exhaustive reference solver for small assignment instances with integer
//! data. Enumerates every task-to-agent map and every route order, then
//! picks integer start times (integral optima exist because the timing rows
//! are difference constraints with integer bounds).

use tasc_core::assignment::ProblemInstance;

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub objective: f64,
    pub travel: f64,
    pub reward: f64,
    pub penalty: f64,
    /// Agent per task, `None` when unassigned.
    pub assignment: Vec<Option<usize>>,
}

/// Extra restrictions layered on the base problem, mirroring user directives.
pub struct Restrictions<'a> {
    /// Filter over complete task-to-agent maps.
    pub admissible: Box<dyn Fn(&[Option<usize>]) -> bool + 'a>,
    /// Inclusive bounds on each task's start variable (applied whether or not
    /// the task is assigned, like the compiled rows).
    pub start_bounds: Vec<(i64, i64)>,
    /// `(after, before)`: `s_after >= s_before + d_before`, both assigned.
    pub precedences: Vec<(usize, usize)>,
}

impl<'a> Restrictions<'a> {
    pub fn none(instance: &ProblemInstance) -> Self {
        let h = instance.horizon as i64;
        Restrictions { admissible: Box::new(|_| true), start_bounds: vec![(0, h); instance.tasks.len()], precedences: vec![] }
    }
}

fn int(v: f64) -> i64 {
    assert_eq!(v.fract(), 0.0, "oracle needs integer data, got {v}");
    v as i64
}

/// Lower bound the model places on every start variable: the earliest time
/// any agent could reach the task. Reimplemented with Floyd-Warshall.
fn earliest(instance: &ProblemInstance) -> Vec<i64> {
    let n = instance.tasks.len();
    let mut best = vec![i64::MAX; n];
    for i in 0..instance.agents.len() {
        let mut d = vec![vec![i64::MAX / 4; n]; n];
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    d[a][b] = int(instance.tasks[a].duration) + int(instance.costs.get(i, Some(a), b));
                }
            }
            d[a][a] = 0;
        }
        for m in 0..n {
            for a in 0..n {
                for b in 0..n {
                    d[a][b] = d[a][b].min(d[a][m] + d[m][b]);
                }
            }
        }
        for b in 0..n {
            for a in 0..n {
                best[b] = best[b].min(int(instance.costs.get(i, None, a)) + d[a][b]);
            }
        }
    }
    best
}

fn penalty(instance: &ProblemInstance, j: usize, s: i64) -> f64 {
    let t = &instance.tasks[j];
    let early = (int(t.earliest) - s).max(0) as f64;
    let late = (s + int(t.duration) - int(t.latest)).max(0) as f64;
    instance.weights.alpha1 * early + instance.weights.alpha2 * late
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for (pos, &head) in items.iter().enumerate() {
        let mut rest = items.to_vec();
        rest.remove(pos);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

/// Cheapest penalty for one route with start-time domains, by DP over
/// integer start times. `None` when no timing fits.
fn route_dp(instance: &ProblemInstance, agent: usize, route: &[usize], dom: &[(i64, i64)]) -> Option<f64> {
    let h = int(instance.horizon);
    let mut prev: Option<(usize, Vec<Option<f64>>)> = None;
    for &j in route {
        let d = int(instance.tasks[j].duration);
        let (lo, hi) = (dom[j].0, dom[j].1.min(h - d));
        let mut cur = vec![None; (h + 1) as usize];
        for t in lo.max(0)..=hi {
            let reach = match &prev {
                None => t >= int(instance.costs.get(agent, None, j)),
                Some(_) => true,
            };
            if !reach {
                continue;
            }
            let base = match &prev {
                None => Some(0.0),
                Some((p, f)) => {
                    let gap = int(instance.tasks[*p].duration) + int(instance.costs.get(agent, Some(*p), j));
                    (0..=(t - gap)).filter_map(|u| f.get(u as usize).copied().flatten()).reduce(f64::min)
                }
            };
            if let Some(b) = base {
                cur[t as usize] = Some(b + penalty(instance, j, t));
            }
        }
        prev = Some((j, cur));
    }
    match prev {
        None => Some(0.0),
        Some((_, f)) => f.into_iter().flatten().reduce(f64::min),
    }
}

/// Joint search over start times, used only when cross-route precedences exist.
fn joint_timing(
    instance: &ProblemInstance,
    routes: &[(usize, Vec<usize>)],
    dom: &[(i64, i64)],
    precedences: &[(usize, usize)],
) -> Option<f64> {
    let h = int(instance.horizon);
    let order: Vec<(usize, Option<usize>, usize)> = routes
        .iter()
        .flat_map(|(a, r)| r.iter().enumerate().map(move |(p, &j)| (*a, if p == 0 { None } else { Some(r[p - 1]) }, j)))
        .collect();
    let mut starts = vec![None::<i64>; instance.tasks.len()];
    fn go(
        instance: &ProblemInstance,
        order: &[(usize, Option<usize>, usize)],
        k: usize,
        h: i64,
        dom: &[(i64, i64)],
        precedences: &[(usize, usize)],
        starts: &mut Vec<Option<i64>>,
        best: &mut Option<f64>,
        acc: f64,
    ) {
        if k == order.len() {
            let ok = precedences.iter().all(|&(a, b)| match (starts[a], starts[b]) {
                (Some(sa), Some(sb)) => sa >= sb + int(instance.tasks[b].duration),
                _ => false,
            });
            if ok && best.is_none_or(|b| acc < b) {
                *best = Some(acc);
            }
            return;
        }
        let (agent, from, j) = order[k];
        let d = int(instance.tasks[j].duration);
        let lo = match from {
            None => int(instance.costs.get(agent, None, j)),
            Some(p) => starts[p].unwrap() + int(instance.tasks[p].duration) + int(instance.costs.get(agent, Some(p), j)),
        };
        for t in lo.max(dom[j].0)..=dom[j].1.min(h - d) {
            starts[j] = Some(t);
            go(instance, order, k + 1, h, dom, precedences, starts, best, acc + penalty(instance, j, t));
        }
        starts[j] = None;
    }
    let mut best = None;
    go(instance, &order, 0, h, dom, precedences, &mut starts, &mut best, 0.0);
    best
}

pub fn solve(instance: &ProblemInstance, restrictions: &Restrictions) -> Option<OracleResult> {
    let n = instance.tasks.len();
    let r = instance.agents.len();
    let h = int(instance.horizon);
    let est = earliest(instance);
    let dom: Vec<(i64, i64)> = (0..n)
        .map(|j| {
            let (lo, hi) = restrictions.start_bounds[j];
            (lo.max(est[j].min(h)).max(0), hi.min(h))
        })
        .collect();
    if dom.iter().any(|&(lo, hi)| lo > hi) {
        return None;
    }
    let chains: Vec<(usize, usize)> = instance
        .precedences
        .iter()
        .map(|p| (instance.task_index(&p.after).unwrap(), instance.task_index(&p.before).unwrap()))
        .collect();

    let mut best: Option<OracleResult> = None;
    let mut assignment = vec![None; n];
    let total = (r + 1).pow(n as u32);
    for code in 0..total {
        let mut c = code;
        for slot in assignment.iter_mut() {
            let v = c % (r + 1);
            c /= r + 1;
            *slot = if v == 0 { None } else { Some(v - 1) };
        }
        if !(restrictions.admissible)(&assignment) {
            continue;
        }
        // User precedences need both tasks served; chains need `before` whenever `after` is.
        if restrictions.precedences.iter().any(|&(a, b)| assignment[a].is_none() || assignment[b].is_none()) {
            continue;
        }
        if chains.iter().any(|&(a, b)| assignment[a].is_some() && assignment[b].is_none()) {
            continue;
        }
        let mut precedences = restrictions.precedences.clone();
        precedences.extend(chains.iter().copied().filter(|&(a, _)| assignment[a].is_some()));

        let reward: f64 = (0..n).filter(|&j| assignment[j].is_some()).map(|j| instance.tasks[j].reward).sum();
        let per_agent: Vec<Vec<usize>> =
            (0..r).map(|i| (0..n).filter(|&j| assignment[j] == Some(i)).collect()).collect();
        let orders: Vec<Vec<Vec<usize>>> = per_agent.iter().map(|t| permutations(t)).collect();
        let mut pick = vec![0usize; r];
        loop {
            let routes: Vec<(usize, Vec<usize>)> = (0..r).map(|i| (i, orders[i][pick[i]].clone())).collect();
            let travel: f64 = routes
                .iter()
                .map(|(i, route)| {
                    route
                        .iter()
                        .enumerate()
                        .map(|(p, &j)| instance.costs.get(*i, if p == 0 { None } else { Some(route[p - 1]) }, j))
                        .sum::<f64>()
                })
                .sum();
            let pen = if precedences.is_empty() {
                routes.iter().map(|(i, route)| route_dp(instance, *i, route, &dom)).sum::<Option<f64>>()
            } else {
                joint_timing(instance, &routes, &dom, &precedences)
            };
            if let Some(pen) = pen {
                let objective = travel - reward + pen;
                if best.as_ref().is_none_or(|b| objective < b.objective - 1e-12) {
                    best = Some(OracleResult { objective, travel, reward, penalty: pen, assignment: assignment.clone() });
                }
            }
            let mut k = 0;
            while k < r {
                pick[k] += 1;
                if pick[k] < orders[k].len() {
                    break;
                }
                pick[k] = 0;
                k += 1;
            }
            if k == r {
                break;
            }
        }
    }
    best
}

use rand::Rng;
use tasc_core::assignment::{AgentSpec, CostParams, TaskSpec, Weights};

pub fn instance(agents: usize, tasks: Vec<TaskSpec>, costs: CostParams, weights: Weights, horizon: f64) -> ProblemInstance {
    ProblemInstance {
        agents: (0..agents)
            .map(|i| AgentSpec { id: format!("a{}", i + 1), name: format!("agent {}", i + 1), start: None })
            .collect(),
        tasks,
        costs,
        weights,
        horizon,
        precedences: vec![],
    }
}

pub fn task(id: &str, reward: f64, duration: f64, window: (f64, f64)) -> TaskSpec {
    TaskSpec {
        id: id.into(),
        name: id.into(),
        reward,
        duration,
        earliest: window.0,
        latest: window.1,
        location: format!("loc_{id}"),
    }
}

/// Small integer instance: rewards 0..=12, durations 1..=3, costs 0..=5,
/// windows inside a horizon of 12.
pub fn random_instance(rng: &mut impl Rng, agents: usize, tasks: usize) -> ProblemInstance {
    let horizon = 12.0;
    let specs = (0..tasks)
        .map(|j| {
            let e = rng.gen_range(0..=8) as f64;
            let l = (e + rng.gen_range(0..=6) as f64).min(horizon);
            task(&format!("t{}", j + 1), rng.gen_range(0..=12) as f64, rng.gen_range(1..=3) as f64, (e, l))
        })
        .collect();
    let costs = CostParams::from_fn(agents, tasks, |_, _, _| rng.gen_range(0..=5) as f64);
    let weights = Weights { alpha1: rng.gen_range(0..=2) as f64, alpha2: rng.gen_range(0..=3) as f64 };
    instance(agents, specs, costs, weights, horizon)
}
