use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::assignment::Schedule;

use super::{instantiate, Pos, ScenarioError, ScenarioSpec, TaskSite};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "activity", content = "task", rename_all = "snake_case")]
pub enum Activity {
    Idle,
    Moving(String),
    Waiting(String),
    Working(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentTick {
    pub agent: String,
    pub pos: Pos,
    pub activity: Activity,
}

/// What every agent does during `[t, t+1)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tick {
    pub t: u32,
    pub agents: Vec<AgentTick>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionTrace {
    pub ticks: Vec<Tick>,
    /// Tick at which each executed task finished.
    pub completions: BTreeMap<String, u32>,
    /// Orders whose last step finished by the horizon.
    pub served: Vec<String>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExecutionError {
    #[error("scenario is invalid: {0:?}")]
    Scenario(Vec<ScenarioError>),
    #[error("schedule names unknown agent `{0}`")]
    UnknownAgent(String),
    #[error("schedule names unknown task `{0}`")]
    UnknownTask(String),
    #[error("agent `{agent}` cannot walk to task `{task}`")]
    Unreachable { agent: String, task: String },
    #[error("execution stalled at tick {0}")]
    Stalled(u32),
}

enum Phase {
    Moving(Vec<Pos>, usize),
    Waiting,
    Working(u32),
    Done,
}

struct Walker<'a> {
    agent: String,
    pos: Pos,
    stops: Vec<(&'a TaskSite, u32, u32)>,
    next: usize,
    phase: Phase,
}

/// Replays a schedule: walk one cell per tick along a shortest path, wait for
/// the scheduled start and for predecessor steps, then work the task.
pub fn execute(schedule: &Schedule, scenario: &ScenarioSpec) -> Result<ExecutionTrace, ExecutionError> {
    let world = instantiate(scenario).map_err(ExecutionError::Scenario)?;
    let layout = &scenario.layout;
    let site = |task: &str| world.sites.iter().find(|s| s.task == task);
    let mut before: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for p in &world.instance.precedences {
        before.entry(p.after.as_str()).or_default().push(p.before.as_str());
    }

    let mut walkers = Vec::new();
    for route in &schedule.routes {
        let i = world.instance.agent_index(&route.agent).ok_or_else(|| ExecutionError::UnknownAgent(route.agent.clone()))?;
        let mut stops = Vec::new();
        for stop in &route.stops {
            let s = site(&stop.task).ok_or_else(|| ExecutionError::UnknownTask(stop.task.clone()))?;
            let t = world.instance.task(&stop.task).unwrap();
            stops.push((s, (stop.start - 1e-6).ceil().max(0.0) as u32, t.duration as u32));
        }
        walkers.push(Walker { agent: route.agent.clone(), pos: layout.spawns[i], stops, next: 0, phase: Phase::Waiting });
    }
    let plan = |w: &mut Walker| -> Result<(), ExecutionError> {
        w.phase = match w.stops.get(w.next) {
            None => Phase::Done,
            Some((s, ..)) => {
                let path = layout
                    .path(w.pos, s.access)
                    .ok_or_else(|| ExecutionError::Unreachable { agent: w.agent.clone(), task: s.task.clone() })?;
                Phase::Moving(path, 0)
            }
        };
        Ok(())
    };
    for w in &mut walkers {
        plan(w)?;
    }

    let total_work: u32 = walkers.iter().flat_map(|w| w.stops.iter().map(|s| s.2)).sum();
    let latest_start = walkers.iter().flat_map(|w| w.stops.iter().map(|s| s.1)).max().unwrap_or(0);
    let cap = latest_start + total_work + (layout.width * layout.height) as u32 * (walkers.len() as u32 + 1) + scenario.horizon;

    let mut completions: BTreeMap<String, u32> = BTreeMap::new();
    let mut ticks = Vec::new();
    let mut t = 0u32;
    loop {
        let mut agents = Vec::with_capacity(walkers.len());
        let done_before: BTreeSet<String> = completions.keys().cloned().collect();
        for w in &mut walkers {
            // Arriving and starting take no time of their own.
            if let Phase::Moving(path, k) = &w.phase {
                if *k + 1 >= path.len() {
                    w.phase = Phase::Waiting;
                }
            }
            if let (Phase::Waiting, Some(&(s, start, duration))) = (&w.phase, w.stops.get(w.next)) {
                let ready = before.get(s.task.as_str()).is_none_or(|b| b.iter().all(|p| done_before.contains(*p)));
                if t >= start && ready {
                    w.phase = Phase::Working(duration);
                }
            }
            let task = w.stops.get(w.next).map(|s| s.0.task.clone());
            let activity = match (&w.phase, task) {
                (Phase::Moving(..), Some(task)) => Activity::Moving(task),
                (Phase::Waiting, Some(task)) => Activity::Waiting(task),
                (Phase::Working(_), Some(task)) => Activity::Working(task),
                _ => Activity::Idle,
            };
            agents.push(AgentTick { agent: w.agent.clone(), pos: w.pos, activity });
        }
        if walkers.iter().all(|w| matches!(w.phase, Phase::Done)) {
            ticks.push(Tick { t, agents });
            break;
        }
        if t > cap {
            return Err(ExecutionError::Stalled(t));
        }
        ticks.push(Tick { t, agents });

        for w in &mut walkers {
            match &mut w.phase {
                Phase::Moving(path, k) => {
                    *k += 1;
                    w.pos = path[*k];
                }
                Phase::Working(left) => {
                    *left -= 1;
                    if *left == 0 {
                        completions.insert(w.stops[w.next].0.task.clone(), t + 1);
                        w.next += 1;
                        plan(w)?;
                    }
                }
                Phase::Waiting | Phase::Done => {}
            }
        }
        t += 1;
    }

    let mut served = Vec::new();
    let mut score = 0.0;
    for s in world.sites.iter().filter(|s| s.serves) {
        if completions.get(&s.task).is_some_and(|&c| c <= scenario.horizon) {
            let order = &scenario.orders[s.order];
            served.push(order.name.clone());
            score += order.value;
        }
    }
    Ok(ExecutionTrace { ticks, completions, served, score })
}
