//! Translates directive bodies into oracle restrictions, independently of
//! the compiler under test.

use tasc_core::assignment::ProblemInstance;
use tasc_core::directive::DirectiveBody;

use super::assign_oracle::{self, OracleResult, Restrictions};

pub fn restrictions<'a>(instance: &'a ProblemInstance, bodies: &[DirectiveBody]) -> Restrictions<'a> {
    let agent = |id: &str| instance.agent_index(id).unwrap();
    let task = |id: &str| instance.task_index(id).unwrap();
    let mut r = Restrictions::none(instance);
    let mut checks: Vec<Box<dyn Fn(&[Option<usize>]) -> bool>> = Vec::new();
    for b in bodies {
        match b {
            DirectiveBody::AssignTo { agent: a, task: t } => {
                let (i, j) = (agent(a), task(t));
                checks.push(Box::new(move |x| x[j] == Some(i)));
            }
            DirectiveBody::Forbid { agent: a, task: t } => {
                let (i, j) = (agent(a), task(t));
                checks.push(Box::new(move |x| x[j] != Some(i)));
            }
            DirectiveBody::ConditionalAssign { agent: a, other: o, task: t } => {
                let (i, k, j) = (agent(a), agent(o), task(t));
                checks.push(Box::new(move |x| x[j] != Some(k) || x[j] == Some(i)));
            }
            DirectiveBody::Precedence { after, before } => r.precedences.push((task(after), task(before))),
            DirectiveBody::Deadline { task: t, time } => {
                let j = task(t);
                let hi = *time as i64 - instance.tasks[j].duration as i64;
                r.start_bounds[j].1 = r.start_bounds[j].1.min(hi);
            }
            DirectiveBody::ReleaseAfter { task: t, time } => {
                let j = task(t);
                r.start_bounds[j].0 = r.start_bounds[j].0.max(*time as i64);
            }
            DirectiveBody::RequireTask { task: t } => {
                let j = task(t);
                checks.push(Box::new(move |x| x[j].is_some()));
            }
            DirectiveBody::DropTask { task: t } => {
                let j = task(t);
                checks.push(Box::new(move |x| x[j].is_none()));
            }
            DirectiveBody::AgentCap { agent: a, max } => {
                let (i, m) = (agent(a), *max as usize);
                checks.push(Box::new(move |x| x.iter().filter(|&&v| v == Some(i)).count() <= m));
            }
        }
    }
    r.admissible = Box::new(move |x| checks.iter().all(|c| c(x)));
    r
}

pub fn solve(instance: &ProblemInstance, bodies: &[DirectiveBody]) -> Option<OracleResult> {
    assign_oracle::solve(instance, &restrictions(instance, bodies))
}

/// Stretches a numeric directive by an integer amount.
pub fn stretch(body: &DirectiveBody, by: u32) -> DirectiveBody {
    match body {
        DirectiveBody::Deadline { task, time } => DirectiveBody::Deadline { task: task.clone(), time: time + by },
        DirectiveBody::ReleaseAfter { task, time } => {
            DirectiveBody::ReleaseAfter { task: task.clone(), time: time.saturating_sub(by) }
        }
        DirectiveBody::AgentCap { agent, max } => DirectiveBody::AgentCap { agent: agent.clone(), max: max + by },
        other => other.clone(),
    }
}

/// Least total integer slack over the numeric directives that makes the set
/// feasible, with the oracle optimum at that slack.
pub fn min_slack(instance: &ProblemInstance, bodies: &[DirectiveBody], cap: u32) -> Option<(u32, f64)> {
    let numeric: Vec<usize> = (0..bodies.len()).filter(|&k| bodies[k].is_numeric()).collect();
    for total in 0..=cap * numeric.len() as u32 {
        let mut best: Option<f64> = None;
        let mut split = vec![0u32; numeric.len()];
        loop {
            if split.iter().sum::<u32>() == total {
                let mut trial = bodies.to_vec();
                for (slot, &k) in numeric.iter().enumerate() {
                    trial[k] = stretch(&bodies[k], split[slot]);
                }
                if let Some(r) = solve(instance, &trial) {
                    best = Some(best.map_or(r.objective, |b: f64| b.min(r.objective)));
                }
            }
            let mut k = 0;
            while k < split.len() {
                split[k] += 1;
                if split[k] <= cap {
                    break;
                }
                split[k] = 0;
                k += 1;
            }
            if k == split.len() {
                break;
            }
        }
        if let Some(b) = best {
            return Some((total, b));
        }
        if numeric.is_empty() {
            break;
        }
    }
    None
}
