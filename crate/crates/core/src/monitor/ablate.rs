use serde::{Deserialize, Serialize};

use crate::assignment::{decode_solution, ProblemInstance, Schedule};
use crate::directive::{render_directive, Directive, DirectiveId};
use crate::milp::SolveConfig;

use super::{solve_checked, MonitorError, SteeredModel};

/// Above this many directives the exact minimum-cardinality search is
/// skipped and the greedy result stands.
const EXACT_LIMIT: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    /// Newest first, the order in which they are taken out.
    pub removed: Vec<DirectiveId>,
    pub surviving: Vec<DirectiveId>,
    pub schedule: Schedule,
    pub explanations: Vec<String>,
}

/// Smallest removal set, newest directives preferred, under the predicate
/// `feasible`. `Ok(None)` when nothing short of removing everything works and
/// even that fails. Directives must be sorted by id.
pub(crate) fn minimal_removal<'a>(
    directives: &'a [Directive],
    mut feasible: impl FnMut(&[&'a Directive]) -> Result<bool, MonitorError>,
) -> Result<Option<Vec<DirectiveId>>, MonitorError> {
    let keep = |removed: &[DirectiveId]| -> Vec<&'a Directive> {
        directives.iter().filter(|d| !removed.contains(&d.id)).collect()
    };
    if feasible(&keep(&[]))? {
        return Ok(Some(vec![]));
    }
    if !feasible(&[])? {
        return Ok(None);
    }

    // LIFO removal until feasible.
    let mut removed: Vec<DirectiveId> = Vec::new();
    for d in directives.iter().rev() {
        removed.push(d.id);
        if feasible(&keep(&removed))? {
            break;
        }
    }
    // Put back whatever fits, oldest first.
    let mut order = removed.clone();
    order.sort();
    for id in order {
        let trial: Vec<DirectiveId> = removed.iter().copied().filter(|&r| r != id).collect();
        if feasible(&keep(&trial))? {
            removed = trial;
        }
    }

    if directives.len() <= EXACT_LIMIT {
        let newest_first: Vec<DirectiveId> = directives.iter().rev().map(|d| d.id).collect();
        'sizes: for k in 1..removed.len() {
            let mut pick: Vec<usize> = (0..k).collect();
            loop {
                let trial: Vec<DirectiveId> = pick.iter().map(|&p| newest_first[p]).collect();
                if feasible(&keep(&trial))? {
                    removed = trial;
                    break 'sizes;
                }
                // Next k-combination in lexicographic order.
                let n = newest_first.len();
                let Some(i) = (0..k).rev().find(|&i| pick[i] < n - k + i) else { break };
                pick[i] += 1;
                for j in i + 1..k {
                    pick[j] = pick[j - 1] + 1;
                }
            }
        }
    }
    removed.sort_by(|a, b| b.cmp(a));
    Ok(Some(removed))
}

/// Drops whole directives until the rest is solvable, keeping as many as
/// possible. `Ok(None)` when the instance is infeasible with no directives.
pub fn ablation_check(
    instance: &ProblemInstance,
    accepted: &[Directive],
    config: &SolveConfig,
) -> Result<Option<AblationReport>, MonitorError> {
    let mut sorted = accepted.to_vec();
    sorted.sort_by_key(|d| d.id);
    let removed = minimal_removal(&sorted, |subset| super::feasible(instance, subset, config))?;
    let Some(removed) = removed else { return Ok(None) };

    let survivors: Vec<&Directive> = sorted.iter().filter(|d| !removed.contains(&d.id)).collect();
    let steered = SteeredModel::build(instance, survivors.iter().copied())?;
    let out = solve_checked(&steered.model, config)?.expect("survivors were checked feasible");
    let schedule = decode_solution(&out, &steered.index, instance)?;
    let explanations = removed
        .iter()
        .map(|id| {
            let d = sorted.iter().find(|d| d.id == *id).unwrap();
            format!("removed directive {id}: \"{}\"", render_directive(d))
        })
        .collect();
    Ok(Some(AblationReport {
        removed,
        surviving: survivors.iter().map(|d| d.id).collect(),
        schedule,
        explanations,
    }))
}
