use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::simplex::{LpStatus, StandardForm};
use super::{MilpError, Model, SolveConfig, SolveOutcome, SolveStats, SolveStatus, VarKind};

/// Open node of the search tree. Ordered so that the heap pops the lowest
/// bound first and, among equal bounds, the oldest node.
struct Node {
    bound: f64,
    seq: u64,
    fixes: Vec<(usize, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then_with(|| other.seq.cmp(&self.seq))
    }
}

struct Incumbent {
    values: Vec<f64>,
    objective: f64,
}

/// Branch-and-bound over the binary variables of `model`.
///
/// Branches on the most fractional binary (lowest ordinal on ties) and
/// explores nodes best-bound first. The result is deterministic for a given
/// model and config unless the wall-clock limit fires.
pub fn solve_mip(model: &Model, config: &SolveConfig) -> Result<SolveOutcome, MilpError> {
    model.validate()?;
    config.validate()?;
    let started = Instant::now();
    let form = StandardForm::new(model);
    let base_lower: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
    let base_upper: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();
    let binaries: Vec<usize> =
        model.variables.iter().filter(|v| v.kind == VarKind::Binary).map(|v| v.id.0).collect();

    let mut stats = SolveStats::default();
    let mut heap = BinaryHeap::new();
    let mut next_seq = 0u64;
    heap.push(Node { bound: f64::NEG_INFINITY, seq: next_seq, fixes: Vec::new() });
    next_seq += 1;

    let mut incumbent: Option<Incumbent> = None;
    let mut limit_hit = false;
    let mut lower = base_lower.clone();
    let mut upper = base_upper.clone();

    while let Some(node) = heap.pop() {
        let cutoff = incumbent.as_ref().map_or(f64::INFINITY, |i| i.objective - config.optimality_tolerance);
        if node.bound >= cutoff {
            continue;
        }
        if stats.nodes >= config.node_limit || started.elapsed().as_secs_f64() > config.time_limit_secs {
            limit_hit = true;
            break;
        }
        stats.nodes += 1;

        lower.copy_from_slice(&base_lower);
        upper.copy_from_slice(&base_upper);
        for &(j, v) in &node.fixes {
            lower[j] = v;
            upper[j] = v;
        }
        let lp = form.solve(&lower, &upper, config);
        stats.simplex_iterations += lp.iterations;
        match lp.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => continue,
            // Binaries are bounded, so an unbounded ray lives in the continuous part.
            LpStatus::Unbounded => return Ok(SolveOutcome::without_solution(SolveStatus::Unbounded, stats)),
            LpStatus::IterationLimit => {
                limit_hit = true;
                continue;
            }
        }
        let objective = form.objective_value(&lp.values);
        if objective >= cutoff {
            continue;
        }

        let mut branch_var: Option<(usize, f64)> = None;
        for &j in &binaries {
            let x = lp.values[j];
            let frac = (x - x.round()).abs();
            if frac > config.integrality_tolerance && branch_var.is_none_or(|(_, f)| frac > f) {
                branch_var = Some((j, frac));
            }
        }

        match branch_var {
            None => {
                let (values, objective) =
                    match polish(&form, &lp.values, &binaries, &lower, &upper, config, &mut stats) {
                        Some(polished) => polished,
                        None => (lp.values, objective),
                    };
                if incumbent.as_ref().is_none_or(|i| objective < i.objective) {
                    incumbent = Some(Incumbent { values, objective });
                }
            }
            Some((j, _)) => {
                for value in [0.0, 1.0] {
                    let mut fixes = node.fixes.clone();
                    fixes.push((j, value));
                    heap.push(Node { bound: objective, seq: next_seq, fixes });
                    next_seq += 1;
                }
            }
        }
    }

    Ok(match incumbent {
        Some(inc) => SolveOutcome {
            status: if limit_hit { SolveStatus::LimitReached } else { SolveStatus::Optimal },
            values: inc.values,
            objective: inc.objective,
            proven_optimal: !limit_hit,
            stats,
        },
        None if limit_hit => SolveOutcome::without_solution(SolveStatus::LimitReached, stats),
        None => SolveOutcome::without_solution(SolveStatus::Infeasible, stats),
    })
}

/// Snaps binaries to exact 0/1 and re-optimizes the continuous remainder so
/// incumbents satisfy their rows without integrality residue.
fn polish(
    form: &StandardForm,
    values: &[f64],
    binaries: &[usize],
    lower: &[f64],
    upper: &[f64],
    config: &SolveConfig,
    stats: &mut SolveStats,
) -> Option<(Vec<f64>, f64)> {
    if binaries.is_empty() {
        return None;
    }
    let mut lo = lower.to_vec();
    let mut hi = upper.to_vec();
    for &j in binaries {
        let v = values[j].round();
        lo[j] = v;
        hi[j] = v;
    }
    let lp = form.solve(&lo, &hi, config);
    stats.simplex_iterations += lp.iterations;
    (lp.status == LpStatus::Optimal).then(|| {
        let objective = form.objective_value(&lp.values);
        (lp.values, objective)
    })
}
