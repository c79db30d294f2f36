mod common;

use common::assign_oracle::{self, random_instance, task, Restrictions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tasc_core::assignment::{
    build_base_model, decode_solution, objective_breakdown, CostParams, ProblemInstance, Schedule, TaskPrecedence,
    Weights,
};
use tasc_core::milp::{solve_mip, Origin, Sense, SolveConfig, SolveStatus};

fn solve(instance: &ProblemInstance) -> (f64, Schedule) {
    let (model, index) = build_base_model(instance).unwrap();
    let out = solve_mip(&model, &SolveConfig::default()).unwrap();
    assert_eq!(out.status, SolveStatus::Optimal);
    let schedule = decode_solution(&out, &index, instance).unwrap();
    (out.objective, schedule)
}

fn two_by_three() -> ProblemInstance {
    let tasks = vec![task("t1", 10.0, 1.0, (0.0, 30.0)), task("t2", 10.0, 1.0, (0.0, 30.0)), task("t3", 10.0, 1.0, (0.0, 30.0))];
    assign_oracle::instance(2, tasks, CostParams::uniform(2, 3, 1.0), Weights::default(), 30.0)
}

#[test]
fn two_agents_three_tasks_match_enumeration() {
    let inst = two_by_three();
    let oracle = assign_oracle::solve(&inst, &Restrictions::none(&inst)).unwrap();
    // Every task is worth taking: three arcs of cost 1 against 30 reward.
    assert_eq!(oracle.objective, -27.0);
    let (objective, schedule) = solve(&inst);
    assert!((objective - oracle.objective).abs() < 1e-6);
    let b = schedule.breakdown;
    assert!((b.travel_cost - oracle.travel).abs() < 1e-6);
    assert!((b.reward - oracle.reward).abs() < 1e-6);
    assert!((b.penalty - oracle.penalty).abs() < 1e-6);
    assert!(schedule.unassigned.is_empty());
}

#[test]
fn single_service_row_for_every_task() {
    let inst = two_by_three();
    let (model, index) = build_base_model(&inst).unwrap();
    for j in 0..inst.tasks.len() {
        let found = model.constraints.iter().any(|c| {
            c.origin == Origin::Pre
                && c.sense == Sense::Le
                && c.rhs == 1.0
                && c.expr.normalized().terms.len() == inst.agents.len()
                && (0..inst.agents.len()).all(|i| c.expr.coefficient(index.x(i, j)) == 1.0)
        });
        assert!(found, "missing single-service row for task {j}");
    }
}

#[test]
fn empty_instance_has_zero_objective() {
    let inst = assign_oracle::instance(2, vec![], CostParams::uniform(2, 0, 0.0), Weights::default(), 10.0);
    let (objective, schedule) = solve(&inst);
    assert_eq!(objective, 0.0);
    assert_eq!(schedule.assigned_count(), 0);
    assert_eq!(objective_breakdown(&schedule).net, 0.0);
}

fn check_invariants(inst: &ProblemInstance, schedule: &Schedule) {
    let b = schedule.breakdown;
    assert!((b.travel_cost - b.reward + b.penalty - b.net).abs() < 1e-6);
    let mut seen = std::collections::BTreeSet::new();
    for (i, route) in schedule.routes.iter().enumerate() {
        let mut prev: Option<usize> = None;
        let mut ready = 0.0;
        for stop in &route.stops {
            assert!(seen.insert(stop.task.clone()), "task served twice");
            let j = inst.task_index(&stop.task).unwrap();
            let k = inst.costs.get(i, prev, j);
            assert!(stop.start >= ready + k - 1e-6, "time propagation broken at {}", stop.task);
            ready = stop.start + inst.tasks[j].duration;
            prev = Some(j);
        }
    }
    for t in &schedule.unassigned {
        assert!(schedule.stop(t).is_none());
    }
}

#[test]
fn random_small_instances_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..60 {
        let agents = rng.gen_range(1..=3);
        let tasks = rng.gen_range(0..=4);
        let inst = random_instance(&mut rng, agents, tasks);
        let oracle = assign_oracle::solve(&inst, &Restrictions::none(&inst)).unwrap();
        let (objective, schedule) = solve(&inst);
        assert!(
            (objective - oracle.objective).abs() < 1e-6,
            "case {case}: solver {objective} vs oracle {}",
            oracle.objective
        );
        assert!((schedule.breakdown.net - oracle.objective).abs() < 1e-6);
        check_invariants(&inst, &schedule);
    }
}

#[test]
fn chained_tasks_respect_order_across_agents() {
    let tasks = vec![task("chop", 0.0, 3.0, (0.0, 20.0)), task("serve", 15.0, 1.0, (0.0, 20.0))];
    let mut inst = assign_oracle::instance(2, tasks, CostParams::uniform(2, 2, 1.0), Weights::default(), 20.0);
    inst.precedences.push(TaskPrecedence { before: "chop".into(), after: "serve".into() });
    let oracle = assign_oracle::solve(&inst, &Restrictions::none(&inst)).unwrap();
    let (objective, schedule) = solve(&inst);
    assert!((objective - oracle.objective).abs() < 1e-6);
    let chop = schedule.stop("chop").expect("serve needs chop");
    let serve = schedule.stop("serve").unwrap();
    assert!(serve.start >= chop.start + 3.0 - 1e-6);
}

#[test]
fn unprofitable_task_is_left_out() {
    let tasks = vec![task("t1", 2.0, 1.0, (0.0, 10.0))];
    let inst = assign_oracle::instance(1, tasks, CostParams::uniform(1, 1, 5.0), Weights::default(), 10.0);
    let (objective, schedule) = solve(&inst);
    assert_eq!(objective, 0.0);
    assert_eq!(schedule.unassigned, vec!["t1".to_string()]);
}
