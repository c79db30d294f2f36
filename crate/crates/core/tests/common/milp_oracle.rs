//! Brute-force references for the MILP engine.

use rand::Rng;
use tasc_core::milp::{solve_lp, LinearExpr, Model, Origin, Sense, SolveStatus, VarKind};

/// Enumerates every 0/1 pattern of the binaries and completes each one with
/// an LP over the continuous remainder. Returns `None` when no pattern is
/// feasible.
pub fn enumerate_binaries(model: &Model) -> Option<f64> {
    let binaries: Vec<usize> =
        model.variables.iter().filter(|v| v.kind == VarKind::Binary).map(|v| v.id.0).collect();
    assert!(binaries.len() <= 16, "enumeration oracle is exponential");
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << binaries.len()) {
        let mut fixed = model.clone();
        for (bit, &j) in binaries.iter().enumerate() {
            let v = f64::from((mask >> bit) & 1);
            fixed.variables[j].kind = VarKind::Continuous;
            fixed.variables[j].lower = v;
            fixed.variables[j].upper = v;
        }
        let lp = solve_lp(&fixed).expect("well-formed model");
        if lp.status == SolveStatus::Optimal && best.is_none_or(|b| lp.objective < b) {
            best = Some(lp.objective);
        }
    }
    best
}

/// Exact optimum of a two-variable LP by intersecting every pair of boundary
/// lines (rows plus variable bounds) and keeping the best feasible vertex.
pub fn two_var_vertex_optimum(model: &Model) -> Option<f64> {
    assert_eq!(model.variables.len(), 2);
    let mut lines: Vec<([f64; 2], f64)> = Vec::new();
    for c in &model.constraints {
        let e = c.expr.normalized();
        lines.push(([e.coefficient(model.variables[0].id), e.coefficient(model.variables[1].id)], c.rhs - e.constant));
    }
    for (k, v) in model.variables.iter().enumerate() {
        let mut a = [0.0; 2];
        a[k] = 1.0;
        lines.push((a, v.lower));
        if v.upper.is_finite() {
            lines.push((a, v.upper));
        }
    }
    let mut best: Option<f64> = None;
    for i in 0..lines.len() {
        for j in i + 1..lines.len() {
            let ([a, b], e) = lines[i];
            let ([c, d], f) = lines[j];
            let det = a * d - b * c;
            if det.abs() < 1e-12 {
                continue;
            }
            let x = [(e * d - b * f) / det, (a * f - e * c) / det];
            let (viol, _) = model.max_violation(&x);
            if viol <= 1e-9 {
                let obj = model.objective.evaluate(&x);
                if best.is_none_or(|b| obj < b) {
                    best = Some(obj);
                }
            }
        }
    }
    best
}

/// Random bounded MILP with `binaries` binary and `continuous` continuous
/// variables and small integer data.
pub fn random_model<R: Rng>(rng: &mut R, binaries: usize, continuous: usize, rows: usize) -> Model {
    let mut m = Model::new();
    for i in 0..binaries {
        m.add_binary(format!("b{i}"));
    }
    for i in 0..continuous {
        m.add_continuous(0.0, f64::from(rng.gen_range(1..=6)), format!("c{i}"));
    }
    let n = binaries + continuous;
    for r in 0..rows {
        let mut e = LinearExpr::new();
        for var in &m.variables.clone() {
            if rng.gen_bool(0.6) {
                e.add_term(f64::from(rng.gen_range(-4..=5)), var.id);
            }
        }
        let sense = match rng.gen_range(0..6) {
            0 => Sense::Ge,
            1 => Sense::Eq,
            _ => Sense::Le,
        };
        let rhs = f64::from(rng.gen_range(-2..=(2 * n as i32 + 2)));
        m.add_constraint(e, sense, rhs, Origin::Pre, format!("r{r}"));
    }
    let mut obj = LinearExpr::new();
    for var in &m.variables.clone() {
        obj.add_term(f64::from(rng.gen_range(-9..=9)), var.id);
    }
    m.objective = obj;
    m
}
