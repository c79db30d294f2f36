//! Bounded-variable two-phase primal simplex on a dense tableau.
//!
//! Every structural variable is shifted to `[0, upper - lower]`, inequality
//! rows receive a slack column and every row receives an artificial column.
//! Nonbasic columns rest at either bound, so binary bounds never become rows.

use super::{Model, SolveConfig, SolveOutcome, SolveStats, SolveStatus, Sense, MilpError};

/// Solves the LP relaxation of `model` (integrality ignored) with default tolerances.
pub fn solve_lp(model: &Model) -> Result<SolveOutcome, MilpError> {
    solve_lp_with(model, &SolveConfig::default())
}

pub fn solve_lp_with(model: &Model, config: &SolveConfig) -> Result<SolveOutcome, MilpError> {
    model.validate()?;
    config.validate()?;
    let form = StandardForm::new(model);
    let lower: Vec<f64> = model.variables.iter().map(|v| v.lower).collect();
    let upper: Vec<f64> = model.variables.iter().map(|v| v.upper).collect();
    let lp = form.solve(&lower, &upper, config);
    let stats = SolveStats { nodes: 0, simplex_iterations: lp.iterations };
    Ok(match lp.status {
        LpStatus::Optimal => SolveOutcome {
            status: SolveStatus::Optimal,
            objective: form.objective_value(&lp.values),
            values: lp.values,
            proven_optimal: true,
            stats,
        },
        LpStatus::Infeasible => SolveOutcome::without_solution(SolveStatus::Infeasible, stats),
        LpStatus::Unbounded => SolveOutcome::without_solution(SolveStatus::Unbounded, stats),
        LpStatus::IterationLimit => SolveOutcome::without_solution(SolveStatus::LimitReached, stats),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub(crate) struct LpResult {
    pub status: LpStatus,
    pub values: Vec<f64>,
    pub iterations: usize,
}

/// Row-wise copy of a model's constraints and objective, reused across
/// branch-and-bound nodes that only differ in variable bounds.
#[derive(Debug, Clone)]
pub(crate) struct StandardForm {
    num_vars: usize,
    rows: Vec<Vec<(usize, f64)>>,
    senses: Vec<Sense>,
    rhs: Vec<f64>,
    cost: Vec<f64>,
    cost_constant: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ColStatus {
    Basic,
    AtLower,
    AtUpper,
}

impl StandardForm {
    pub fn new(model: &Model) -> Self {
        let num_vars = model.variables.len();
        let mut rows = Vec::with_capacity(model.constraints.len());
        let mut senses = Vec::with_capacity(model.constraints.len());
        let mut rhs = Vec::with_capacity(model.constraints.len());
        for con in &model.constraints {
            let expr = con.expr.normalized();
            rows.push(expr.terms.iter().map(|&(c, v)| (v.0, c)).collect());
            senses.push(con.sense);
            rhs.push(con.rhs - expr.constant);
        }
        let objective = model.objective.normalized();
        let mut cost = vec![0.0; num_vars];
        for &(c, v) in &objective.terms {
            cost[v.0] = c;
        }
        Self { num_vars, rows, senses, rhs, cost, cost_constant: objective.constant }
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.cost_constant + self.cost.iter().zip(values).map(|(c, x)| c * x).sum::<f64>()
    }

    pub fn solve(&self, lower: &[f64], upper: &[f64], config: &SolveConfig) -> LpResult {
        if lower.iter().zip(upper).any(|(l, u)| l > u) {
            return LpResult { status: LpStatus::Infeasible, values: Vec::new(), iterations: 0 };
        }
        let mut tableau = Tableau::build(self, lower, upper);
        let mut iterations = 0;

        let phase_one_cost: Vec<f64> =
            (0..tableau.cols).map(|j| if j >= tableau.first_artificial { 1.0 } else { 0.0 }).collect();
        match tableau.optimize(&phase_one_cost, config, &mut iterations) {
            PhaseResult::Optimal => {}
            PhaseResult::IterationLimit => {
                return LpResult { status: LpStatus::IterationLimit, values: Vec::new(), iterations }
            }
            // Phase one is bounded below by zero.
            PhaseResult::Unbounded => unreachable!("phase one objective is bounded"),
        }
        let infeasible = (0..tableau.rows)
            .any(|r| tableau.basis[r] >= tableau.first_artificial && tableau.beta[r] > config.feasibility_tolerance);
        if infeasible {
            return LpResult { status: LpStatus::Infeasible, values: Vec::new(), iterations };
        }
        tableau.expel_artificials(config);

        let mut phase_two_cost = vec![0.0; tableau.cols];
        phase_two_cost[..self.num_vars].copy_from_slice(&self.cost);
        let status = match tableau.optimize(&phase_two_cost, config, &mut iterations) {
            PhaseResult::Optimal => LpStatus::Optimal,
            PhaseResult::Unbounded => LpStatus::Unbounded,
            PhaseResult::IterationLimit => LpStatus::IterationLimit,
        };
        if status != LpStatus::Optimal {
            return LpResult { status, values: Vec::new(), iterations };
        }
        let values = (0..self.num_vars).map(|j| lower[j] + tableau.column_value(j)).collect();
        LpResult { status, values, iterations }
    }
}

enum PhaseResult {
    Optimal,
    Unbounded,
    IterationLimit,
}

struct Tableau {
    rows: usize,
    cols: usize,
    first_artificial: usize,
    /// Row-major `rows x cols`, holds `B^-1 A`.
    a: Vec<f64>,
    beta: Vec<f64>,
    basis: Vec<usize>,
    status: Vec<ColStatus>,
    /// Width of each column's box; `INFINITY` when unbounded above.
    range: Vec<f64>,
    barred: Vec<bool>,
    reduced: Vec<f64>,
}

impl Tableau {
    fn build(form: &StandardForm, lower: &[f64], upper: &[f64]) -> Self {
        let m = form.rows.len();
        let n = form.num_vars;
        let slack_rows: Vec<usize> = (0..m).filter(|&i| form.senses[i] != Sense::Eq).collect();
        let first_artificial = n + slack_rows.len();
        let cols = first_artificial + m;

        let mut a = vec![0.0; m * cols];
        let mut beta = vec![0.0; m];
        for i in 0..m {
            let row = &mut a[i * cols..(i + 1) * cols];
            let mut b = form.rhs[i];
            for &(j, c) in &form.rows[i] {
                row[j] += c;
                b -= c * lower[j];
            }
            beta[i] = b;
        }
        for (k, &i) in slack_rows.iter().enumerate() {
            a[i * cols + n + k] = if form.senses[i] == Sense::Le { 1.0 } else { -1.0 };
        }
        for i in 0..m {
            if beta[i] < 0.0 {
                beta[i] = -beta[i];
                for v in &mut a[i * cols..i * cols + first_artificial] {
                    *v = -*v;
                }
            }
            a[i * cols + first_artificial + i] = 1.0;
        }

        let mut range = vec![f64::INFINITY; cols];
        for j in 0..n {
            range[j] = upper[j] - lower[j];
        }
        let mut status = vec![ColStatus::AtLower; cols];
        let basis: Vec<usize> = (first_artificial..cols).collect();
        for &j in &basis {
            status[j] = ColStatus::Basic;
        }
        Self {
            rows: m,
            cols,
            first_artificial,
            a,
            beta,
            basis,
            status,
            range,
            barred: vec![false; cols],
            reduced: vec![0.0; cols],
        }
    }

    fn column_value(&self, j: usize) -> f64 {
        match self.status[j] {
            ColStatus::AtLower => 0.0,
            ColStatus::AtUpper => self.range[j],
            ColStatus::Basic => {
                let r = self.basis.iter().position(|&b| b == j).expect("basic column in basis");
                self.beta[r]
            }
        }
    }

    fn price(&mut self, cost: &[f64]) {
        self.reduced.copy_from_slice(cost);
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                let row = &self.a[r * self.cols..(r + 1) * self.cols];
                for (d, &v) in self.reduced.iter_mut().zip(row) {
                    *d -= cb * v;
                }
            }
        }
    }

    fn entering(&self, config: &SolveConfig, bland: bool) -> Option<usize> {
        let tol = config.optimality_tolerance;
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.cols {
            if self.barred[j] {
                continue;
            }
            let d = self.reduced[j];
            let score = match self.status[j] {
                ColStatus::AtLower if d < -tol && self.range[j] > 0.0 => -d,
                ColStatus::AtUpper if d > tol => d,
                _ => continue,
            };
            if bland {
                return Some(j);
            }
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((j, score));
            }
        }
        best.map(|(j, _)| j)
    }

    fn optimize(&mut self, cost: &[f64], config: &SolveConfig, iterations: &mut usize) -> PhaseResult {
        self.price(cost);
        let mut degenerate_run = 0usize;
        loop {
            if *iterations >= config.iteration_limit {
                return PhaseResult::IterationLimit;
            }
            let bland = degenerate_run >= config.degenerate_streak;
            let Some(q) = self.entering(config, bland) else {
                return PhaseResult::Optimal;
            };
            *iterations += 1;
            let dir = if self.status[q] == ColStatus::AtLower { 1.0 } else { -1.0 };

            // Ratio test: (step, row, leaving goes to upper).
            let mut step = self.range[q];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_pivot = 0.0f64;
            for r in 0..self.rows {
                let alpha = self.a[r * self.cols + q];
                if alpha.abs() <= config.pivot_tolerance {
                    continue;
                }
                let rate = -dir * alpha;
                let b = self.basis[r];
                let (limit, to_upper) = if rate < 0.0 {
                    (self.beta[r].max(0.0) / -rate, false)
                } else if self.range[b].is_finite() {
                    ((self.range[b] - self.beta[r]).max(0.0) / rate, true)
                } else {
                    continue;
                };
                let better = match leave {
                    None => limit < step,
                    Some((cur, _)) => {
                        if bland {
                            limit < step || (limit == step && self.basis[r] < self.basis[cur])
                        } else {
                            limit < step || (limit == step && alpha.abs() > leave_pivot)
                        }
                    }
                };
                if better {
                    step = limit;
                    leave = Some((r, to_upper));
                    leave_pivot = alpha.abs();
                }
            }
            if step.is_infinite() {
                return PhaseResult::Unbounded;
            }
            if step <= config.feasibility_tolerance {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }

            for r in 0..self.rows {
                let alpha = self.a[r * self.cols + q];
                if alpha != 0.0 {
                    self.beta[r] -= dir * alpha * step;
                }
            }
            match leave {
                None => {
                    self.status[q] =
                        if dir > 0.0 { ColStatus::AtUpper } else { ColStatus::AtLower };
                }
                Some((r, to_upper)) => {
                    let entering_value = if dir > 0.0 { step } else { self.range[q] - step };
                    let old = self.basis[r];
                    self.status[old] = if to_upper { ColStatus::AtUpper } else { ColStatus::AtLower };
                    self.pivot(r, q);
                    self.beta[r] = entering_value;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let cols = self.cols;
        let p = self.a[r * cols + q];
        for v in &mut self.a[r * cols..(r + 1) * cols] {
            *v /= p;
        }
        let (before, rest) = self.a.split_at_mut(r * cols);
        let (pivot_row, after) = rest.split_at_mut(cols);
        for row in before.chunks_exact_mut(cols).chain(after.chunks_exact_mut(cols)) {
            let f = row[q];
            if f != 0.0 {
                for (v, &pr) in row.iter_mut().zip(pivot_row.iter()) {
                    *v -= f * pr;
                }
                row[q] = 0.0;
            }
        }
        let f = self.reduced[q];
        if f != 0.0 {
            for (d, &pr) in self.reduced.iter_mut().zip(pivot_row.iter()) {
                *d -= f * pr;
            }
            self.reduced[q] = 0.0;
        }
        self.basis[r] = q;
        self.status[q] = ColStatus::Basic;
    }

    /// Pivots zero-valued artificials out of the basis and bars every
    /// artificial column from phase two.
    fn expel_artificials(&mut self, config: &SolveConfig) {
        for r in 0..self.rows {
            if self.basis[r] < self.first_artificial {
                continue;
            }
            let row = &self.a[r * self.cols..r * self.cols + self.first_artificial];
            let mut best: Option<(usize, f64)> = None;
            for (j, &v) in row.iter().enumerate() {
                if v.abs() > config.pivot_tolerance && best.is_none_or(|(_, b)| v.abs() > b) {
                    best = Some((j, v.abs()));
                }
            }
            if let Some((j, _)) = best {
                let value = match self.status[j] {
                    ColStatus::AtUpper => self.range[j],
                    _ => 0.0,
                };
                let old = self.basis[r];
                self.status[old] = ColStatus::AtLower;
                self.pivot(r, j);
                self.beta[r] = value;
            }
        }
        for j in self.first_artificial..self.cols {
            self.barred[j] = true;
            self.range[j] = 0.0;
        }
    }
}
