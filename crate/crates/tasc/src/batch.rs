use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tasc_core::directive::{parse_body, render_directive, Directive, DirectiveId, Utterance};
use tasc_core::milp::SolveConfig;
use tasc_core::monitor::{check_and_solve, semantic_check, ConflictFinding, MonitorVerdict};
use tasc_core::session::render_schedule;
use tasc_core::world::execute;
use thiserror::Error;

use crate::scenario::{load_scenario, LoadError};

#[derive(Debug, Clone, Default)]
pub struct BatchOptions {
    pub alpha1: Option<f64>,
    pub alpha2: Option<f64>,
    pub time_limit_secs: Option<f64>,
}

#[derive(Debug, Error)]
pub enum BatchError {
    #[error(transparent)]
    Scenario(#[from] LoadError),
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}", .0.join("\n"))]
    Directives(Vec<String>),
    #[error("{0}")]
    Options(String),
    #[error("{0}")]
    Solve(String),
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectiveLine {
    pub id: DirectiveId,
    pub line: usize,
    pub text: String,
    pub rendered: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct BatchReport {
    pub scenario: String,
    pub directives: Vec<DirectiveLine>,
    pub warnings: Vec<ConflictFinding>,
    pub verdict: MonitorVerdict,
    pub score: Option<f64>,
    pub served: Vec<String>,
    pub completions: BTreeMap<String, u32>,
    pub exit_code: i32,
}

#[derive(Debug, Clone)]
pub struct BatchOutcome {
    pub exit_code: i32,
    pub text: String,
    pub report: BatchReport,
}

pub fn exit_code(verdict: &MonitorVerdict) -> i32 {
    match verdict {
        MonitorVerdict::Pass { .. } => 0,
        MonitorVerdict::RelaxedSolution { .. } => 2,
        MonitorVerdict::AblatedSolution { .. } => 3,
        MonitorVerdict::Unresolvable { .. } | MonitorVerdict::SemanticWarning { .. } => 4,
    }
}

/// Reads directive lines; blank lines and `#` comments are skipped.
fn read_directives(path: &Path, instance: &tasc_core::assignment::ProblemInstance) -> Result<Vec<(usize, Directive)>, BatchError> {
    let text = std::fs::read_to_string(path).map_err(|source| BatchError::Io { path: path.to_path_buf(), source })?;
    let mut out = Vec::new();
    let mut errors = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        match parse_body(line, instance) {
            Ok(body) => {
                let id = DirectiveId(out.len() as u32 + 1);
                out.push((n + 1, Directive { id, source: Utterance::new(line, 0), body }));
            }
            Err(e) => errors.push(format!("{}:{}: {e}", path.display(), n + 1)),
        }
    }
    if errors.is_empty() {
        Ok(out)
    } else {
        Err(BatchError::Directives(errors))
    }
}

/// One unattended solve: parse, check, solve once, replay in the kitchen.
pub fn run_batch(scenario: &Path, directives: Option<&Path>, options: &BatchOptions) -> Result<BatchOutcome, BatchError> {
    let mut loaded = load_scenario(scenario)?;
    let weights = &mut loaded.world.instance.weights;
    for (slot, value) in [(&mut weights.alpha1, options.alpha1), (&mut weights.alpha2, options.alpha2)] {
        if let Some(v) = value {
            if !(v.is_finite() && v >= 0.0) {
                return Err(BatchError::Options(format!("weights must be finite and nonnegative, got {v}")));
            }
            *slot = v;
        }
    }
    loaded.spec.weights = loaded.world.instance.weights;
    let mut config = SolveConfig::default();
    if let Some(t) = options.time_limit_secs {
        if !(t.is_finite() && t > 0.0) {
            return Err(BatchError::Options(format!("time limit must be positive, got {t}")));
        }
        config.time_limit_secs = t;
    }
    let instance = &loaded.world.instance;
    let lines = match directives {
        Some(p) => read_directives(p, instance)?,
        None => Vec::new(),
    };
    let accepted: Vec<Directive> = lines.iter().map(|(_, d)| d.clone()).collect();
    let mut warnings = Vec::new();
    for k in 0..accepted.len() {
        warnings.extend(semantic_check(&accepted[k], &accepted[..k], instance));
    }
    let verdict = check_and_solve(instance, &accepted, &config).map_err(|e| BatchError::Solve(e.to_string()))?;
    let code = exit_code(&verdict);

    let (mut score, mut served, mut completions) = (None, Vec::new(), BTreeMap::new());
    if let Some(schedule) = verdict.schedule() {
        let trace = execute(schedule, &loaded.spec).map_err(|e| BatchError::Solve(e.to_string()))?;
        score = Some(trace.score);
        served = trace.served;
        completions = trace.completions;
    }

    let mut text = format!("scenario: {} ({})\n", loaded.spec.name, loaded.name);
    if accepted.is_empty() {
        text.push_str("directives: none\n");
    } else {
        text.push_str("directives:\n");
        for d in &accepted {
            text.push_str(&format!("  {} {}\n", d.id, render_directive(d)));
        }
    }
    for w in &warnings {
        text.push_str(&format!("warning: {}\n", w.explanation));
    }
    text.push_str(&format!("verdict: {}\n", verdict.name()));
    match &verdict {
        MonitorVerdict::RelaxedSolution { report } => {
            for r in &report.relaxed {
                text.push_str(&format!("relaxed: directive {}: {}\n", r.directive, r.explanation));
            }
            text.push_str(&format!("total slack: {}\n", report.total_slack));
        }
        MonitorVerdict::AblatedSolution { report } => {
            for e in &report.explanations {
                text.push_str(&format!("{e}\n"));
            }
        }
        MonitorVerdict::Unresolvable { reason } => text.push_str(&format!("reason: {reason}\n")),
        _ => {}
    }
    if let Some(schedule) = verdict.schedule() {
        text.push_str(&render_schedule(schedule));
        text.push('\n');
    }
    if let Some(s) = score {
        let dishes = if served.is_empty() { "none".to_string() } else { served.join(", ") };
        text.push_str(&format!("score: {s} (served: {dishes})\n"));
    }

    let report = BatchReport {
        scenario: loaded.name.clone(),
        directives: lines
            .iter()
            .map(|(line, d)| DirectiveLine { id: d.id, line: *line, text: d.source.text.clone(), rendered: render_directive(d) })
            .collect(),
        warnings,
        verdict,
        score,
        served,
        completions,
        exit_code: code,
    };
    Ok(BatchOutcome { exit_code: code, text, report })
}
