use std::path::{Path, PathBuf};

use serde::Serialize;
use tasc_core::world::{instantiate, ScenarioError, ScenarioFile, ScenarioSpec, TaskSite, World};
use thiserror::Error;

/// A validated scenario with its instance already built.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    /// File stem; what sessions refer to.
    pub name: String,
    pub path: PathBuf,
    pub file: ScenarioFile,
    pub spec: ScenarioSpec,
    pub world: World,
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}:{column}: {message}")]
    Parse { path: PathBuf, line: usize, column: usize, message: String },
    #[error("{}", list(.path, .errors))]
    Invalid { path: PathBuf, errors: Vec<ScenarioError> },
}

fn list(path: &Path, errors: &[ScenarioError]) -> String {
    let mut out = format!("{}: {} problem(s)", path.display(), errors.len());
    for e in errors {
        out.push_str(&format!("\n  - {e}"));
    }
    out
}

pub fn parse_scenario(text: &str, path: &Path) -> Result<LoadedScenario, LoadError> {
    let file: ScenarioFile = serde_json::from_str(text).map_err(|e| LoadError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        column: e.column(),
        message: e.to_string().split(" at line ").next().unwrap_or_default().to_string(),
    })?;
    let invalid = |errors| LoadError::Invalid { path: path.to_path_buf(), errors };
    let spec = file.clone().into_spec().map_err(invalid)?;
    let world = instantiate(&spec).map_err(invalid)?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok(LoadedScenario { name, path: path.to_path_buf(), file, spec, world })
}

/// Reads, parses and validates a scenario file, reporting every problem.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<LoadedScenario, LoadError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| LoadError::Io { path: path.to_path_buf(), source })?;
    parse_scenario(&text, path)
}

#[derive(Debug, Clone, Serialize)]
pub struct AgentView {
    pub id: String,
    pub name: String,
    pub spawn: [usize; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct TaskView {
    pub id: String,
    pub name: String,
    pub reward: f64,
    pub duration: f64,
    pub window: [f64; 2],
    pub order: String,
    pub cell: [usize; 2],
    pub access: [usize; 2],
    pub serves: bool,
}

/// Static description of a scenario for clients.
#[derive(Debug, Clone, Serialize)]
pub struct ScenarioDescriptor {
    pub name: String,
    pub title: String,
    pub grid: Vec<String>,
    pub legend: std::collections::BTreeMap<String, String>,
    pub horizon: u32,
    pub agents: Vec<AgentView>,
    pub tasks: Vec<TaskView>,
}

impl LoadedScenario {
    pub fn descriptor(&self) -> ScenarioDescriptor {
        let inst = &self.world.instance;
        let site = |id: &str| -> &TaskSite { self.world.sites.iter().find(|s| s.task == id).unwrap() };
        ScenarioDescriptor {
            name: self.name.clone(),
            title: self.spec.name.clone(),
            grid: self.file.grid.clone(),
            legend: self.file.legend.clone(),
            horizon: self.spec.horizon,
            agents: inst
                .agents
                .iter()
                .zip(&self.spec.layout.spawns)
                .map(|(a, p)| AgentView { id: a.id.clone(), name: a.name.clone(), spawn: [p.x, p.y] })
                .collect(),
            tasks: inst
                .tasks
                .iter()
                .map(|t| {
                    let s = site(&t.id);
                    TaskView {
                        id: t.id.clone(),
                        name: t.name.clone(),
                        reward: t.reward,
                        duration: t.duration,
                        window: [t.earliest, t.latest],
                        order: self.spec.orders[s.order].name.clone(),
                        cell: [s.cell.x, s.cell.y],
                        access: [s.access.x, s.access.y],
                        serves: s.serves,
                    }
                })
                .collect(),
        }
    }
}
