use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Arc;

use tasc_core::milp::SolveConfig;
use tasc_core::session::UserAction;

use crate::engine::{Engine, EngineError};

/// Line-by-line dialogue on one scenario through an in-process engine.
pub fn run_repl(scenario: &Path, input: impl BufRead, mut output: impl Write) -> Result<(), EngineError> {
    let io = |e: std::io::Error| EngineError::Internal(e.to_string());
    let dir = scenario.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = scenario.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let runtime = tokio::runtime::Builder::new_current_thread().enable_all().build().map_err(io)?;
    let engine = Arc::new(Engine::open(dir, None, SolveConfig::default())?);
    let state = runtime.block_on(engine.create(&name))?;
    let agents: Vec<_> = state.scenario.agents.iter().map(|a| a.id.as_str()).collect();
    let tasks: Vec<_> = state.scenario.tasks.iter().map(|t| t.id.as_str()).collect();
    writeln!(output, "{}: agents {}; tasks {}", state.scenario.title, agents.join(", "), tasks.join(", ")).map_err(io)?;
    writeln!(output, "type directives, \"solve\", \"why wasn't agent A assigned to task T\", or \"quit\"").map_err(io)?;
    write!(output, "> ").map_err(io)?;
    output.flush().map_err(io)?;
    for line in input.lines() {
        let line = line.map_err(io)?;
        let text = line.trim();
        if matches!(text, "quit" | "exit") {
            break;
        }
        if !text.is_empty() {
            let env = runtime.block_on(engine.act(&state.session_id, UserAction::SubmitUtterance { text: text.into() }))?;
            writeln!(output, "{}", env.response.text()).map_err(io)?;
        }
        write!(output, "> ").map_err(io)?;
        output.flush().map_err(io)?;
    }
    writeln!(output).map_err(io)?;
    Ok(())
}
