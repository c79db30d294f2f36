//! Scenario loading, batch solving, the interactive prompt and the HTTP
//! session service.

pub mod batch;
pub mod engine;
pub mod envelope;
pub mod http;
pub mod repl;
pub mod scenario;

pub use batch::{run_batch, BatchOptions, BatchOutcome};
pub use engine::{Engine, EngineError};
pub use scenario::{load_scenario, LoadError, LoadedScenario};
