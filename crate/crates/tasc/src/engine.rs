use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{SystemTime, UNIX_EPOCH};

use tasc_core::milp::SolveConfig;
use tasc_core::session::{handle, restore, snapshot, SessionState, UserAction};
use tasc_core::world::execute;
use thiserror::Error;
use tokio::sync::{broadcast, Mutex, RwLock};

use crate::envelope::{ResponseEnvelope, SolutionEnvelope, StateEnvelope};
use crate::scenario::{load_scenario, LoadedScenario};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("no session `{0}`")]
    UnknownSession(String),
    #[error("no scenario `{0}`")]
    UnknownScenario(String),
    #[error("{0}")]
    BadRequest(String),
    #[error("{0}")]
    Internal(String),
}

pub struct Session {
    pub id: String,
    pub scenario: Arc<LoadedScenario>,
    state: Mutex<SessionState>,
    events: broadcast::Sender<Arc<ResponseEnvelope>>,
}

/// Owns every live session. Actions on one session run one at a time in
/// arrival order; separate sessions proceed independently.
pub struct Engine {
    scenarios_dir: PathBuf,
    sessions_dir: Option<PathBuf>,
    config: SolveConfig,
    sessions: RwLock<HashMap<String, Arc<Session>>>,
}

fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

fn valid_name(name: &str) -> bool {
    !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

impl Engine {
    /// Restores any snapshots found in `sessions_dir`.
    pub fn open(scenarios_dir: impl Into<PathBuf>, sessions_dir: Option<PathBuf>, config: SolveConfig) -> Result<Self, EngineError> {
        let engine = Engine { scenarios_dir: scenarios_dir.into(), sessions_dir, config, sessions: RwLock::new(HashMap::new()) };
        if let Some(dir) = &engine.sessions_dir {
            std::fs::create_dir_all(dir).map_err(|e| EngineError::Internal(format!("{}: {e}", dir.display())))?;
            let mut restored = HashMap::new();
            let mut entries: Vec<_> = std::fs::read_dir(dir)
                .map_err(|e| EngineError::Internal(e.to_string()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            entries.sort();
            for path in entries {
                let id = path.file_stem().unwrap().to_string_lossy().into_owned();
                match engine.restore_one(&id, &path) {
                    Ok(session) => {
                        restored.insert(id, Arc::new(session));
                    }
                    Err(e) => eprintln!("skipping snapshot {}: {e}", path.display()),
                }
            }
            engine.sessions.try_write().expect("not shared yet").extend(restored);
        }
        Ok(engine)
    }

    fn restore_one(&self, id: &str, path: &Path) -> Result<Session, EngineError> {
        let text = std::fs::read_to_string(path).map_err(|e| EngineError::Internal(e.to_string()))?;
        let state = restore(&text).map_err(|e| EngineError::Internal(e.to_string()))?;
        let scenario = self.scenario(&state.scenario_ref)?;
        Ok(Session { id: id.to_string(), scenario, state: Mutex::new(state), events: broadcast::channel(256).0 })
    }

    pub fn scenario(&self, name: &str) -> Result<Arc<LoadedScenario>, EngineError> {
        if !valid_name(name) {
            return Err(EngineError::UnknownScenario(name.to_string()));
        }
        let path = self.scenarios_dir.join(format!("{name}.json"));
        if !path.is_file() {
            return Err(EngineError::UnknownScenario(name.to_string()));
        }
        load_scenario(&path).map(Arc::new).map_err(|e| EngineError::BadRequest(e.to_string()))
    }

    async fn get(&self, id: &str) -> Result<Arc<Session>, EngineError> {
        self.sessions.read().await.get(id).cloned().ok_or_else(|| EngineError::UnknownSession(id.to_string()))
    }

    fn persist(&self, id: &str, state: &SessionState) -> Result<(), EngineError> {
        let Some(dir) = &self.sessions_dir else { return Ok(()) };
        let tmp = dir.join(format!("{id}.json.tmp"));
        let io = |e: std::io::Error| EngineError::Internal(format!("saving session {id}: {e}"));
        std::fs::write(&tmp, snapshot(state)).map_err(io)?;
        std::fs::rename(&tmp, dir.join(format!("{id}.json"))).map_err(io)
    }

    pub async fn create(&self, scenario: &str) -> Result<StateEnvelope, EngineError> {
        let scenario = self.scenario(scenario)?;
        let state = SessionState::new(scenario.name.clone(), scenario.world.instance.clone(), self.config.clone())
            .map_err(|e| EngineError::BadRequest(e.to_string()))?;
        let id = uuid::Uuid::new_v4().simple().to_string();
        self.persist(&id, &state)?;
        let envelope = StateEnvelope::new(&id, &state, scenario.descriptor());
        let session = Session { id: id.clone(), scenario, state: Mutex::new(state), events: broadcast::channel(256).0 };
        self.sessions.write().await.insert(id, Arc::new(session));
        Ok(envelope)
    }

    pub async fn state(&self, id: &str) -> Result<StateEnvelope, EngineError> {
        let session = self.get(id).await?;
        let state = session.state.lock().await;
        Ok(StateEnvelope::new(id, &state, session.scenario.descriptor()))
    }

    pub async fn act(&self, id: &str, action: UserAction) -> Result<ResponseEnvelope, EngineError> {
        let session = self.get(id).await?;
        let mut guard = session.state.lock().await;
        let current = guard.clone();
        let input = action.clone();
        let (next, response) = tokio::task::spawn_blocking(move || handle(&current, input, now_ms()))
            .await
            .map_err(|e| EngineError::Internal(e.to_string()))?;
        self.persist(id, &next)?;
        *guard = next;
        let envelope = ResponseEnvelope {
            session_id: id.to_string(),
            revision: guard.revision,
            action,
            response,
            state: StateEnvelope::new(id, &guard, session.scenario.descriptor()),
        };
        // Sent under the lock so the stream order is the processing order.
        let _ = session.events.send(Arc::new(envelope.clone()));
        Ok(envelope)
    }

    pub async fn solution(&self, id: &str) -> Result<SolutionEnvelope, EngineError> {
        let session = self.get(id).await?;
        let state = session.state.lock().await;
        let execution = match &state.last_schedule {
            Some(s) => Some(execute(s, &session.scenario.spec).map_err(|e| EngineError::Internal(e.to_string()))?),
            None => None,
        };
        Ok(SolutionEnvelope {
            session_id: id.to_string(),
            revision: state.revision,
            verdict: state.last_verdict.as_ref().map(|v| v.name()),
            schedule: state.last_schedule.clone(),
            execution,
        })
    }

    pub async fn subscribe(&self, id: &str) -> Result<broadcast::Receiver<Arc<ResponseEnvelope>>, EngineError> {
        Ok(self.get(id).await?.events.subscribe())
    }

    pub async fn delete(&self, id: &str) -> Result<(), EngineError> {
        let session = self.sessions.write().await.remove(id).ok_or_else(|| EngineError::UnknownSession(id.to_string()))?;
        // Wait out any action still running.
        let _guard = session.state.lock().await;
        if let Some(dir) = &self.sessions_dir {
            let path = dir.join(format!("{id}.json"));
            if path.exists() {
                std::fs::remove_file(path).map_err(|e| EngineError::Internal(e.to_string()))?;
            }
        }
        Ok(())
    }

    pub async fn session_ids(&self) -> Vec<String> {
        let mut ids: Vec<_> = self.sessions.read().await.keys().cloned().collect();
        ids.sort();
        ids
    }
}
