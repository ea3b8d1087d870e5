//! In-memory session store with one in-flight turn per session and an
//! optional append-only JSON-lines event log per session.

use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::PathBuf;
use std::sync::{Arc, Mutex, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{DialogueError, Engine, EngineConfig, Phase, SessionState, TurnResult};

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("unknown session `{0}`")]
    NotFound(String),
    #[error("another message for this session is still being processed")]
    Busy,
    #[error(transparent)]
    Turn(#[from] DialogueError),
    #[error("event log: {0}")]
    Io(#[from] std::io::Error),
}

/// One line of a session's event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SessionEvent {
    Created { config: EngineConfig },
    Turn { text: String, result: TurnResult },
    Failed { text: String, error: String },
}

struct Entry {
    config: EngineConfig,
    created_at: String,
    committed: RwLock<SessionState>,
    turn: Mutex<()>,
}

pub struct SessionStore {
    sessions: RwLock<HashMap<String, Arc<Entry>>>,
    log_dir: Option<PathBuf>,
}

impl SessionStore {
    pub fn new(log_dir: Option<PathBuf>) -> Self {
        Self {
            sessions: RwLock::new(HashMap::new()),
            log_dir,
        }
    }

    fn append(&self, id: &str, event: &SessionEvent) -> Result<(), StoreError> {
        let Some(dir) = &self.log_dir else {
            return Ok(());
        };
        fs::create_dir_all(dir)?;
        let mut line = serde_json::to_string(event).map_err(std::io::Error::other)?;
        line.push('\n');
        OpenOptions::new()
            .create(true)
            .append(true)
            .open(dir.join(format!("{id}.jsonl")))?
            .write_all(line.as_bytes())?;
        Ok(())
    }

    pub fn create(&self, config: EngineConfig, created_at: &str) -> Result<SessionState, StoreError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let state = SessionState::new(&id, config.max_questions);
        self.append(&id, &SessionEvent::Created { config: config.clone() })?;
        let entry = Arc::new(Entry {
            config,
            created_at: created_at.to_string(),
            committed: RwLock::new(state.clone()),
            turn: Mutex::new(()),
        });
        self.sessions.write().unwrap().insert(id, entry);
        Ok(state)
    }

    fn entry(&self, id: &str) -> Result<Arc<Entry>, StoreError> {
        self.sessions
            .read()
            .unwrap()
            .get(id)
            .cloned()
            .ok_or_else(|| StoreError::NotFound(id.to_string()))
    }

    /// Last committed state; never waits for an in-flight turn.
    pub fn snapshot(&self, id: &str) -> Result<SessionState, StoreError> {
        Ok(self.entry(id)?.committed.read().unwrap().clone())
    }

    pub fn config(&self, id: &str) -> Result<EngineConfig, StoreError> {
        Ok(self.entry(id)?.config.clone())
    }

    pub fn created_at(&self, id: &str) -> Result<String, StoreError> {
        Ok(self.entry(id)?.created_at.clone())
    }

    pub fn len(&self) -> usize {
        self.sessions.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Runs one turn. A second message arriving while one is in flight gets
    /// [`StoreError::Busy`] instead of queueing.
    pub fn send(&self, engine: &Engine, id: &str, text: &str) -> Result<TurnResult, StoreError> {
        let entry = self.entry(id)?;
        let _turn = entry.turn.try_lock().map_err(|_| StoreError::Busy)?;
        let mut state = entry.committed.read().unwrap().clone();
        if state.phase == Phase::Done {
            return Err(DialogueError::SessionDone.into());
        }
        match engine.advance_turn(&mut state, text, &entry.config) {
            Ok(result) => {
                self.append(
                    id,
                    &SessionEvent::Turn {
                        text: text.to_string(),
                        result: result.clone(),
                    },
                )?;
                *entry.committed.write().unwrap() = state;
                Ok(result)
            }
            Err(e) => {
                self.append(
                    id,
                    &SessionEvent::Failed {
                        text: text.to_string(),
                        error: e.to_string(),
                    },
                )?;
                Err(e.into())
            }
        }
    }
}
