//! Editable scene sessions: one serialized writer per session, revision
//! checks, change events and on-disk persistence after every command.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use majutsu_core::edit::{apply_command, redo, undo, Diff, EditCommand, EditError};
use majutsu_core::scene::{load_document_from_path, save_document_to_dir, SceneDocument, SceneError};
use serde::{Deserialize, Serialize};
use tokio::sync::{watch, Mutex, RwLock};

use crate::pipeline::SCENE_FILE;

/// One change notification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub revision: u64,
    /// `created`, `apply`, `undo`, `redo`, or `snapshot` when the detailed
    /// history is unavailable (after a restart) and clients should refetch.
    pub action: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
    #[serde(default)]
    pub diff: Diff,
}

#[derive(Debug)]
pub enum SessionError {
    /// Client's base revision is not the current one.
    Conflict { expected: u64, current: u64 },
    Edit(EditError),
    Persist(String),
}

pub enum Mutation {
    Apply(EditCommand),
    Undo,
    Redo,
}

#[derive(Clone, Debug, Serialize)]
pub struct CommandOutcome {
    pub revision: u64,
    pub diff: Diff,
    pub action: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub command: Option<String>,
}

pub struct SessionState {
    pub doc: SceneDocument,
    pub events: Vec<Event>,
}

pub struct Session {
    pub id: String,
    state: Mutex<SessionState>,
    revision: watch::Sender<u64>,
    dir: Option<PathBuf>,
}

fn persist(dir: &Path, doc: &SceneDocument) -> Result<(), String> {
    let tmp = format!("{SCENE_FILE}.tmp");
    save_document_to_dir(doc, dir, &tmp).map_err(|e| e.to_string())?;
    std::fs::rename(dir.join(&tmp), dir.join(SCENE_FILE)).map_err(|e| e.to_string())
}

impl Session {
    fn new(id: String, doc: SceneDocument, dir: Option<PathBuf>, created: bool) -> Self {
        let rev = doc.revision;
        let events = if created {
            vec![Event {
                revision: rev,
                action: "created".into(),
                command: None,
                diff: Diff {
                    revision: rev,
                    ..Diff::default()
                },
            }]
        } else {
            Vec::new()
        };
        Session {
            id,
            state: Mutex::new(SessionState { doc, events }),
            revision: watch::channel(rev).0,
            dir,
        }
    }

    pub fn revision(&self) -> u64 {
        *self.revision.borrow()
    }

    /// Runs `f` on the current document under the writer lock.
    pub async fn read<T>(&self, f: impl FnOnce(&SceneDocument) -> T) -> T {
        let st = self.state.lock().await;
        f(&st.doc)
    }

    /// Applies one mutation. Commands queue on the session lock, so
    /// concurrent requests are serialized and never interleave.
    pub async fn mutate(&self, m: Mutation, base_revision: Option<u64>) -> Result<CommandOutcome, SessionError> {
        let mut st = self.state.lock().await;
        let current = st.doc.revision;
        if let Some(expected) = base_revision {
            if expected != current {
                return Err(SessionError::Conflict { expected, current });
            }
        }
        let (action, command, result) = match &m {
            Mutation::Apply(cmd) => ("apply", Some(cmd.to_string()), apply_command(&st.doc, cmd)),
            Mutation::Undo => (
                "undo",
                st.doc.undo_stack.last().map(|r| r.command.to_string()),
                undo(&st.doc),
            ),
            Mutation::Redo => (
                "redo",
                st.doc.redo_stack.last().map(|r| r.command.to_string()),
                redo(&st.doc),
            ),
        };
        let (next, diff) = result.map_err(SessionError::Edit)?;
        if let Some(dir) = &self.dir {
            persist(dir, &next).map_err(SessionError::Persist)?;
        }
        let revision = next.revision;
        st.doc = next;
        let outcome = CommandOutcome {
            revision,
            diff: diff.clone(),
            action: action.into(),
            command: command.clone(),
        };
        st.events.push(Event {
            revision,
            action: action.into(),
            command,
            diff,
        });
        self.revision.send_replace(revision);
        Ok(outcome)
    }

    fn collect(st: &SessionState, since: u64) -> Vec<Event> {
        let current = st.doc.revision;
        if current <= since {
            return Vec::new();
        }
        let known_from = st.events.first().map(|e| e.revision).unwrap_or(u64::MAX);
        if since + 1 < known_from {
            return vec![Event {
                revision: current,
                action: "snapshot".into(),
                command: None,
                diff: Diff {
                    revision: current,
                    ..Diff::default()
                },
            }];
        }
        st.events.iter().filter(|e| e.revision > since).cloned().collect()
    }

    /// Events after `since`, waiting up to `timeout` for the first one.
    pub async fn events_since(&self, since: u64, timeout: Duration) -> Vec<Event> {
        let mut rx = self.revision.subscribe();
        let deadline = tokio::time::Instant::now() + timeout;
        loop {
            {
                let st = self.state.lock().await;
                let events = Self::collect(&st, since);
                if !events.is_empty() {
                    return events;
                }
            }
            match tokio::time::timeout_at(deadline, rx.changed()).await {
                Ok(Ok(())) => continue,
                _ => return Vec::new(),
            }
        }
    }
}

/// All sessions, optionally persisted under `<dir>/<id>/scene.majutsu.json`.
pub struct SessionStore {
    sessions: RwLock<BTreeMap<String, Arc<Session>>>,
    dir: Option<PathBuf>,
    next: AtomicU64,
}

fn session_number(id: &str) -> Option<u64> {
    id.strip_prefix("session-")?.parse().ok()
}

impl SessionStore {
    pub fn in_memory() -> Self {
        SessionStore {
            sessions: RwLock::new(BTreeMap::new()),
            dir: None,
            next: AtomicU64::new(1),
        }
    }

    /// Opens a persistent store, restoring every saved session at its
    /// latest revision.
    pub fn open(dir: &Path) -> Result<Self, SceneError> {
        std::fs::create_dir_all(dir).map_err(|e| SceneError::SerializationFailure(e.to_string()))?;
        let mut sessions = BTreeMap::new();
        let mut max = 0;
        let entries = std::fs::read_dir(dir).map_err(|e| SceneError::SerializationFailure(e.to_string()))?;
        for entry in entries.flatten() {
            let path = entry.path();
            let file = path.join(SCENE_FILE);
            let Some(id) = path.file_name().and_then(|n| n.to_str()).map(str::to_string) else {
                continue;
            };
            if !file.is_file() {
                continue;
            }
            let doc = load_document_from_path(&file)?;
            max = max.max(session_number(&id).unwrap_or(0));
            log::info!("restored session {id} at revision {}", doc.revision);
            sessions.insert(id.clone(), Arc::new(Session::new(id, doc, Some(path), false)));
        }
        Ok(SessionStore {
            sessions: RwLock::new(sessions),
            dir: Some(dir.to_path_buf()),
            next: AtomicU64::new(max + 1),
        })
    }

    pub async fn create(&self, doc: SceneDocument) -> Result<Arc<Session>, String> {
        let id = format!("session-{:04}", self.next.fetch_add(1, Ordering::SeqCst));
        let dir = self.dir.as_ref().map(|d| d.join(&id));
        if let Some(d) = &dir {
            persist(d, &doc)?;
        }
        let s = Arc::new(Session::new(id.clone(), doc, dir, true));
        self.sessions.write().await.insert(id, s.clone());
        Ok(s)
    }

    pub async fn get(&self, id: &str) -> Option<Arc<Session>> {
        self.sessions.read().await.get(id).cloned()
    }

    pub async fn list(&self) -> Vec<Arc<Session>> {
        self.sessions.read().await.values().cloned().collect()
    }
}
