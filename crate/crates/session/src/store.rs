//! Sessions on disk: one append-only ndjson log per session.
//!
//! Each session sits behind its own mutex, so mutations of one session are
//! serialized while different sessions proceed in parallel. New events are
//! appended to the log before the call returns.

use std::collections::{BTreeMap, HashMap};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex, RwLock};
use std::time::{SystemTime, UNIX_EPOCH};

use mixbet_core::{MixingIntervalResult, ObservationSet};

use crate::config::SessionConfig;
use crate::error::{Error, Result};
use crate::session::{is_valid_session_id, ChoiceAck, NextTrial, ResolutionRecord, Session};

struct Entry {
    session: Session,
    /// Number of events already in the file.
    persisted: usize,
}

pub struct SessionStore {
    dir: PathBuf,
    sessions: RwLock<HashMap<String, Arc<Mutex<Entry>>>>,
}

pub fn now_millis() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

impl SessionStore {
    /// Opens `dir`, creating it if needed, and replays every `*.ndjson` log in it.
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        let mut sessions = HashMap::new();
        for entry in fs::read_dir(&dir)? {
            let path = entry?.path();
            if path.extension().is_some_and(|e| e == "ndjson") {
                let text = fs::read_to_string(&path)?;
                let session =
                    Session::from_ndjson(&text).map_err(|e| Error::CorruptLog(format!("{}: {e}", path.display())))?;
                // Appends go to `<id>.ndjson`; a renamed log would silently fork.
                if path.file_stem().and_then(|s| s.to_str()) != Some(session.id()) {
                    return Err(Error::CorruptLog(format!(
                        "{}: file name does not match session id `{}`",
                        path.display(),
                        session.id()
                    )));
                }
                let persisted = session.events().len();
                sessions.insert(session.id().to_string(), Arc::new(Mutex::new(Entry { session, persisted })));
            }
        }
        Ok(Self { dir, sessions: RwLock::new(sessions) })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, id: &str) -> PathBuf {
        self.dir.join(format!("{id}.ndjson"))
    }

    pub fn create(&self, config: SessionConfig) -> Result<String> {
        let mut sessions = self.sessions.write().expect("store lock");
        let id = loop {
            let id = format!("s{:016x}", rand::random::<u64>());
            if !sessions.contains_key(&id) {
                break id;
            }
        };
        let session = Session::create(id.clone(), config, now_millis())?;
        self.insert(&mut sessions, session)?;
        Ok(id)
    }

    /// Adds a session built elsewhere, for example by a simulated subject,
    /// under its own id.
    pub fn import(&self, session: Session) -> Result<()> {
        let mut sessions = self.sessions.write().expect("store lock");
        if sessions.contains_key(session.id()) {
            return Err(Error::InvalidRequest(format!("session `{}` already exists", session.id())));
        }
        self.insert(&mut sessions, session)
    }

    fn insert(&self, sessions: &mut HashMap<String, Arc<Mutex<Entry>>>, session: Session) -> Result<()> {
        let mut file = OpenOptions::new().write(true).create_new(true).open(self.path(session.id()))?;
        file.write_all(session.to_ndjson().as_bytes())?;
        file.sync_data()?;
        let persisted = session.events().len();
        sessions.insert(session.id().to_string(), Arc::new(Mutex::new(Entry { session, persisted })));
        Ok(())
    }

    pub fn ids(&self) -> Vec<String> {
        let mut ids: Vec<String> = self.sessions.read().expect("store lock").keys().cloned().collect();
        ids.sort();
        ids
    }

    fn entry(&self, id: &str) -> Result<Arc<Mutex<Entry>>> {
        if !is_valid_session_id(id) {
            return Err(Error::UnknownSession(id.to_string()));
        }
        self.sessions.read().expect("store lock").get(id).cloned().ok_or_else(|| Error::UnknownSession(id.into()))
    }

    /// Runs `f` under the session lock and appends any events it produced.
    fn mutate<T>(&self, id: &str, f: impl FnOnce(&mut Session) -> Result<T>) -> Result<T> {
        let entry = self.entry(id)?;
        let mut guard = entry.lock().expect("session lock");
        let out = f(&mut guard.session)?;
        let fresh = &guard.session.events()[guard.persisted..];
        if !fresh.is_empty() {
            let mut text = String::new();
            for e in fresh {
                text.push_str(&serde_json::to_string(e).expect("events serialize"));
                text.push('\n');
            }
            let mut file = OpenOptions::new().append(true).open(self.path(id))?;
            file.write_all(text.as_bytes())?;
            file.sync_data()?;
            guard.persisted = guard.session.events().len();
        }
        Ok(out)
    }

    /// Runs `f` on a consistent view of the session.
    pub fn read<T>(&self, id: &str, f: impl FnOnce(&Session) -> Result<T>) -> Result<T> {
        let entry = self.entry(id)?;
        let guard = entry.lock().expect("session lock");
        f(&guard.session)
    }

    pub fn next_trial(&self, id: &str) -> Result<NextTrial> {
        self.mutate(id, |s| s.next_trial(now_millis()))
    }

    pub fn record_choice(&self, id: &str, trial_id: u32, x: f64) -> Result<ChoiceAck> {
        self.mutate(id, |s| s.record_choice(trial_id, x, now_millis()))
    }

    pub fn resolve(&self, id: &str, realizations: &BTreeMap<String, bool>) -> Result<ResolutionRecord> {
        self.mutate(id, |s| s.resolve(realizations, now_millis()))
    }

    pub fn observations(&self, id: &str) -> Result<BTreeMap<String, ObservationSet>> {
        self.read(id, Session::all_observations)
    }

    pub fn bounds(&self, id: &str) -> Result<BTreeMap<String, MixingIntervalResult>> {
        self.read(id, Session::bounds)
    }

    /// The session log exactly as stored on disk.
    pub fn log(&self, id: &str) -> Result<String> {
        self.read(id, |_| Ok(fs::read_to_string(self.path(id))?))
    }
}
