use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::SystemTime;

use twog2t::wire::SessionId;

pub const DEFAULT_CAPACITY: usize = 1024;

/// Cached bases for one client setup.
#[derive(Debug)]
pub struct Session<E> {
    pub bases: Arc<Vec<E>>,
    pub merged: Vec<E>,
    pub created_at: SystemTime,
    query_count: AtomicU64,
}

impl<E> Session<E> {
    pub fn len(&self) -> usize {
        self.merged.len()
    }

    pub fn is_empty(&self) -> bool {
        self.merged.is_empty()
    }

    pub fn query_count(&self) -> u64 {
        self.query_count.load(Ordering::Relaxed)
    }

    /// Increments the query counter and returns its previous value.
    pub fn record_query(&self) -> u64 {
        self.query_count.fetch_add(1, Ordering::Relaxed)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
#[error("session store is full ({capacity} sessions)")]
pub struct CapacityExceeded {
    pub capacity: usize,
}

/// In-memory session table. Not persisted.
#[derive(Debug)]
pub struct SessionStore<E> {
    capacity: usize,
    sessions: HashMap<SessionId, Arc<Session<E>>>,
}

impl<E> SessionStore<E> {
    pub fn new(capacity: usize) -> Self {
        Self { capacity, sessions: HashMap::new() }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    /// Stores a session. Re-uploading an existing id replaces it and does not
    /// count against the capacity.
    pub fn insert(&mut self, id: SessionId, bases: Arc<Vec<E>>, merged: Vec<E>) -> Result<(), CapacityExceeded> {
        if !self.sessions.contains_key(&id) && self.sessions.len() >= self.capacity {
            return Err(CapacityExceeded { capacity: self.capacity });
        }
        let session = Session { bases, merged, created_at: SystemTime::now(), query_count: AtomicU64::new(0) };
        self.sessions.insert(id, Arc::new(session));
        Ok(())
    }

    pub fn get(&self, id: &SessionId) -> Option<Arc<Session<E>>> {
        self.sessions.get(id).cloned()
    }

    pub fn remove(&mut self, id: &SessionId) -> bool {
        self.sessions.remove(id).is_some()
    }
}
