//! TTL cache of rendered feeds: one file per feed plus a JSON record table.
//!
//! Layout under the cache directory:
//!
//! ```text
//! <cache_dir>/records.json          record table, keyed by digest
//! <cache_dir>/<k0k1>/<key>.<rss|atom>  feed bytes; k0k1 = first two hex chars of key
//! ```
//!
//! `records.json` is an object mapping each 64-hex key to
//! `{key, request_fingerprint, created_at (RFC 3339), ttl_secs, file_path}`,
//! where `file_path` is relative to the cache directory. Both files are
//! written to a temporary name and renamed into place.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};

use chrono::{DateTime, Duration, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::clock::Clock;
use crate::error::CacheError;
use crate::model::FeedFormat;

pub const DEFAULT_TTL_SECS: i64 = 24 * 60 * 60;
pub const DEFAULT_GRACE_SECS: i64 = 60 * 60;
const INDEX_FILE: &str = "records.json";

/// Everything that determines a feed's bytes, apart from the clock.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    pub endpoint_url: String,
    pub query_text: String,
    pub format: FeedFormat,
    pub self_url: String,
}

impl Fingerprint {
    /// Length-prefixed fields, so no two fingerprints share a serialization.
    pub fn canonical(&self) -> String {
        let field = |name: &str, value: &str| format!("{name}:{}:{value}\n", value.len());
        let mut s = String::new();
        s.push_str(&field("endpoint", &self.endpoint_url));
        s.push_str(&field("format", self.format.as_str()));
        s.push_str(&field("query", &self.query_text));
        s.push_str(&field("self", &self.self_url));
        s
    }

    /// SHA-256 of [`Fingerprint::canonical`], lowercase hex.
    pub fn key(&self) -> String {
        hex::encode(Sha256::digest(self.canonical().as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub key: String,
    pub request_fingerprint: String,
    pub created_at: DateTime<Utc>,
    pub ttl_secs: i64,
    pub file_path: String,
}

impl CacheRecord {
    pub fn ttl(&self) -> Duration {
        Duration::seconds(self.ttl_secs)
    }

    pub fn is_fresh(&self, now: DateTime<Utc>) -> bool {
        now - self.created_at < self.ttl()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Lookup {
    Fresh(Vec<u8>),
    Stale(Vec<u8>),
    Miss,
}

#[derive(Debug)]
pub struct FeedCache {
    dir: PathBuf,
    clock: Arc<dyn Clock>,
    grace: Duration,
    records: RwLock<HashMap<String, CacheRecord>>,
    persist: Mutex<()>,
    tmp_seq: AtomicU64,
}

impl FeedCache {
    /// Opens (or creates) a cache directory. An unreadable record table is
    /// discarded and the cache starts empty.
    pub fn open(dir: impl Into<PathBuf>, clock: Arc<dyn Clock>) -> Result<Self, CacheError> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|source| CacheError::Io {
            path: dir.clone(),
            source,
        })?;
        let index = dir.join(INDEX_FILE);
        let records = match fs::read(&index) {
            Ok(bytes) => match serde_json::from_slice::<BTreeMap<String, CacheRecord>>(&bytes) {
                Ok(map) => map.into_iter().collect(),
                Err(e) => {
                    tracing::warn!(path = %index.display(), error = %e, "discarding corrupt cache index");
                    HashMap::new()
                }
            },
            Err(e) if e.kind() == ErrorKind::NotFound => HashMap::new(),
            Err(source) => return Err(CacheError::Io { path: index, source }),
        };
        Ok(FeedCache {
            dir,
            clock,
            grace: Duration::seconds(DEFAULT_GRACE_SECS),
            records: RwLock::new(records),
            persist: Mutex::new(()),
            tmp_seq: AtomicU64::new(0),
        })
    }

    pub fn with_grace(mut self, grace: Duration) -> Self {
        self.grace = grace;
        self
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn record(&self, fp: &Fingerprint) -> Option<CacheRecord> {
        self.records.read().expect("cache lock poisoned").get(&fp.key()).cloned()
    }

    pub fn len(&self) -> usize {
        self.records.read().expect("cache lock poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn lookup(&self, fp: &Fingerprint) -> Lookup {
        let key = fp.key();
        let Some(record) = self.records.read().expect("cache lock poisoned").get(&key).cloned() else {
            return Lookup::Miss;
        };
        match fs::read(self.dir.join(&record.file_path)) {
            Ok(bytes) if record.is_fresh(self.clock.now()) => Lookup::Fresh(bytes),
            Ok(bytes) => Lookup::Stale(bytes),
            Err(e) => {
                tracing::warn!(key = %key, error = %e, "cached feed unreadable; purging record");
                self.remove_record_if(&key, |r| r == &record);
                Lookup::Miss
            }
        }
    }

    /// Writes `bytes` as the feed for `fp`, replacing any earlier copy.
    pub fn store(&self, fp: &Fingerprint, bytes: &[u8], ttl: Duration) -> Result<CacheRecord, CacheError> {
        let key = fp.key();
        let rel = format!("{}/{}.{}", &key[..2], key, fp.format.as_str());
        let path = self.dir.join(&rel);
        let parent = path.parent().expect("cache file has a parent");
        fs::create_dir_all(parent).map_err(|source| CacheError::Io {
            path: parent.to_path_buf(),
            source,
        })?;
        self.write_atomically(&path, bytes)?;

        let record = CacheRecord {
            key: key.clone(),
            request_fingerprint: fp.canonical(),
            created_at: self.clock.now(),
            ttl_secs: ttl.num_seconds(),
            file_path: rel,
        };
        self.records
            .write()
            .expect("cache lock poisoned")
            .insert(key, record.clone());
        self.persist_index()?;
        Ok(record)
    }

    /// Removes records (and their files) older than `ttl + grace` at `now`.
    pub fn purge_expired(&self, now: DateTime<Utc>) -> usize {
        let expired: Vec<CacheRecord> = self
            .records
            .read()
            .expect("cache lock poisoned")
            .values()
            .filter(|r| now - r.created_at >= r.ttl() + self.grace)
            .cloned()
            .collect();
        let mut purged = 0;
        for record in expired {
            match fs::remove_file(self.dir.join(&record.file_path)) {
                Ok(()) => {}
                Err(e) if e.kind() == ErrorKind::NotFound => {}
                Err(e) => {
                    tracing::warn!(key = %record.key, error = %e, "could not remove cached feed; will retry");
                    continue;
                }
            }
            if self.remove_record_if(&record.key, |r| r == &record) {
                purged += 1;
            }
        }
        purged
    }

    fn remove_record_if(&self, key: &str, pred: impl Fn(&CacheRecord) -> bool) -> bool {
        let removed = {
            let mut records = self.records.write().expect("cache lock poisoned");
            match records.get(key) {
                Some(r) if pred(r) => records.remove(key).is_some(),
                _ => false,
            }
        };
        if removed {
            if let Err(e) = self.persist_index() {
                tracing::warn!(error = %e, "could not persist cache index");
            }
        }
        removed
    }

    fn write_atomically(&self, path: &Path, bytes: &[u8]) -> Result<(), CacheError> {
        let seq = self.tmp_seq.fetch_add(1, Ordering::Relaxed);
        let tmp = path.with_extension(format!("tmp-{}-{seq}", std::process::id()));
        let io = |source| CacheError::Io {
            path: path.to_path_buf(),
            source,
        };
        fs::write(&tmp, bytes).map_err(io)?;
        fs::rename(&tmp, path).map_err(|e| {
            let _ = fs::remove_file(&tmp);
            io(e)
        })
    }

    fn persist_index(&self) -> Result<(), CacheError> {
        let _guard = self.persist.lock().expect("cache persist lock poisoned");
        let snapshot: BTreeMap<String, CacheRecord> = self
            .records
            .read()
            .expect("cache lock poisoned")
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let json = serde_json::to_vec_pretty(&snapshot).expect("records serialize");
        self.write_atomically(&self.dir.join(INDEX_FILE), &json)
    }
}

/// Per-key mutual exclusion for feed regeneration.
#[derive(Debug, Default, Clone)]
pub struct SingleFlight {
    inner: Arc<Mutex<HashMap<String, Arc<tokio::sync::Mutex<()>>>>>,
}

/// Held while one caller regenerates a key.
#[derive(Debug)]
pub struct FlightGuard {
    guard: Option<tokio::sync::OwnedMutexGuard<()>>,
    key: String,
    owner: SingleFlight,
}

impl SingleFlight {
    pub fn new() -> Self {
        Self::default()
    }

    fn slot(&self, key: &str) -> Arc<tokio::sync::Mutex<()>> {
        self.inner
            .lock()
            .expect("single-flight lock poisoned")
            .entry(key.to_string())
            .or_default()
            .clone()
    }

    /// Takes the key if nobody holds it.
    pub fn try_acquire(&self, key: &str) -> Option<FlightGuard> {
        let slot = self.slot(key);
        match slot.try_lock_owned() {
            Ok(guard) => Some(FlightGuard {
                guard: Some(guard),
                key: key.to_string(),
                owner: self.clone(),
            }),
            Err(_) => None,
        }
    }

    /// Waits until the key is free, then takes it.
    pub async fn acquire(&self, key: &str) -> FlightGuard {
        let slot = self.slot(key);
        let guard = slot.lock_owned().await;
        FlightGuard {
            guard: Some(guard),
            key: key.to_string(),
            owner: self.clone(),
        }
    }

    pub fn in_flight(&self) -> usize {
        self.inner.lock().expect("single-flight lock poisoned").len()
    }
}

impl Drop for FlightGuard {
    fn drop(&mut self) {
        drop(self.guard.take());
        let mut map = self.owner.inner.lock().expect("single-flight lock poisoned");
        if let Some(slot) = map.get(&self.key) {
            // only the map itself still refers to it
            if Arc::strong_count(slot) == 1 {
                map.remove(&self.key);
            }
        }
    }
}
