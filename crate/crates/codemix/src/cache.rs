//! Record/replay cache of provider calls, stored as append-only JSONL.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use codemix_core::providers::wire::ProviderRequest;
use codemix_core::ProviderError;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::canonical;
use crate::transport::Transport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProviderRecord {
    pub provider_id: String,
    pub request_hash: String,
    pub request: Value,
    pub response: Value,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
}

impl ProviderRecord {
    pub fn new(provider_id: &str, request: Value, response: Value) -> Self {
        let request = canonical::normalize(request);
        ProviderRecord {
            provider_id: provider_id.into(),
            request_hash: canonical::request_hash(provider_id, &request),
            request,
            response: canonical::normalize(response),
            timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
        }
    }

    /// Whether the stored hash matches the stored request.
    pub fn is_consistent(&self) -> bool {
        canonical::request_hash(&self.provider_id, &self.request) == self.request_hash
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CacheMode {
    /// Forward every call and append new request/response pairs.
    Record,
    /// Serve from the file only; a miss is an error.
    Replay,
    /// No cache.
    #[default]
    Live,
}

impl FromStr for CacheMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "record" => Ok(CacheMode::Record),
            "replay" => Ok(CacheMode::Replay),
            "live" => Ok(CacheMode::Live),
            _ => Err(format!("unknown cache mode `{s}` (record, replay, live)")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("replay needs an existing cache file: {0}")]
    MissingFile(PathBuf),
    #[error("{path}:{line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Records indexed by hash. The first record for a hash wins; later
/// duplicates in the file are ignored.
#[derive(Debug)]
pub struct RecordStore {
    path: PathBuf,
    index: Mutex<HashMap<String, Value>>,
    appender: Option<Mutex<File>>,
    records_read: usize,
}

impl RecordStore {
    pub fn open(path: &Path, mode: CacheMode) -> Result<Self, CacheError> {
        let exists = path.exists();
        if mode == CacheMode::Replay && !exists {
            return Err(CacheError::MissingFile(path.to_path_buf()));
        }
        let mut index = HashMap::new();
        let mut records_read = 0;
        if exists {
            for record in read_records(path)? {
                records_read += 1;
                index.entry(record.request_hash).or_insert(record.response);
            }
        }
        let appender = match mode {
            CacheMode::Record => Some(Mutex::new(OpenOptions::new().create(true).append(true).open(path)?)),
            _ => None,
        };
        Ok(RecordStore {
            path: path.to_path_buf(),
            index: Mutex::new(index),
            appender,
            records_read,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.index.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lines read from the file when it was opened, duplicates included.
    pub fn records_read(&self) -> usize {
        self.records_read
    }

    pub fn get(&self, hash: &str) -> Option<Value> {
        self.index.lock().unwrap().get(hash).cloned()
    }

    /// Appends the record unless its hash is already stored. Appends are
    /// serialized and flushed line by line.
    pub fn insert(&self, record: ProviderRecord) -> Result<(), CacheError> {
        let mut index = self.index.lock().unwrap();
        if index.contains_key(&record.request_hash) {
            return Ok(());
        }
        if let Some(file) = &self.appender {
            let mut line = serde_json::to_string(&record).expect("records serialize");
            line.push('\n');
            let mut file = file.lock().unwrap();
            file.write_all(line.as_bytes())?;
            file.flush()?;
        }
        index.insert(record.request_hash, record.response);
        Ok(())
    }
}

pub fn read_records(path: &Path) -> Result<Vec<ProviderRecord>, CacheError> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ProviderRecord = serde_json::from_str(&line).map_err(|e| CacheError::Corrupt {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Decorates a transport with the record store.
pub struct Cached<T> {
    inner: T,
    store: std::sync::Arc<RecordStore>,
    mode: CacheMode,
}

impl<T: Transport> Cached<T> {
    pub fn new(inner: T, store: std::sync::Arc<RecordStore>, mode: CacheMode) -> Self {
        Cached { inner, store, mode }
    }
}

impl<T: Transport> Transport for Cached<T> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn call(&self, request: &ProviderRequest) -> Result<Value, ProviderError> {
        if self.mode == CacheMode::Live {
            return self.inner.call(request);
        }
        let req = canonical::to_value(request).map_err(|e| ProviderError::InvalidRequest(e.to_string()))?;
        let hash = canonical::request_hash(self.id(), &req);
        if self.mode == CacheMode::Replay {
            return self.store.get(&hash).ok_or_else(|| ProviderError::CacheMiss {
                provider: self.id().into(),
                hash,
            });
        }
        let response = self.inner.call(request)?;
        let record = ProviderRecord::new(self.id(), req, response);
        let response = record.response.clone();
        self.store
            .insert(record)
            .map_err(|e| ProviderError::Io(e.to_string()))?;
        Ok(response)
    }
}
