use std::collections::HashMap;
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{canonical_tuples, CommonsenseTuple, Relation};
use crate::error::{Error, Result};

/// One line of the entailment cache file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheRecord {
    pub text: String,
    pub tuples: Vec<CommonsenseTuple>,
}

/// Text → tuples lookup table backed by a JSON Lines file.
#[derive(Debug, Clone, Default)]
pub struct EntailmentCache {
    path: Option<PathBuf>,
    entries: HashMap<String, Vec<CommonsenseTuple>>,
}

impl EntailmentCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Loads an existing cache file.
    pub fn open(path: &Path) -> Result<Self> {
        let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut entries = HashMap::new();
        for (i, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message,
            };
            let record: CacheRecord =
                serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
            let tuples = canonical_tuples(record.tuples).map_err(|e| parse_err(e.to_string()))?;
            entries.insert(record.text, tuples);
        }
        Ok(EntailmentCache {
            path: Some(path.to_path_buf()),
            entries,
        })
    }

    /// Loads `path` if it exists, otherwise starts empty and creates it on first insert.
    pub fn open_or_create(path: &Path) -> Result<Self> {
        if path.exists() {
            Self::open(path)
        } else {
            Ok(EntailmentCache {
                path: Some(path.to_path_buf()),
                entries: HashMap::new(),
            })
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, text: &str) -> Option<&[CommonsenseTuple]> {
        self.entries.get(text).map(Vec::as_slice)
    }

    /// Stores a complete tuple set and appends it to the backing file.
    pub fn insert(&mut self, text: &str, tuples: Vec<CommonsenseTuple>) -> Result<()> {
        let tuples = canonical_tuples(tuples)?;
        if let Some(path) = &self.path {
            let mut line = serde_json::to_string(&CacheRecord {
                text: text.to_string(),
                tuples: tuples.clone(),
            })
            .expect("cache records always serialize");
            line.push('\n');
            let mut f = OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| Error::io(path, e))?;
            f.write_all(line.as_bytes())
                .map_err(|e| Error::io(path, e))?;
        }
        self.entries.insert(text.to_string(), tuples);
        Ok(())
    }
}

#[derive(Serialize)]
struct EntailRequest<'a> {
    text: &'a str,
    relations: Vec<&'static str>,
}

#[derive(Deserialize)]
struct EntailResponse {
    tuples: Vec<CommonsenseTuple>,
}

/// Client for an HTTP entailment service: `POST {endpoint}/entail`.
#[derive(Debug, Clone)]
pub struct RemoteService {
    endpoint: String,
    timeout: Duration,
}

impl RemoteService {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        RemoteService {
            endpoint: endpoint.into().trim_end_matches('/').to_string(),
            timeout,
        }
    }

    pub fn entail(&self, text: &str) -> Result<Vec<CommonsenseTuple>> {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(self.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        let url = format!("{}/entail", self.endpoint);
        let request = EntailRequest {
            text,
            relations: Relation::ALL.iter().map(|r| r.name()).collect(),
        };
        let mut response = agent
            .post(&url)
            .send_json(&request)
            .map_err(|e| Error::Service(format!("{url}: {e}")))?;
        let status = response.status();
        if status != 200 {
            return Err(Error::Service(format!(
                "{url}: HTTP status {}",
                status.as_u16()
            )));
        }
        let body: EntailResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| Error::Service(format!("{url}: malformed response: {e}")))?;
        canonical_tuples(body.tuples).map_err(|e| Error::Service(format!("{url}: {e}")))
    }
}

/// Source of relation-entailment tuples.
#[derive(Debug, Clone)]
pub enum CommonsenseBackend {
    /// Deterministic lookup; absent keys are an error.
    Cache(EntailmentCache),
    /// Remote model with write-through caching of successful responses.
    Remote {
        service: RemoteService,
        cache: EntailmentCache,
    },
}

impl CommonsenseBackend {
    /// Exactly one tuple per relation, in canonical order.
    pub fn generate_tuples(&mut self, text: &str) -> Result<Vec<CommonsenseTuple>> {
        if text.trim().is_empty() {
            return Err(Error::InvalidInput("cannot entail empty text".into()));
        }
        match self {
            CommonsenseBackend::Cache(cache) => cache
                .get(text)
                .map(<[CommonsenseTuple]>::to_vec)
                .ok_or_else(|| Error::MissingEntailment(text.to_string())),
            CommonsenseBackend::Remote { service, cache } => {
                if let Some(hit) = cache.get(text) {
                    return Ok(hit.to_vec());
                }
                let tuples = service.entail(text)?;
                cache.insert(text, tuples.clone())?;
                Ok(tuples)
            }
        }
    }

    pub fn cache(&self) -> &EntailmentCache {
        match self {
            CommonsenseBackend::Cache(c) => c,
            CommonsenseBackend::Remote { cache, .. } => cache,
        }
    }
}
