use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CompletionRequest;
use crate::error::{Error, Result};

/// One JSON file per completion, named by the SHA-256 of the request body.
#[derive(Debug)]
pub struct ResponseCache {
    dir: PathBuf,
    write_lock: Mutex<()>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CachedResponse {
    pub request: CompletionRequest,
    pub text: String,
    pub endpoint: String,
    pub timestamp: u64,
}

impl ResponseCache {
    pub fn open(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(ResponseCache {
            dir,
            write_lock: Mutex::new(()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(request: &CompletionRequest) -> String {
        let body = serde_json::to_vec(request).expect("request serializes");
        Sha256::digest(&body).iter().map(|b| format!("{b:02x}")).collect()
    }

    fn path_for(&self, request: &CompletionRequest) -> PathBuf {
        self.dir.join(format!("{}.json", Self::key(request)))
    }

    pub fn contains(&self, request: &CompletionRequest) -> bool {
        self.path_for(request).is_file()
    }

    pub fn get(&self, request: &CompletionRequest) -> Result<Option<CachedResponse>> {
        let path = self.path_for(request);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(Error::io(&path, e)),
        };
        match serde_json::from_slice::<CachedResponse>(&bytes) {
            Ok(hit) if &hit.request == request => Ok(Some(hit)),
            Ok(_) => Ok(None),
            Err(e) => {
                log::warn!("ignoring unreadable cache entry {}: {e}", path.display());
                Ok(None)
            }
        }
    }

    pub fn put(&self, request: &CompletionRequest, text: &str, endpoint: &str, timestamp: u64) -> Result<()> {
        let entry = CachedResponse {
            request: request.clone(),
            text: text.to_string(),
            endpoint: endpoint.to_string(),
            timestamp,
        };
        let path = self.path_for(request);
        let tmp = path.with_extension("json.tmp");
        let _guard = self.write_lock.lock().unwrap();
        fs::write(&tmp, serde_json::to_vec_pretty(&entry)?).map_err(|e| Error::io(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))
    }

    pub fn len(&self) -> usize {
        fs::read_dir(&self.dir)
            .map(|rd| {
                rd.filter_map(|e| e.ok())
                    .filter(|e| e.path().extension().is_some_and(|x| x == "json"))
                    .count()
            })
            .unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
