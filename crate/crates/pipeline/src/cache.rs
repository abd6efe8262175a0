//! Per-member result cache.
//!
//! Entries are JSON documents addressed by the SHA-256 of a key string that
//! holds the entry kind, a format version and the exact bit patterns of the
//! member parameters. Floats are written in shortest round-trip form and
//! parsed exactly, so a cached value is bit-identical to a fresh one. An
//! in-memory layer deduplicates work inside a run even with the disk layer
//! switched off.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use qkr_core::model::ModelParams;

use crate::error::{PipelineError, Result};

pub const CACHE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CacheKey {
    pub kind: &'static str,
    text: String,
}

impl CacheKey {
    pub fn new(kind: &'static str, fields: &str) -> Self {
        Self { kind, text: format!("v{CACHE_VERSION}|{kind}|{fields}") }
    }

    pub fn for_params(kind: &'static str, p: &ModelParams, extra: &str) -> Self {
        Self::new(
            kind,
            &format!(
                "{}|{:016x}|{:016x}|{:016x}|{extra}",
                p.n(),
                p.alpha().to_bits(),
                p.lambda().to_bits(),
                p.theta0().to_bits()
            ),
        )
    }

    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.text.as_bytes()))
    }
}

pub struct CacheStore {
    dir: Option<PathBuf>,
    memory: Mutex<HashMap<String, String>>,
}

impl CacheStore {
    /// `dir = None` keeps entries in memory only.
    pub fn new(dir: Option<PathBuf>) -> Self {
        Self { dir, memory: Mutex::new(HashMap::new()) }
    }

    pub fn dir(&self) -> Option<&Path> {
        self.dir.as_deref()
    }

    fn path(&self, key: &CacheKey, digest: &str) -> Option<PathBuf> {
        self.dir.as_ref().map(|d| d.join(key.kind).join(&digest[..2]).join(format!("{digest}.json")))
    }

    /// Unreadable or stale entries count as misses.
    pub fn get<T: DeserializeOwned>(&self, key: &CacheKey) -> Option<T> {
        let digest = key.digest();
        if let Some(text) = self.memory.lock().expect("cache lock").get(&digest) {
            return serde_json::from_str(text).ok();
        }
        let text = std::fs::read_to_string(self.path(key, &digest)?).ok()?;
        let value = serde_json::from_str(&text).ok()?;
        self.memory.lock().expect("cache lock").insert(digest, text);
        Some(value)
    }

    pub fn put<T: Serialize>(&self, key: &CacheKey, value: &T) -> Result<()> {
        let digest = key.digest();
        let text = serde_json::to_string(value)?;
        if let Some(path) = self.path(key, &digest) {
            let parent = path.parent().expect("entry has a parent");
            std::fs::create_dir_all(parent).map_err(|e| PipelineError::io(parent, e))?;
            let tmp = path.with_extension(format!("tmp{}", std::process::id()));
            std::fs::write(&tmp, &text).map_err(|e| PipelineError::io(&tmp, e))?;
            std::fs::rename(&tmp, &path).map_err(|e| PipelineError::io(&path, e))?;
        }
        self.memory.lock().expect("cache lock").insert(digest, text);
        Ok(())
    }

    pub fn get_or_compute<T, F>(&self, key: &CacheKey, compute: F) -> Result<T>
    where
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T>,
    {
        if let Some(v) = self.get(key) {
            return Ok(v);
        }
        let v = compute()?;
        self.put(key, &v)?;
        Ok(v)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_separate_kinds_and_bits() {
        let p = ModelParams::new(11, 3.0, 0.0, 0.1).unwrap();
        let q = ModelParams::new(11, 3.0, -0.0, 0.1).unwrap();
        let a = CacheKey::for_params("spectrum", &p, "");
        assert_ne!(a.digest(), CacheKey::for_params("tri", &p, "").digest());
        assert_ne!(a.digest(), CacheKey::for_params("spectrum", &q, "").digest());
        assert_eq!(a.digest(), CacheKey::for_params("spectrum", &p, "").digest());
    }

    #[test]
    fn disk_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let key = CacheKey::new("test", "x");
        let values: Vec<f64> = vec![0.1 + 0.2, 1.0 / 3.0, 6.02214076e23, 5e-324, -0.0];
        CacheStore::new(Some(dir.path().to_path_buf())).put(&key, &values).unwrap();
        let fresh = CacheStore::new(Some(dir.path().to_path_buf()));
        let back: Vec<f64> = fresh.get(&key).unwrap();
        for (a, b) in values.iter().zip(&back) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn memory_only_store() {
        let s = CacheStore::new(None);
        let key = CacheKey::new("test", "y");
        let mut calls = 0;
        for _ in 0..2 {
            let v: u32 = s
                .get_or_compute(&key, || {
                    calls += 1;
                    Ok(7)
                })
                .unwrap();
            assert_eq!(v, 7);
        }
        assert_eq!(calls, 1);
    }
}
