//! Runs targets into a fresh output directory and records a manifest.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::cache::CacheStore;
use crate::config::ExperimentConfig;
use crate::error::{PipelineError, Result};
use crate::output::sha256_file;
use crate::targets::{run_target, Context, Target};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CONFIG_FILE: &str = "config.toml";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub target: String,
    pub status: String,
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub files: Vec<FileRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub tool_version: String,
    pub config_hash: String,
    pub seed: u64,
    pub config_file: FileRecord,
    pub stages: Vec<StageRecord>,
    pub total_seconds: f64,
}

impl RunManifest {
    pub fn failed(&self) -> Vec<&StageRecord> {
        self.stages.iter().filter(|s| s.status != "ok").collect()
    }

    pub fn files(&self) -> impl Iterator<Item = &FileRecord> {
        self.stages.iter().flat_map(|s| s.files.iter())
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub verbose: bool,
}

fn record(dir: &Path, path: &Path) -> Result<FileRecord> {
    let rel = path.strip_prefix(dir).unwrap_or(path);
    Ok(FileRecord { path: rel.display().to_string(), sha256: sha256_file(path)? })
}

/// Runs `targets` in canonical order. A failing target is recorded in the
/// manifest and does not stop the others. Targets compute everything
/// before writing, so a failure leaves no files behind.
pub fn run(cfg: &ExperimentConfig, targets: &[Target], opts: RunOptions) -> Result<RunManifest> {
    if targets.is_empty() {
        return Err(PipelineError::Config("no targets given".into()));
    }
    let mut targets = targets.to_vec();
    targets.sort();
    targets.dedup();

    let dir = cfg.output_dir.clone();
    if dir.join(MANIFEST_FILE).exists() {
        return Err(PipelineError::Config(format!(
            "{} already holds a run; choose a fresh output directory",
            dir.display()
        )));
    }
    std::fs::create_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))?;
    let config_path = dir.join(CONFIG_FILE);
    std::fs::write(&config_path, cfg.to_toml()).map_err(|e| PipelineError::io(&config_path, e))?;

    let cache = CacheStore::new(cfg.cache.then(|| cfg.cache_dir.clone()));
    let ctx = Context { cfg, cache: &cache, hash: cfg.hash(), dir: dir.clone(), verbose: opts.verbose };
    let start = Instant::now();
    let mut stages = Vec::new();
    for t in targets {
        let t0 = Instant::now();
        let outcome = run_target(&ctx, t).and_then(|files| files.iter().map(|p| record(&dir, p)).collect());
        let seconds = t0.elapsed().as_secs_f64();
        let stage = match outcome {
            Ok(files) => StageRecord { target: t.name().into(), status: "ok".into(), seconds, error: None, files },
            Err(e) => {
                if opts.verbose {
                    eprintln!("qkr [{t}] failed: {e}");
                }
                StageRecord { target: t.name().into(), status: "failed".into(), seconds, error: Some(e.to_string()), files: vec![] }
            }
        };
        stages.push(stage);
    }
    let manifest = RunManifest {
        tool: "qkr".into(),
        tool_version: TOOL_VERSION.into(),
        config_hash: ctx.hash.clone(),
        seed: cfg.seed,
        config_file: record(&dir, &config_path)?,
        stages,
        total_seconds: start.elapsed().as_secs_f64(),
    };
    let path = dir.join(MANIFEST_FILE);
    std::fs::write(&path, serde_json::to_string_pretty(&manifest)?).map_err(|e| PipelineError::io(&path, e))?;
    Ok(manifest)
}
