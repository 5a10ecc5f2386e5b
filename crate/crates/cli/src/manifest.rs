use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use esmppt::analysis::TuningReport;
use serde::Serialize;

/// Everything needed to reproduce a command's outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config_sources: Vec<String>,
    /// Resolved key/value snapshot per run, keyed by run label.
    pub snapshot: BTreeMap<String, BTreeMap<String, String>>,
    pub out_dir: String,
    pub rng_seeds: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tuning: Option<TuningReport>,
    pub forced: bool,
}

impl RunManifest {
    pub fn new(command: &str, out_dir: &Path) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config_sources: Vec::new(),
            snapshot: BTreeMap::new(),
            out_dir: out_dir.display().to_string(),
            rng_seeds: Vec::new(),
            tuning: None,
            forced: false,
        }
    }
}

pub fn prepare_out_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(dir, name, &text)
}
