//! Config assembly shared by every subcommand.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::Args;
use esmppt::config::KvConfig;
use esmppt::presets;

/// Directory searched for `NAME.cfg` before the built-in presets.
pub const CONFIG_DIR_ENV: &str = "ESMPPT_CONFIG_DIR";

#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Named preset loaded first (`esmppt presets` lists them).
    #[arg(long)]
    pub preset: Option<String>,
    /// Plant config file.
    #[arg(long, value_name = "FILE")]
    pub plant: Option<PathBuf>,
    /// Controller config file.
    #[arg(long, value_name = "FILE")]
    pub controller: Option<PathBuf>,
    /// Scenario config file.
    #[arg(long, value_name = "FILE")]
    pub scenario: Option<PathBuf>,
    /// Extra config files, applied in order.
    #[arg(long = "config", value_name = "FILE")]
    pub configs: Vec<PathBuf>,
    /// Single-key overrides, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub sets: Vec<String>,
}

/// Merged configuration plus the sources it came from.
#[derive(Debug, Clone, Default)]
pub struct Resolved {
    pub config: KvConfig,
    pub sources: Vec<String>,
}

/// Preset text, from the override directory if it has one under that name.
pub fn load_preset(name: &str) -> Result<(KvConfig, String)> {
    if let Some(dir) = std::env::var_os(CONFIG_DIR_ENV) {
        let path = Path::new(&dir).join(format!("{name}.cfg"));
        if path.is_file() {
            let cfg = KvConfig::from_file(&path)?;
            return Ok((cfg, path.display().to_string()));
        }
    }
    Ok((presets::load(name)?, format!("preset:{name}")))
}

fn load_file(path: &Path) -> Result<(KvConfig, String)> {
    if path.is_file() {
        return Ok((KvConfig::from_file(path)?, path.display().to_string()));
    }
    if path.is_relative() {
        if let Some(dir) = std::env::var_os(CONFIG_DIR_ENV) {
            let alt = Path::new(&dir).join(path);
            if alt.is_file() {
                return Ok((KvConfig::from_file(&alt)?, alt.display().to_string()));
            }
        }
    }
    bail!("config file {} not found", path.display())
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<Resolved> {
        let mut out = Resolved::default();
        let mut push = |(cfg, src): (KvConfig, String)| {
            out.config.merge(&cfg);
            out.sources.push(src);
        };
        if let Some(name) = &self.preset {
            push(load_preset(name)?);
        }
        for path in [&self.plant, &self.controller, &self.scenario].into_iter().flatten().chain(&self.configs) {
            push(load_file(path)?);
        }
        for (i, kv) in self.sets.iter().enumerate() {
            let (k, v) = kv
                .split_once('=')
                .with_context(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
            out.config.set(k.trim(), v.trim(), &format!("--set #{}", i + 1))?;
            out.sources.push(format!("--set {}", kv.trim()));
        }
        out.config.check_known_keys()?;
        Ok(out)
    }
}
