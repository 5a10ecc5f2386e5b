use std::path::Path;

use anyhow::Result;
use esmppt::config::Bundle;

use super::tuning_report;
use crate::inputs::ConfigArgs;
use crate::manifest::{prepare_out_dir, write_json};
use crate::Outcome;

pub fn run(config: &ConfigArgs, out: Option<&Path>) -> Result<Outcome> {
    let resolved = config.resolve()?;
    let bundle = Bundle::from_config(&resolved.config)?;
    let report = tuning_report(&bundle)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    if let Some(dir) = out {
        prepare_out_dir(dir)?;
        write_json(dir, "tuning_report.json", &report)?;
    }
    for w in &report.degeneracy_warnings {
        eprintln!("warning: {w}");
    }
    Ok(if report.conditions_hold() { Outcome::Success } else { Outcome::ValidationFailed })
}
