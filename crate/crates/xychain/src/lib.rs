//! Sweep engine, file formats and CLI plumbing on top of `xychain-core`.

pub mod engine;
pub mod presets;
pub mod report;
pub mod scaling;
pub mod table;

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::de::DeserializeOwned;

/// Reads a JSON document; unknown keys are rejected by the target types.
pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
