use std::fs;
use std::path::Path;

use reweight_l1::OuterConfig;
use serde::de::DeserializeOwned;

use crate::Failure;

/// Reads a TOML config, or returns the defaults when no path is given.
/// Missing keys keep their defaults; unknown keys are rejected.
pub fn load<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, Failure> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read config {}: {}", path.display(), e)))?;
    toml::from_str(&text).map_err(|e| Failure::usage(format!("config {}: {}", path.display(), e)))
}

pub fn load_outer(path: Option<&Path>) -> Result<OuterConfig, Failure> {
    load(path)
}
