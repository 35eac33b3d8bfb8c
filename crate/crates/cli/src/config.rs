//! Flag/config-file merging and the shared error type.

use std::fmt;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use szego_core::Error as CoreError;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, bad config or bad input files. Exit code 2.
    Usage(String),
    /// A computation that could not finish. Exit code 1.
    Failed(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Failed(m) => write!(f, "failed: {m}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::InvalidParameter(_)
            | CoreError::TruncationTooSmall { .. }
            | CoreError::TruncTooSmall { .. }
            | CoreError::PoleOutside { .. }
            | CoreError::MeasureMismatch { .. }
            | CoreError::MalformedState(_)
            | CoreError::PoleCollision { .. } => CliError::Usage(e.to_string()),
            _ => CliError::Failed(e.to_string()),
        }
    }
}

pub fn usage(e: impl fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

pub fn load_config(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    if !v.is_object() {
        return Err(usage("config must be a JSON object keyed by subcommand"));
    }
    Ok(v)
}

/// Fills every flag left unset from `section`. Explicit flags win; `false`
/// switches and absent options count as unset.
pub fn resolve<T: Serialize + DeserializeOwned>(flags: &T, section: Option<&Value>) -> Result<T, CliError> {
    let mut merged = match section {
        None => serde_json::Map::new(),
        Some(Value::Object(m)) => m.clone(),
        Some(_) => return Err(usage("config section must be a JSON object")),
    };
    let given = serde_json::to_value(flags).map_err(usage)?;
    if let Value::Object(given) = given {
        for (k, v) in given {
            if !v.is_null() && v != Value::Bool(false) {
                merged.insert(k, v);
            }
        }
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| usage(format!("config: {e}")))
}
