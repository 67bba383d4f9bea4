//! Session parameter file: the engine parameters as top-level keys, plus the
//! room-spawn threshold and a `layout` table for the spring solver.
//!
//! ```toml
//! lambda = 0.0231
//! s_d = 0.7
//! s_room = 0.8
//!
//! [weight_table]
//! tool_use = 0.3
//!
//! [layout]
//! max_iters = 2000
//! ```

use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;
use tracing::warn;

use crate::composer::LayoutParams;
use crate::relevance::EngineParams;

#[derive(Debug, Error)]
pub enum ParamsError {
    #[error("cannot read parameters {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed parameters: {0}")]
    Syntax(String),
    #[error("unknown parameter `{0}`")]
    UnknownKey(String),
    #[error("invalid parameter: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Params {
    #[serde(flatten)]
    pub engine: EngineParams,
    /// Relevance at which an entity triggers a new room.
    pub s_room: f64,
    pub layout: LayoutParams,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            engine: EngineParams::default(),
            s_room: 0.8,
            layout: LayoutParams::default(),
        }
    }
}

impl Params {
    pub fn validate(&self) -> Result<(), ParamsError> {
        self.engine
            .validate()
            .map_err(|e| ParamsError::Invalid(e.to_string()))?;
        self.layout.validate().map_err(ParamsError::Invalid)?;
        if !self.s_room.is_finite() {
            return Err(ParamsError::Invalid("s_room must be finite".into()));
        }
        Ok(())
    }

    pub fn from_json_str(text: &str, strict: bool) -> Result<Self, ParamsError> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| ParamsError::Syntax(e.to_string()))?;
        Self::from_value(value, strict)
    }

    pub fn from_toml_str(text: &str, strict: bool) -> Result<Self, ParamsError> {
        let value: serde_json::Value = toml::from_str(text).map_err(|e| ParamsError::Syntax(e.to_string()))?;
        Self::from_value(value, strict)
    }

    /// Reads a `.toml` file as TOML and anything else as JSON.
    pub fn from_path(path: impl AsRef<Path>, strict: bool) -> Result<Self, ParamsError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ParamsError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        if path.extension().is_some_and(|e| e == "toml") {
            Self::from_toml_str(&text, strict)
        } else {
            Self::from_json_str(&text, strict)
        }
    }

    fn from_value(value: serde_json::Value, strict: bool) -> Result<Self, ParamsError> {
        let known = serde_json::to_value(Params::default()).expect("params serialize");
        if let (Some(given), Some(known)) = (value.as_object(), known.as_object()) {
            for key in given.keys().filter(|k| !known.contains_key(*k)) {
                if strict {
                    return Err(ParamsError::UnknownKey(key.clone()));
                }
                warn!("ignoring unknown parameter `{key}`");
            }
        }
        let params: Params = serde_json::from_value(value).map_err(|e| ParamsError::Syntax(e.to_string()))?;
        params.validate()?;
        Ok(params)
    }
}
