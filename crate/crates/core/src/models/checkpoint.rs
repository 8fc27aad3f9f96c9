//! Versioned JSON checkpoints. Floats are written in shortest round-trip form,
//! so a loaded model predicts bit-identically to the saved one.

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint<T> {
    pub format_version: u32,
    pub model: T,
}

pub fn save_checkpoint<T: Serialize>(model: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let ck = Checkpoint {
        format_version: CHECKPOINT_FORMAT_VERSION,
        model,
    };
    let text = serde_json::to_string(&ck).map_err(|e| Error::Serde(e.to_string()))?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let raw: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Serde(e.to_string()))?;
    let found = raw
        .get("format_version")
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Serde("checkpoint lacks format_version".into()))?;
    if found != CHECKPOINT_FORMAT_VERSION as u64 {
        return Err(Error::Version {
            found: found as u32,
            expected: CHECKPOINT_FORMAT_VERSION,
        });
    }
    let ck: Checkpoint<T> = serde_json::from_value(raw).map_err(|e| Error::Serde(e.to_string()))?;
    Ok(ck.model)
}
