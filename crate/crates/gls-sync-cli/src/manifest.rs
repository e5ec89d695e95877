//! Per-run manifest: the resolved configuration echo, the files the run
//! emitted, and the only timestamp-like value anywhere in the output tree
//! (wall-clock duration). Data files themselves stay byte-deterministic.

use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub version: String,
    pub command: String,
    pub config: String,
    pub files: Vec<String>,
    pub duration_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, config: String, mut files: Vec<String>, duration_seconds: f64) -> Self {
        files.push("manifest.json".to_string());
        Self {
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config,
            files,
            duration_seconds,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serialization cannot fail")
    }
}
