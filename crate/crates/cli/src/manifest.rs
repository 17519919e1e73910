use std::collections::BTreeMap;
use std::path::Path;

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::failure::{usage, CmdResult};
use crate::files::{sha256_file, write_json};

/// Record of one command invocation, written before any work starts.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    /// Effective configuration after applying defaults, file and flags.
    pub config: Value,
    /// Config file the values were read from, if any.
    pub config_file: Option<String>,
    /// sha256 of each input file, keyed by path.
    pub inputs: BTreeMap<String, String>,
    pub seed: Option<u64>,
    pub version: String,
    pub started_at: String,
}

impl RunManifest {
    pub fn new(
        command: &str,
        config: impl Serialize,
        config_file: Option<&Path>,
        seed: Option<u64>,
    ) -> CmdResult<Self> {
        Ok(Self {
            command: command.into(),
            argv: std::env::args().collect(),
            config: serde_json::to_value(config).map_err(|e| usage(format!("config snapshot: {e}")))?,
            config_file: config_file.map(|p| p.display().to_string()),
            inputs: BTreeMap::new(),
            seed,
            version: env!("CARGO_PKG_VERSION").into(),
            started_at: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
        })
    }

    pub fn input(mut self, path: &Path) -> CmdResult<Self> {
        self.inputs.insert(path.display().to_string(), sha256_file(path)?);
        Ok(self)
    }

    pub fn write(&self, path: &Path) -> CmdResult {
        write_json(path, self)
    }
}
