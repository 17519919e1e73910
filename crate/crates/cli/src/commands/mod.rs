pub mod encode;
pub mod eval;
pub mod fewshot;
pub mod stats;
pub mod synth;
pub mod train;

use std::path::Path;

use labelspan::tasks::{TaskConfig, TaskSchema};

use crate::failure::{from_lib, CmdResult};
use crate::files::read_config;

/// Loads a task schema from a TOML or JSON task configuration.
pub fn load_schema(path: &Path) -> CmdResult<(TaskConfig, TaskSchema)> {
    let config: TaskConfig = read_config(path)?;
    let schema = config.clone().build().map_err(from_lib)?;
    Ok((config, schema))
}

use labelspan::harness::{ToyTaggerConfig, TrainConfig};
use serde::{Deserialize, Serialize};

/// Config file layout. Every section and field is optional; command-line
/// flags take precedence over file values, which take precedence over
/// built-in defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub synth: SynthFile,
    pub train: Option<TrainConfig>,
    pub data: DataFile,
    pub tagger: Option<ToyTaggerConfig>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthFile {
    pub n: Option<usize>,
    pub parallelism: Option<usize>,
    pub max_retries: Option<u32>,
    pub model: Option<String>,
    pub temperature: Option<f64>,
    pub api_base: Option<String>,
    pub api_key_env: Option<String>,
    pub timeout_secs: Option<u64>,
}

#[derive(Debug, Default, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataFile {
    pub subsample: Option<usize>,
    pub negatives: Option<usize>,
}

pub fn load_file_config(path: Option<&Path>) -> CmdResult<FileConfig> {
    path.map(read_config).transpose().map(Option::unwrap_or_default)
}
