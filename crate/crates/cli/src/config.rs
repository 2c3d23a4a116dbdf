use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::CliError;

/// Settings shared by all subcommands. Values come from flags, then the
/// optional JSON config file, then these defaults.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub root: Option<PathBuf>,
    pub metadata: Option<PathBuf>,
    pub env: Vec<String>,
    pub max_tokens: usize,
    pub test_size: usize,
    pub folds: usize,
    pub seed: u64,
    pub subsample_sizes: Vec<usize>,
    pub filter: Option<PathBuf>,
    pub symbols: Option<PathBuf>,
    pub out_dir: PathBuf,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            root: None,
            metadata: None,
            env: vec![defitex::extract::DEFAULT_ENV.to_string()],
            max_tokens: defitex::dataset::DEFAULT_MAX_TOKENS,
            test_size: 1024,
            folds: 10,
            seed: 42,
            subsample_sizes: vec![1024, 2048, 10240],
            filter: None,
            symbols: None,
            out_dir: PathBuf::from("."),
        }
    }
}

impl PipelineConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::schema(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.max_tokens < 1 {
            return Err(CliError::schema("max_tokens must be at least 1"));
        }
        if self.folds < 2 {
            return Err(CliError::schema("folds must be at least 2"));
        }
        Ok(())
    }

    pub fn out(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }
}
