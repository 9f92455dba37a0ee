use std::path::{Path, PathBuf};

use serde::Deserialize;
use vqakit::assemble::{BalancePolicy, DEFAULT_RATIOS};

use crate::CliError;

/// Settings that may come from `--config`. Any flag given on the command
/// line overrides the file.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub ratios: Option<[f64; 3]>,
    pub balance: Option<bool>,
    pub tolerance: Option<usize>,
    pub policy: Option<BalancePolicy>,
    pub catalog: Option<PathBuf>,
    pub negatives: Option<bool>,
    pub open_questions: Option<bool>,
    pub min_question_words: Option<usize>,
    pub vague_questions: Option<Vec<String>>,
    pub host: Option<String>,
    pub port: Option<u16>,
    pub images: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
}

pub const DEFAULT_SEED: u64 = 0;
pub const DEFAULT_TOLERANCE: usize = 1;

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<RunConfig, CliError> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }

    pub fn seed(&self, flag: Option<u64>) -> u64 {
        flag.or(self.seed).unwrap_or(DEFAULT_SEED)
    }

    pub fn ratios(&self, flag: Option<&[f64]>) -> Result<[f64; 3], CliError> {
        match flag {
            Some(v) => v
                .try_into()
                .map_err(|_| CliError::Usage(format!("--ratios needs three values, got {}", v.len()))),
            None => Ok(self.ratios.unwrap_or(DEFAULT_RATIOS)),
        }
    }

    pub fn tolerance(&self, flag: Option<usize>) -> usize {
        flag.or(self.tolerance).unwrap_or(DEFAULT_TOLERANCE)
    }

    pub fn policy(&self, flag: Option<BalancePolicy>) -> BalancePolicy {
        flag.or(self.policy).unwrap_or(BalancePolicy::Subsample)
    }

    pub fn catalog(&self, flag: Option<&Path>) -> Option<PathBuf> {
        flag.map(Path::to_path_buf).or_else(|| self.catalog.clone())
    }
}
