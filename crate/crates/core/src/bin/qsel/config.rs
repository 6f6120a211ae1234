use std::path::Path;
use std::time::Duration;

use anyhow::{Context, Result};
use serde::Deserialize;

use qsel::acquisition::{CollectOptions, RetryPolicy, DEFAULT_N_AUG};
use qsel::optimizer::{GaConfig, DEFAULT_MAX_NQ};
use qsel::question_grid::DEFAULT_GRID_CAP;

/// Settings file passed with `--config`. Command-line flags win.
#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub ga: GaConfig,
    pub n_aug: usize,
    pub grid_cap: usize,
    pub max_in_flight: usize,
    pub retry_attempts: u32,
    pub retry_base_delay_ms: u64,
    pub request_timeout_ms: u64,
    pub max_nq: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        let collect = CollectOptions::default();
        RunConfig {
            ga: GaConfig::default(),
            n_aug: DEFAULT_N_AUG,
            grid_cap: DEFAULT_GRID_CAP,
            max_in_flight: collect.max_in_flight,
            retry_attempts: collect.retry.attempts,
            retry_base_delay_ms: collect.retry.base_delay.as_millis() as u64,
            request_timeout_ms: 60_000,
            max_nq: DEFAULT_MAX_NQ,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn collect_options(&self) -> CollectOptions {
        CollectOptions {
            max_in_flight: self.max_in_flight,
            retry: RetryPolicy {
                attempts: self.retry_attempts,
                base_delay: Duration::from_millis(self.retry_base_delay_ms),
            },
        }
    }
}
