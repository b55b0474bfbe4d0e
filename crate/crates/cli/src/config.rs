//! Effective run configuration: flags over config file over defaults.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use erw_core::env_model::DEFAULT_TOL_CRITICAL;
use erw_core::regimes::DEFAULT_TOL_BOUNDARY;
use erw_core::rng::DEFAULT_SEED;
use erw_core::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalFlags {
    /// Model file (JSON with K, p, eta).
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Example family, e.g. `geometric:alpha=0.5,p1=0.75`; for `sweep` a family kind.
    #[arg(long, global = true)]
    pub family: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub paths: Option<usize>,
    #[arg(long, global = true)]
    pub horizon: Option<u64>,
    /// Output file (stdout if absent).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true)]
    pub tol_critical: Option<f64>,
    #[arg(long, global = true)]
    pub tol_boundary: Option<f64>,
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// JSON config file with any of the keys above (snake_case).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    model: Option<PathBuf>,
    family: Option<String>,
    seed: Option<u64>,
    paths: Option<usize>,
    horizon: Option<u64>,
    out: Option<PathBuf>,
    format: Option<Format>,
    tol_critical: Option<f64>,
    tol_boundary: Option<f64>,
    threads: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub model: Option<PathBuf>,
    pub family: Option<String>,
    pub seed: u64,
    pub paths: Option<usize>,
    pub horizon: Option<u64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub tol_critical: f64,
    pub tol_boundary: f64,
    pub threads: Option<usize>,
    pub config: Option<PathBuf>,
}

impl RunConfig {
    pub fn resolve(flags: &GlobalFlags) -> Result<RunConfig> {
        let file = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str::<FileConfig>(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?
            }
            None => FileConfig::default(),
        };
        Ok(RunConfig {
            model: flags.model.clone().or(file.model),
            family: flags.family.clone().or(file.family),
            seed: flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED),
            paths: flags.paths.or(file.paths),
            horizon: flags.horizon.or(file.horizon),
            out: flags.out.clone().or(file.out),
            format: flags.format.or(file.format),
            tol_critical: flags.tol_critical.or(file.tol_critical).unwrap_or(DEFAULT_TOL_CRITICAL),
            tol_boundary: flags.tol_boundary.or(file.tol_boundary).unwrap_or(DEFAULT_TOL_BOUNDARY),
            threads: flags.threads.or(file.threads),
            config: flags.config.clone(),
        })
    }

    /// `# key=value` lines for CSV headers.
    pub fn comments(&self) -> Vec<(String, String)> {
        let v = serde_json::to_value(self).unwrap_or_default();
        let mut out = Vec::new();
        if let Some(map) = v.as_object() {
            for (k, v) in map {
                if v.is_null() {
                    continue;
                }
                let s = match v {
                    serde_json::Value::String(s) => s.clone(),
                    other => other.to_string(),
                };
                out.push((k.clone(), s));
            }
        }
        out
    }
}
