//! Settings for `convergence`: an optional JSON file overlaid by command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use svie_core::problem::{problem_exponent, PAPER_SIN_COS};
use svie_core::SchemeTag;

use crate::CliError;

pub const DEFAULT_LEVELS: [usize; 4] = [16, 32, 64, 128];
pub const DEFAULT_REF: usize = 256;
pub const DEFAULT_PATHS: usize = 500;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_OUT: &str = "errors.csv";

/// Every key is optional; absent keys fall back to flags, then defaults.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub problem: Option<String>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub levels: Option<Vec<usize>>,
    #[serde(rename = "ref")]
    pub reference: Option<usize>,
    pub paths: Option<usize>,
    pub seed: Option<u64>,
    /// One scheme name, or several separated by commas.
    pub scheme: Option<String>,
    pub out: Option<PathBuf>,
    pub plot: Option<PathBuf>,
}

impl FileConfig {
    /// Fields set in `flags` win over fields set here.
    pub fn overlay(self, flags: FileConfig) -> FileConfig {
        FileConfig {
            problem: flags.problem.or(self.problem),
            alpha: flags.alpha.or(self.alpha),
            beta: flags.beta.or(self.beta),
            levels: flags.levels.or(self.levels),
            reference: flags.reference.or(self.reference),
            paths: flags.paths.or(self.paths),
            seed: flags.seed.or(self.seed),
            scheme: flags.scheme.or(self.scheme),
            out: flags.out.or(self.out),
            plot: flags.plot.or(self.plot),
        }
    }
}

/// Fully resolved `convergence` settings, echoed as JSON before the run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub problem: String,
    pub alpha: f64,
    pub beta: f64,
    pub levels: Vec<usize>,
    #[serde(rename = "ref")]
    pub reference: usize,
    pub paths: usize,
    pub seed: u64,
    #[serde(serialize_with = "schemes_as_names")]
    pub scheme: Vec<SchemeTag>,
    pub out: PathBuf,
    pub plot: Option<PathBuf>,
}

fn schemes_as_names<S: serde::Serializer>(schemes: &[SchemeTag], s: S) -> Result<S::Ok, S::Error> {
    let names: Vec<&str> = schemes.iter().map(|t| t.cli_name()).collect();
    s.serialize_str(&names.join(","))
}

pub fn load_config(path: &Path) -> Result<FileConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("config {}: {e}", path.display())))
}

pub fn parse_schemes(list: &str) -> Result<Vec<SchemeTag>, CliError> {
    let mut schemes = Vec::new();
    for name in list.split(',').map(str::trim) {
        let tag: SchemeTag = name.parse().map_err(CliError::Usage)?;
        if !schemes.contains(&tag) {
            schemes.push(tag);
        }
    }
    Ok(schemes)
}

impl Settings {
    pub fn resolve(merged: FileConfig) -> Result<Settings, CliError> {
        let alpha = merged
            .alpha
            .ok_or_else(|| CliError::Usage("alpha is required (--alpha or config)".into()))?;
        let beta = merged
            .beta
            .ok_or_else(|| CliError::Usage("beta is required (--beta or config)".into()))?;
        problem_exponent("alpha", alpha)?;
        problem_exponent("beta", beta)?;
        let scheme = parse_schemes(merged.scheme.as_deref().unwrap_or("rmilstein"))?;
        Ok(Settings {
            problem: merged.problem.unwrap_or_else(|| PAPER_SIN_COS.to_string()),
            alpha,
            beta,
            levels: merged.levels.unwrap_or_else(|| DEFAULT_LEVELS.to_vec()),
            reference: merged.reference.unwrap_or(DEFAULT_REF),
            paths: merged.paths.unwrap_or(DEFAULT_PATHS),
            seed: merged.seed.unwrap_or(DEFAULT_SEED),
            scheme,
            out: merged.out.unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
            plot: merged.plot,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("settings serialize")
    }
}
