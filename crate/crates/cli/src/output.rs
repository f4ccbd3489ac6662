//! Output plumbing: resolved run specifications, deterministic float
//! formatting, and atomic file writes.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use frameless_core::{ProtocolConfig, Schedule};

/// Environment variable naming the default directory for relative output
/// paths.
pub const OUT_DIR_ENV: &str = "FRAMELESS_OUT_DIR";

/// Fully resolved invocation, embedded in every output file.
#[derive(Debug, Clone, Serialize, Default)]
pub struct RunSpec {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_star: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_from: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_to: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_step: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trials: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub prune_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_from: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_to: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta2_from: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta2_to: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_n: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_m: Option<u32>,
    pub format: String,
}

impl RunSpec {
    pub fn with_config(mut self, config: &ProtocolConfig) -> Self {
        self.n = Some(config.n);
        match config.schedule {
            Schedule::Single { beta } => self.beta = Some(beta),
            Schedule::TwoStage {
                beta1,
                beta2,
                m_star,
            } => {
                self.beta1 = Some(beta1);
                self.beta2 = Some(beta2);
                self.m_star = Some(m_star);
            }
        }
        self
    }
}

/// Round to 12 significant digits. Keeps JSON output stable and readable
/// without committing to the full float wobble.
pub fn sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().expect("scientific round-trip")
}

/// Fixed 12-significant-digit scientific notation for CSV cells.
pub fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

/// A CSV document with a provenance header line.
pub struct CsvDoc {
    buffer: String,
}

impl CsvDoc {
    pub fn new(spec: &RunSpec, header: &str) -> Self {
        let provenance = serde_json::to_string(spec).expect("run spec serializes");
        CsvDoc {
            buffer: format!("# run_spec: {provenance}\n{header}\n"),
        }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.buffer.push_str(&fields.join(","));
        self.buffer.push('\n');
    }

    pub fn finish(self) -> String {
        self.buffer
    }
}

pub fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("output serializes");
    text.push('\n');
    text
}

/// Write to stdout (no path) or atomically to a file. Relative paths are
/// resolved under `FRAMELESS_OUT_DIR` when that variable is set.
pub fn emit(path: Option<&Path>, content: &str) -> std::io::Result<()> {
    match path {
        None => {
            print!("{content}");
            std::io::stdout().flush()
        }
        Some(path) => {
            let target = resolve_out_path(path);
            if let Some(parent) = target.parent() {
                if !parent.as_os_str().is_empty() {
                    fs::create_dir_all(parent)?;
                }
            }
            let tmp = target.with_extension("tmp");
            fs::write(&tmp, content)?;
            fs::rename(&tmp, &target)
        }
    }
}

fn resolve_out_path(path: &Path) -> PathBuf {
    if path.is_relative() {
        if let Ok(dir) = std::env::var(OUT_DIR_ENV) {
            if !dir.is_empty() {
                return PathBuf::from(dir).join(path);
            }
        }
    }
    path.to_path_buf()
}
