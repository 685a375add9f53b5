//! Output plumbing: full-precision CSV, JSON reports with stable field names,
//! the reproducibility manifest, and structured error files. No file carries
//! a timestamp, so identical configuration and seed reproduce identical bytes.

use std::fmt;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

/// Scientific notation with 17 significant digits; parsing it back recovers
/// the exact double.
pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv(
    path: &Path,
    header: &str,
    rows: impl IntoIterator<Item = String>,
) -> io::Result<()> {
    let mut text = String::with_capacity(4096);
    text.push_str(header);
    text.push('\n');
    for row in rows {
        text.push_str(&row);
        text.push('\n');
    }
    fs::write(path, text)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))?;
    text.push('\n');
    fs::write(path, text)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut hex = String::with_capacity(64);
    for byte in digest {
        hex.push_str(&format!("{byte:02x}"));
    }
    hex
}

/// Value swept into a per-entry configuration.
#[derive(Debug, Clone, Serialize)]
pub struct SweptValue {
    pub key: String,
    pub value: f64,
}

/// Everything needed to reproduce a run bit-identically on one platform:
/// tool version, the resolved configuration (CLI overrides applied), and the
/// hash of the source config file.
#[derive(Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config_path: String,
    pub config_sha256: String,
    pub seed: u64,
    pub jobs: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub swept: Option<SweptValue>,
    pub config: &'a RunConfig,
}

/// Failure classes, ordered by exit code: configuration (2), solver (3),
/// internal (4).
#[derive(Debug)]
pub enum CliError {
    Config(Vec<String>),
    Solver(annulus_core::Error),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(e) => match e {
                annulus_core::Error::InvalidParameter { .. }
                | annulus_core::Error::DimensionMismatch(_)
                | annulus_core::Error::BoundaryViolation(_)
                | annulus_core::Error::ZeroField(_) => 4,
                _ => 3,
            },
            CliError::Internal(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "ConfigError",
            CliError::Solver(e) => match e {
                annulus_core::Error::InvalidParameter { .. } => "InvalidParameter",
                annulus_core::Error::DimensionMismatch(_) => "DimensionMismatch",
                annulus_core::Error::BoundaryViolation(_) => "BoundaryViolation",
                annulus_core::Error::Saturation { .. } => "Saturation",
                annulus_core::Error::NoBracket { .. } => "NoBracket",
                annulus_core::Error::NewtonDiverged { .. } => "NewtonDiverged",
                annulus_core::Error::InadmissibleProfile { .. } => "InadmissibleProfile",
                annulus_core::Error::NoSignChange { .. } => "NoSignChange",
                annulus_core::Error::GeometryViolated(_) => "GeometryViolated",
                annulus_core::Error::IterationCap { .. } => "IterationCap",
                annulus_core::Error::BracketExpansion { .. } => "BracketExpansion",
                annulus_core::Error::ZeroField(_) => "ZeroField",
            },
            CliError::Internal(_) => "Internal",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(errs) => {
                write!(f, "invalid configuration")?;
                for e in errs {
                    write!(f, "\n  {e}")?;
                }
                Ok(())
            }
            CliError::Solver(e) => write!(f, "{e}"),
            CliError::Internal(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<annulus_core::Error> for CliError {
    fn from(e: annulus_core::Error) -> Self {
        CliError::Solver(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Internal(format!("i/o failure: {e}"))
    }
}

#[derive(Serialize)]
struct ErrorFile<'a> {
    exit_code: u8,
    kind: &'static str,
    message: String,
    #[serde(skip_serializing_if = "<[String]>::is_empty")]
    details: &'a [String],
}

/// Write `error.json` describing the failure; best-effort, errors ignored.
pub fn write_error_file(dir: &Path, err: &CliError) {
    let empty: &[String] = &[];
    let details = match err {
        CliError::Config(errs) => errs.as_slice(),
        _ => empty,
    };
    let file = ErrorFile {
        exit_code: err.exit_code(),
        kind: err.kind(),
        message: err.to_string(),
        details,
    };
    let _ = write_json(&dir.join("error.json"), &file);
}
