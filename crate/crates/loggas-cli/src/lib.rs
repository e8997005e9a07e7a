//! Command-line harness around the `loggas` library: TOML-configured
//! experiment runners with manifested, atomically written output
//! directories, a dependency-free SVG renderer for quick looks, and the
//! acceptance suite.

pub mod acceptance;
pub mod config;
pub mod manifest;
pub mod runners;
pub mod svg;

use std::fmt;

/// Failure classes map one-to-one onto process exit codes: a failed check
/// exits 1, a configuration problem exits 2, and a numerical or runtime
/// breakdown exits 3.
#[derive(Debug)]
pub enum Failure {
    Config(String),
    Check(String),
    Numeric(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Check(_) => 1,
            Failure::Config(_) => 2,
            Failure::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) => write!(f, "configuration error: {m}"),
            Failure::Check(m) => write!(f, "check failed: {m}"),
            Failure::Numeric(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for Failure {}

impl From<loggas::Error> for Failure {
    fn from(e: loggas::Error) -> Self {
        match e {
            loggas::Error::Config(_) | loggas::Error::Domain(_) => Failure::Config(e.to_string()),
            other => Failure::Numeric(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Numeric(format!("io: {e}"))
    }
}
