//! Command-line front end for `dicke-core`: TOML configuration, a rayon
//! executor and CSV output.

pub mod cli;
pub mod config;
pub mod output;
pub mod parallel;

pub use dicke_core as core;

use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum RunError {
    /// Bad flags, configuration values or input files. Exit code 2.
    Config(String),
    /// The computation itself failed. Exit code 1.
    Domain(String),
    /// Writing results failed. Exit code 1.
    Io(String),
}

impl RunError {
    /// A core error raised while validating user input.
    pub fn config(e: dicke_core::Error) -> Self {
        RunError::Config(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Domain(_) | RunError::Io(_) => 1,
        }
    }
}

impl From<dicke_core::Error> for RunError {
    fn from(e: dicke_core::Error) -> Self {
        match e {
            dicke_core::Error::InvalidParameter(_) => RunError::Config(e.to_string()),
            e => RunError::Domain(e.to_string()),
        }
    }
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "configuration: {m}"),
            RunError::Domain(m) => f.write_str(m),
            RunError::Io(m) => write!(f, "io: {m}"),
        }
    }
}

impl std::error::Error for RunError {}
