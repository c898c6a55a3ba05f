//! Error classification for exit codes: 2 for unusable input, 3 for data
//! that parsed but cannot be modeled, 4 for violated internal invariants.

use std::fmt;

use urmx_core::{ClusterError, RhythmError};

#[derive(Debug)]
pub enum CliError {
    /// Missing, malformed, or inconsistent input; exit code 2.
    Input(String),
    /// Statistically degenerate or unusable data; exit code 3.
    Data(String),
    /// A bug surfaced; exit code 4.
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Data(_) => 3,
            CliError::Internal(_) => 4,
        }
    }

    pub fn input(context: &str, err: impl fmt::Display) -> Self {
        CliError::Input(format!("{context}: {err}"))
    }

    pub fn data(context: &str, err: impl fmt::Display) -> Self {
        CliError::Data(format!("{context}: {err}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "input error: {msg}"),
            CliError::Data(msg) => write!(f, "data error: {msg}"),
            CliError::Internal(msg) => write!(f, "internal error: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

/// Degeneracy-style failures are data errors; everything else about a
/// rhythm model points at the inputs.
pub fn classify_rhythm(context: &str, e: RhythmError) -> CliError {
    match e {
        RhythmError::TooFewSamples { .. }
        | RhythmError::DegenerateData
        | RhythmError::NonPositiveDuration { .. }
        | RhythmError::ConvergenceFailure(_)
        | RhythmError::ImplausibleMean(_)
        | RhythmError::EmptyCorpus => CliError::data(context, e),
        other => CliError::input(context, other),
    }
}

pub fn classify_cluster(context: &str, e: ClusterError) -> CliError {
    match e {
        ClusterError::AmbiguousLabeling(_) | ClusterError::EmptyCorpus => {
            CliError::data(context, e)
        }
        other => CliError::input(context, other),
    }
}
