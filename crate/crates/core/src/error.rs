use std::fmt;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Pipeline stage attached to errors raised inside [`crate::select::select_model`]
/// and the Monte Carlo harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Detrend,
    Design,
    InitialFit,
    LongRunVariance,
    Weights,
    Path,
    Tuning,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Detrend => "detrend",
            Stage::Design => "design",
            Stage::InitialFit => "initial-fit",
            Stage::LongRunVariance => "long-run-variance",
            Stage::Weights => "weights",
            Stage::Path => "path",
            Stage::Tuning => "tuning",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("insufficient data for {what}: need at least {needed} observations, got {got}")]
    InsufficientData {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("design matrix is rank deficient: column {column} is collinear with the preceding columns")]
    RankDeficient { column: usize },

    #[error("degenerate series: {0}")]
    Degenerate(String),

    #[error("long-run variance unstable: |1 - sum of lag coefficients| = {denominator:.3e}")]
    UnstableLongRun { denominator: f64 },

    #[error("critical value not bundled: {0}")]
    NotBundled(String),

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    /// True for errors caused by the caller's input rather than by numerics.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::InvalidArgument(_)
            | Error::InsufficientData { .. }
            | Error::Config(_)
            | Error::Io(_)
            | Error::Csv(_)
            | Error::Json(_) => true,
            Error::Stage { source, .. } => source.is_input_error(),
            Error::RankDeficient { .. }
            | Error::Degenerate(_)
            | Error::UnstableLongRun { .. }
            | Error::NotBundled(_) => false,
        }
    }

    /// Innermost stage label, if any.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, source } => source.stage().or(Some(*stage)),
            _ => None,
        }
    }
}

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| match e {
            // keep the innermost label
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage,
                source: Box::new(e),
            },
        })
    }
}
