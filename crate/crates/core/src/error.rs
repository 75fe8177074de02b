use std::fmt;

use thiserror::Error;

/// Which factor's gram matrix failed to factorize.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FactorSide {
    /// `RᵀR`, used when updating `L`.
    Right,
    /// `LᵀL`, used when updating `R`.
    Left,
}

impl fmt::Display for FactorSide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FactorSide::Right => f.write_str("R (gram RᵀR)"),
            FactorSide::Left => f.write_str("L (gram LᵀL)"),
        }
    }
}

#[derive(Debug, Error)]
pub enum LrmcError {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("invalid rank: {0}")]
    InvalidRank(String),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("singular factor {side}: condition estimate {condition:e}{}", at_iteration(*.iteration))]
    SingularFactor {
        side: FactorSide,
        condition: f64,
        iteration: Option<usize>,
    },

    #[error("rank collapse at initialization: sigma_r = {0:e}")]
    RankCollapse(f64),

    #[error("configuration error: {0}")]
    Configuration(String),

    #[error("schedule exhausted: iteration {k} requested but the feed-forward depth is {depth} and no recurrent tail is configured")]
    ScheduleExhausted { k: usize, depth: usize },

    #[error("format error at {location}: {message}")]
    Format { location: String, message: String },

    #[error("schema error at `{field}`: {message}")]
    Schema { field: String, message: String },

    #[error("search failure: {0}")]
    SearchFailure(String),

    #[error("training diverged in stage {stage}: {message}")]
    TrainingDiverged { stage: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn at_iteration(iteration: Option<usize>) -> String {
    iteration
        .map(|k| format!(" at iteration {k}"))
        .unwrap_or_default()
}

impl LrmcError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        LrmcError::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn format_at_line(line: usize, column: usize, message: impl Into<String>) -> Self {
        LrmcError::Format {
            location: format!("line {line}, column {column}"),
            message: message.into(),
        }
    }

    pub(crate) fn format_at_byte(offset: usize, message: impl Into<String>) -> Self {
        LrmcError::Format {
            location: format!("byte offset {offset}"),
            message: message.into(),
        }
    }

    pub(crate) fn schema(field: impl Into<String>, message: impl Into<String>) -> Self {
        LrmcError::Schema {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Attaches an iteration index to a singular-factor error; other errors pass through.
    pub fn at_iteration(self, k: usize) -> Self {
        match self {
            LrmcError::SingularFactor {
                side, condition, ..
            } => LrmcError::SingularFactor {
                side,
                condition,
                iteration: Some(k),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, LrmcError>;
