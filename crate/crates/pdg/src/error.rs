use thiserror::Error;

use crate::model::Violation;

#[derive(Debug, Error)]
pub enum PdgError {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),

    #[error("duplicate edge label `{0}`")]
    DuplicateEdgeLabel(String),

    #[error("variable `{0}` is declared with conflicting value lists")]
    VariableClash(String),

    #[error("edge `{label}`: {detail}")]
    ArityMismatch { label: String, detail: String },

    #[error("invalid model:\n{}", fmt_violations(.0))]
    Invalid(Vec<Violation>),

    #[error("distribution is defined over a different world space than the model")]
    SpaceMismatch,

    #[error("dense table over {size} worlds exceeds the cap of {cap}")]
    TooManyWorlds { size: usize, cap: usize },

    #[error("empty feasible support: every world is forbidden by a zero in some cpd")]
    EmptySupport,

    #[error("{0}")]
    InvalidInput(String),

    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
}

fn fmt_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| format!("  - {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

pub type Result<T> = std::result::Result<T, PdgError>;
