use thiserror::Error;

/// Errors raised anywhere in the fitting, simulation and evaluation pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive definite{}", component_suffix(*.component))]
    NotPositiveDefinite { component: Option<usize> },

    #[error("singular observed block for row {row} (observed columns {pattern:?}, component {component})")]
    SingularBlock {
        row: usize,
        component: usize,
        pattern: Vec<usize>,
    },

    #[error("skew parameters infeasible: 1 - delta' Omega^-1 delta = {value:e}{}", location_suffix(*.row, *.component))]
    SkewInfeasible {
        value: f64,
        row: Option<usize>,
        component: Option<usize>,
    },

    #[error("component {component} collapsed (total responsibility {mass:e})")]
    DegenerateComponent { component: usize, mass: f64 },

    #[error("component {component} skew update is degenerate (sum tau*e2 = {mass:e})")]
    DegenerateSkew { component: usize, mass: f64 },

    #[error("column {column} is never observed")]
    UnobservedColumn { column: usize },

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("momentum {0} GeV/c is outside the supported range")]
    MomentumOutOfRange(f64),

    #[error("training diverged at iteration {iteration}")]
    TrainingDiverged { iteration: usize },

    #[error("species {0} is absent from the sample")]
    MissingSpecies(String),

    #[error("not enough rows: {0}")]
    InsufficientData(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("missing input {}: {hint}", .path.display())]
    MissingInput {
        path: std::path::PathBuf,
        hint: String,
    },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

fn component_suffix(component: Option<usize>) -> String {
    component.map(|k| format!(" (component {k})")).unwrap_or_default()
}

fn location_suffix(row: Option<usize>, component: Option<usize>) -> String {
    match (row, component) {
        (Some(i), Some(k)) => format!(" at row {i}, component {k}"),
        (None, Some(k)) => format!(" in component {k}"),
        (Some(i), None) => format!(" at row {i}"),
        (None, None) => String::new(),
    }
}

pub type Result<T> = std::result::Result<T, Error>;
