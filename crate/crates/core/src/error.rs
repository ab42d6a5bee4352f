use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("invalid utility values: {0}")]
    InvalidValues(String),

    #[error("invalid utility order: {0}")]
    InvalidOrder(String),

    #[error("invalid mechanism: {0}")]
    InvalidMechanism(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("utility threshold h={h} outside [1, {m}]")]
    ThresholdOutOfRange { h: usize, m: usize },

    #[error("output column {0} is not in the output support")]
    NotInSupport(usize),

    #[error("no input of output column {column} has utility order >= {h}")]
    EmptyQualifyingSet { column: usize, h: usize },

    #[error("privacy budget {eps} >= -log p_min = {limit}; every mechanism already satisfies it")]
    BudgetDegenerate { eps: f64, limit: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("row {row} has no free cell; program is structurally infeasible")]
    StructurallyInfeasible { row: usize },

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
