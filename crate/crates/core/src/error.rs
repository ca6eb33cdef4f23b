use std::io;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("no usable nodes")]
    NoUsableNodes,

    #[error("row {row} has zero weight sum")]
    ZeroRowSum { row: usize },

    #[error("directed graph must be row-normalized for this operation")]
    NotNormalized,

    #[error("objective {kind} requires a {expected} graph")]
    DirectednessMismatch { kind: String, expected: &'static str },

    #[error("linear solver did not converge after {iterations} iterations (relative residual {residual:e})")]
    SolverDidNotConverge { iterations: usize, residual: f64 },

    #[error("zero variance")]
    ZeroVariance,

    #[error("pagerank did not converge (final delta {delta:e})")]
    PageRankDidNotConverge { delta: f64 },

    #[error("training diverged at epoch {epoch}")]
    TrainingDiverged { epoch: usize },

    #[error("eigendecomposition failed: {0}")]
    Eigen(String),

    #[error("sampling set does not span frequency space")]
    SamplingSetDegenerate,

    #[error("degenerate optimum: denominator objective is zero")]
    DegenerateOptimum,

    #[error("row {row} has empty support")]
    EmptySupport { row: usize },

    #[error("iterate {iteration} left the feasible set: {detail}")]
    Infeasible { iteration: usize, detail: String },

    #[error("optimizer iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
