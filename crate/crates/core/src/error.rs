use thiserror::Error;

use crate::field::Rep;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("unsupported derivative order {0} (expected 0, 1 or 2)")]
    UnsupportedOrder(u8),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("field is in {found:?} representation, expected {expected:?}")]
    WrongRepresentation { expected: Rep, found: Rep },

    #[error("time series is empty")]
    EmptySeries,

    #[error("time series is malformed: {0}")]
    MalformedSeries(String),

    #[error("exhaustive oracle supports at most 14 samples, got {0}")]
    SeriesTooLong(usize),

    #[error("quadrature budget of {given} nodes is below the phase-resolution minimum {required}")]
    NodeBudget { required: usize, given: usize },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("shell k={k} is not resolvable on a grid with L={l} (need 2^(k-2) >= 2/L)")]
    Unresolvable { k: i32, l: f64 },

    #[error("transversality fails: gradients coincide at xi=({xi:?}), eta=({eta:?})")]
    Transversality { xi: [f64; 2], eta: [f64; 2] },

    #[error("Picard iteration diverges: ratio {ratio} at iteration {iteration}")]
    Divergence { iteration: usize, ratio: f64 },

    #[error("step rejected at t={t}: L2 norm grew from {before} to {after}")]
    StepRejected { t: f64, before: f64, after: f64 },

    #[error("norm overflow: {0}")]
    Overflow(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
