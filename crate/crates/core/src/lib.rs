//! Two-species hard-core reaction-diffusion particle systems on graphs.
//!
//! The crate builds microscopic Markov generators whose hydrodynamic limit is a
//! prescribed reaction-diffusion system with a full (non-diagonal) diffusion
//! matrix, simulates them exactly, and solves the macroscopic equations.
//!
//! Species are labelled `0` (empty), `1` and `2`. Vertex indices are 0-based.

pub mod analytic;
pub mod coefficients;
pub mod duality;
pub mod experiments;
pub mod model;
pub mod rates;
pub mod simulator;

pub use analytic::{BoundaryDensities, DiscreteSystem, StationarySolution, UphillVerdict};
pub use coefficients::{CoefficientSet, MatchReport, MeanState, SiteCoefficientSet};
pub use model::{Configuration, EdgeRateMatrix, Graph, ProcessModel, SiteRateMatrix};
pub use rates::{MacroParams, Side, ValidityVerdict};
pub use simulator::{SimConfig, SimStats};

/// Absolute tolerance used for generator row sums and exact matching identities.
pub const TOL: f64 = 1e-12;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(ValidityVerdict),
    #[error("refused: {0}")]
    Refused(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("serialization: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
