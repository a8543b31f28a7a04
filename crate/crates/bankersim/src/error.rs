//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A spec failed its construction-time invariants.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// Linear system is singular beyond the expected rank-one deficiency,
    /// i.e. the environment chain is not irreducible.
    #[error("singular system: {0}")]
    SingularSystem(String),

    /// No power of the transition matrix up to the search bound is strictly
    /// positive, so no Doeblin certificate exists (chain periodic/reducible).
    #[error("no Doeblin power found up to m = {searched}")]
    NoDoeblinPower { searched: usize },

    /// A right-hand side that must be centered against the invariant measure
    /// is not.
    #[error("not centered: |mu . g| = {residual:.3e} exceeds {tolerance:.3e}")]
    NotCentered { residual: f64, tolerance: f64 },

    /// Point lies outside the domain an operation is defined on.
    #[error("out of domain: {0}")]
    OutOfDomain(String),

    /// Experiment config could not be parsed or is inconsistent.
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}
