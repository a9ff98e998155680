use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("argument {x} lies within the pole guard of a lattice point")]
    PoleAt { x: f64 },

    #[error("argument {x} outside the domain of {function}")]
    DomainError { function: &'static str, x: f64 },

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("invalid chain specification: {0}")]
    InvalidSpec(String),

    #[error("operation requires a finite chain")]
    RequiresFiniteChain,

    #[error("operation not available for a tabulated interaction")]
    UnsupportedInteraction,

    #[error("dispersion is not monotone on (0, pi): E'({p}) = {slope}")]
    NonMonotoneDispersion { p: f64, slope: f64 },

    #[error("no nonvanishing derivative up to order 4 at p = {at}")]
    ExpansionOrderUndetected { at: f64 },

    #[error("degenerate ground state: mode {mode} has energy equal to the chemical potential")]
    DegenerateGroundState { mode: usize },

    #[error("quadrature did not converge: achieved error {achieved:e}, requested {requested:e}")]
    QuadratureNonConvergence { achieved: f64, requested: f64 },

    #[error("symmetric eigensolver failed on a {dim}x{dim} matrix ({diagnostics})")]
    EigensolverFailure { dim: usize, diagnostics: String },

    #[error("correlation eigenvalue {value} outside [0, 1] beyond clamping band")]
    EigenvalueOutOfRange { value: f64 },

    #[error("chain of {sites} sites exceeds the dense cap of {max}")]
    SizeCap { sites: usize, max: usize },

    #[error("spectrum mismatch: worst deviation {worst:e} at index {index}")]
    SpectrumMismatch { worst: f64, index: usize },

    #[error("operation not defined in regime {0}")]
    InvalidRegime(&'static str),

    #[error("extremum classification ambiguous at lambda = {lambda}: {reason}")]
    ClassificationAmbiguous { lambda: f64, reason: String },

    #[error("calibration file: {0}")]
    Calibration(String),
}

pub type Result<T> = std::result::Result<T, Error>;
