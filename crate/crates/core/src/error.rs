use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: must be positive and finite")]
    InvalidParam { name: &'static str, value: f64 },

    #[error("grid too coarse: n = {n} (need at least {min})")]
    GridTooCoarse { n: usize, min: usize },

    #[error("invalid grid radius {0}: must be positive and finite")]
    InvalidRadius(f64),

    #[error("non-finite field")]
    NonFinite,

    #[error("field has {got} samples but grid has {expected} nodes")]
    LengthMismatch { expected: usize, got: usize },

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("gauge vector undefined at origin")]
    GaugeAtOrigin,

    #[error("K0 domain: argument must be positive, got {0}")]
    K0Domain(f64),

    #[error("argument out of Bessel range: {0} > {max}", max = crate::bessel::MAX_ARGUMENT)]
    BesselRange(f64),

    #[error("neutral solve failed: singular tridiagonal system")]
    NeutralSolveFailed,

    #[error("invalid cutoff T = {0}: must be positive and finite")]
    InvalidCutoff(f64),

    #[error("no negative direction found; enlarge search family")]
    NoNegativeDirection,

    #[error("endpoint search diverged")]
    EndpointDiverged,

    #[error(
        "stagnation: path maximum stalled for {sweeps} consecutive sweeps and refinement did not reach the tolerance"
    )]
    Stagnation { sweeps: usize },

    #[error("residual not met: {residual:e} after {iterations} iterations")]
    ResidualNotMet { residual: f64, iterations: usize },

    #[error("{0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
