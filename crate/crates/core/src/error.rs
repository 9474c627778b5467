use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("amplitudes (alpha1, alpha2) must not both vanish")]
    ZeroAmplitudes,
    #[error("photon number must be at least 1, got {0}")]
    PhotonNumber(usize),
    #[error("invalid coefficient matrix: {0}")]
    Coefficients(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("velocity undefined at ({x1}, {x2}): point lies inside the node guard")]
    SeedAtNode { x1: f64, x2: f64 },
    #[error("loop vertex ({x1}, {x2}) lies on a node (density below guard)")]
    NodeOnLoop { x1: f64, x2: f64 },
    #[error("circulation refinement exceeded {0} vertices")]
    RefinementLimit(usize),
    #[error("Glauber states have no nodes (the Gaussian never vanishes)")]
    GlauberHasNoNodes,
    #[error("operation requires a number-basis state")]
    RequiresNumberBasis,
    #[error("operation requires a state with fixed total photon number")]
    NotStationary,
    #[error("equilibrium at ({x1}, {x2}) is not a saddle")]
    NotASaddle { x1: f64, x2: f64 },
    #[error("stationary point at ({x1}, {x2}) has same-sign eigenvalues (source or sink of the phase)")]
    SourceOrSink { x1: f64, x2: f64 },
    #[error("rejection sampler acceptance {0:.3e} below 1e-4")]
    LowAcceptance(f64),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
