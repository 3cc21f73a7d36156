use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TensorError {
    #[error("tensor is not positive definite (pivot {pivot} = {value:e})")]
    NotPositiveDefinite { pivot: usize, value: f64 },
    #[error("singular dense system (pivot column {column})")]
    SingularSystem { column: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("smoothing length must be positive, got {0}")]
    NonPositiveLength(f64),
    #[error("dimension {0} is not supported here")]
    UnsupportedDimension(usize),
    #[error("lattice axis {axis} admits no particles")]
    EmptyDomain { axis: usize },
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("particle {0} has an anisotropic smoothing tensor")]
    AnisotropicKernelUnsupported(usize),
    #[error("reference field is identically zero")]
    ZeroReference,
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("field total mass is not positive")]
    NonPositiveMass,
    #[error("unknown field `{0}`")]
    UnknownField(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("i/o failure on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed file {path}: {message}")]
    Malformed { path: String, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
