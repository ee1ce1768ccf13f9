use thiserror::Error;

/// Errors produced by the measure, transport and multiscale routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("sequence length {len} is not 1 mod 2^{level} with at least 2^{level}+1 elements")]
    LengthNotDyadic { len: usize, level: u32 },

    #[error("sequence mixes Gaussian and discrete measures")]
    MixedKinds,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid weights: {0}")]
    BadWeights(String),

    #[error("invalid measure: {0}")]
    BadMeasure(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("brute-force oracle limited to 6 atoms per side, got {rows}x{cols}")]
    TooLarge { rows: usize, cols: usize },

    #[error("measure kinds differ")]
    KindMismatch,

    #[error("affine map with slope {slope} <= -1 cannot be pushed forward")]
    DegenerateMap { slope: f64 },

    #[error("bad parameter: {0}")]
    BadParameter(String),

    #[error("cost exponent p = {0} is not supported here (only p = 2)")]
    UnsupportedExponent(f64),

    #[error("detail incompatible with base measure: {0}")]
    IncompatibleDetail(String),

    #[error("sequence too short: need at least {needed} elements, got {len}")]
    TooShort { len: usize, needed: usize },

    #[error("cannot downsample: {0}")]
    BadLength(String),

    #[error("pyramid misaligned: {0}")]
    Misaligned(String),

    #[error("bad experiment spec: {0}")]
    BadSpec(String),

    #[error("vector field is singular at ({x}, {y})")]
    SingularPoint { x: f64, y: f64 },

    #[error("particle {particle} came within 1e-3 of a charge at step {step}")]
    ParticleHitCharge { particle: usize, step: usize },

    #[error("transport solver did not converge after {iterations} pivots")]
    SolverFailure { iterations: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures of the numerical machinery rather than the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::SolverFailure { .. })
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
