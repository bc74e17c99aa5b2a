use alloc::string::String;

/// Errors raised by the core routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("moment of order {0} is not supported (max 12)")]
    UnsupportedMoment(u32),
    #[error("tolerance must be positive, got {0}")]
    InvalidTolerance(f64),
    #[error("invalid interval ({lo}, {hi})")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("grid step {step} too coarse for interval of length {len}")]
    InvalidGridStep { step: f64, len: f64 },
    #[error("invalid exponent {0}")]
    InvalidExponent(f64),
    #[error("probability {0} outside (0, 1)")]
    InvalidProbability(f64),
    #[error("mesh width {0} must lie in (0, 1)")]
    InvalidMesh(f64),
    #[error("bandwidth grid is empty: j_max = {j_max} < j_min = {j_min}")]
    EmptyBandwidthGrid { j_min: i64, j_max: i64 },
    #[error("invalid constants: {0}")]
    InvalidConstants(String),
    #[error("mesh with {0:e} points is too fine to represent")]
    MeshOverflow(f64),
    #[error("constant is unbounded for exponent {0}")]
    UnboundedConstant(f64),
    #[error("bump radius {radius} overlaps the construction")]
    ConstructionOverlap { radius: f64 },
    #[error("density value {value} at {x} exceeds its sup bound {bound}")]
    CorruptDensity { x: f64, value: f64, bound: f64 },
    #[error("local exponent oracle unavailable for density {0}")]
    OracleUnavailable(String),
    #[error("divergence is infinite: p > 0 where q = 0 near {0}")]
    DivergenceInfinite(f64),
    #[error("need at least 4 observations, got {0}")]
    InsufficientData(usize),
    #[error("observation {index} is not finite")]
    NonFiniteData { index: usize },
    #[error("bandwidth must be positive, got {0}")]
    InvalidBandwidth(f64),
    #[error("point {0} is not on the mesh")]
    OffMesh(f64),
    #[error("point {0} outside [0, 1]")]
    OutOfDomain(f64),
    #[error("bandwidth profile was not built from the second half of this split")]
    CrossSampleContamination,
    #[error("invalid configuration: {0}")]
    InvalidConfiguration(String),
    #[error("sample count must be positive")]
    EmptySample,
    #[error("table does not cover mesh index {0}")]
    TableCoverage(i64),
}

pub type Result<T> = core::result::Result<T, Error>;
