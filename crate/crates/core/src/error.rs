use thiserror::Error;

/// Errors raised by the geometry, chart and flow routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeomError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("unsupported grade {0}: only bivectors are handled")]
    UnsupportedGrade(usize),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate flag: no unit vector is orthogonal to all {0} inputs")]
    DegenerateFlag(usize),

    #[error("insufficient sampling: {kept} samples survived, need at least {needed}")]
    InsufficientSampling { kept: usize, needed: usize },

    #[error("zero tangent vector")]
    ZeroTangent,

    #[error("invalid direction: expected a rank-1 tangent, got rank {0}")]
    InvalidDirection(usize),

    #[error("point is not on the quadric (residual {0:.3e})")]
    NotOnQuadric(f64),

    #[error("point lies on the chart hyperplane z1 - i z2 = 0 (margin {0:.3e})")]
    ChartDomain(f64),

    #[error("immersion is degenerate at {0:?}")]
    ImmersionDegeneracy(Vec<f64>),

    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, GeomError>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(GeomError::InvalidInput(msg.into()))
}
