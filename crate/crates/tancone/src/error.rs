use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("grade overflow: {0} + {1} > 3")]
    GradeOverflow(usize, usize),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("not calibrated: defect {0:e}")]
    NotCalibrated(f64),
    #[error("degenerate triangle {0} (area {1:e})")]
    DegenerateTriangle(usize, f64),
    #[error("not a cycle: {0}")]
    NotCycle(String),
    #[error("irregular slice radius {0}")]
    IrregularSlice(f64),
    #[error("point outside the domain of the primitive: {0}")]
    ExcludedBall(String),
    #[error("no candidate radius qualified")]
    NoGoodSlice,
    #[error("empty slice at radius {0}")]
    EmptySlice(f64),
    #[error("fit failed: {0}")]
    Fit(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Invalid(msg.into()))
}
