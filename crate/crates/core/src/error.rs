use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("structural mismatch: expected {expected}, found {found}")]
    Structural { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("singular evaluation ({context}): offending factor {factor:e}")]
    Singularity { context: String, factor: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("table range exceeded: need radius {required}, table covers {available}")]
    Range { required: f64, available: f64 },

    #[error("iteration diverged: {consecutive} consecutive ratios above 1 (last {last_ratio}); data too large for the contraction ball")]
    Divergence { consecutive: usize, last_ratio: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
