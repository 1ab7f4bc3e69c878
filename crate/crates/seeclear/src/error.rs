use thiserror::Error;

#[derive(Debug, Error)]
pub enum SeeClearError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("schedule violation: {0}")]
    ScheduleViolation(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("image error: {0}")]
    Image(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, SeeClearError>;

impl SeeClearError {
    pub fn dim(msg: impl Into<String>) -> Self {
        SeeClearError::DimensionMismatch(msg.into())
    }

    pub fn arg(msg: impl Into<String>) -> Self {
        SeeClearError::InvalidArgument(msg.into())
    }

    pub fn data(msg: impl Into<String>) -> Self {
        SeeClearError::Data(msg.into())
    }
}
