use thiserror::Error;

use crate::camera::CameraEstimate;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error: {0}")]
    Schema(String),

    #[error("degenerate pose: {0}")]
    DegeneratePose(String),

    #[error("degenerate local frame: {0}")]
    Frame(String),

    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("data error: {0}")]
    Data(String),

    /// Proximal-gradient coding stopped at its iteration cap. The last
    /// iterate is kept so callers can still use it.
    #[error("sparse coding did not converge within {iterations} iterations")]
    CodingNotConverged { iterations: usize, last: Vec<f64> },

    #[error("singular geometry: {0}")]
    SingularGeometry(String),

    #[error("camera estimation did not converge within {} iterations", .0.diagnostics.iterations)]
    CameraNotConverged(Box<CameraEstimate>),

    #[error("pipeline error: {0}")]
    Pipeline(String),

    #[error("parse error in {context}: {message}")]
    Parse { context: String, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(context: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Parse {
            context: context.into(),
            message: message.into(),
        }
    }
}
