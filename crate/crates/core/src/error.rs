use thiserror::Error;

/// Errors produced by graph construction, training, and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("degenerate bandwidth: resolved kernel denominator is {0} (points may coincide)")]
    DegenerateBandwidth(f64),

    #[error("degenerate graph: node {node} has degree {degree}")]
    DegenerateGraph { node: usize, degree: f64 },

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("training diverged at epoch {epoch}: loss = {loss}; gate means = {mu:?}")]
    TrainDiverged {
        epoch: usize,
        loss: f64,
        mu: Vec<f64>,
    },

    #[error(
        "separation insufficient: gamma = {gamma} overflows the bound at r = {r} (fail_prob too small)"
    )]
    SeparationInsufficient { r: f64, gamma: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
