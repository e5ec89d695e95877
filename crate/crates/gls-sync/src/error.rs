use thiserror::Error;

#[derive(Debug, Error)]
pub enum GlsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("integration diverged at step {step} (t = {t}): component magnitude exceeded {limit:e}")]
    Diverged { step: usize, t: f64, limit: f64 },

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("empty analysis window")]
    EmptyWindow,
}

pub type Result<T> = std::result::Result<T, GlsError>;
