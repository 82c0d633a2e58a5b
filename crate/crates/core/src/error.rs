use thiserror::Error;

/// Errors raised by the link engine, its optimizer and the scenario loader.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("channel plan: {0}")]
    Grid(String),

    #[error("non-positive power in channel {channel} at z = {z_km} km")]
    NonPositivePower { channel: usize, z_km: f64 },

    #[error("counter-pumped span did not converge after {iterations} sweeps (residual {residual_db} dB)")]
    NotConverged { iterations: usize, residual_db: f64 },

    #[error(
        "required amplifier gain < 1 for channel {channel} in span {span} (gain {gain_db} dB)"
    )]
    GainBelowUnity {
        channel: usize,
        span: usize,
        gain_db: f64,
    },

    #[error("optimizer: {0}")]
    Optimizer(String),

    #[error("config {field}: {message}")]
    Config { field: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::NotConverged { .. } | Error::NonPositivePower { .. } | Error::Optimizer(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
