use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// A model, integrator or experiment precondition does not hold.
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    /// A caller-supplied value (draws, partials, time) is unusable.
    #[error("invalid input: {0}")]
    Input(String),

    #[error("non-finite value while evaluating {monomial} at ({x}, {y})")]
    Overflow { monomial: &'static str, x: f64, y: f64 },

    #[error("wrong regime: {0}")]
    WrongRegime(String),

    #[error("closed-form solution blows up at t* = {t_star}")]
    BlowUp { t_star: f64 },

    #[error("ODE integration lost accuracy near a blow-up; last reliable time {last_time}")]
    BlowUpDetected { last_time: f64 },

    #[error("unsupported operation: {0}")]
    Unsupported(String),

    #[error("constant derivation failed: {0}")]
    DerivationFailure(String),

    #[error("sampler produced a point outside {region}: ({x}, {y})")]
    SamplerContract { region: String, x: f64, y: f64 },

    #[error("global Lyapunov assembly failed: {0}")]
    Assembly(String),

    #[error("exponential fit unavailable: {reason}")]
    FitUnavailable {
        reason: String,
        times: Vec<f64>,
        values: Vec<f64>,
    },

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}
