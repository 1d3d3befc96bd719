use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("thermal factor is singular at kappa = {kappa} for {bath}")]
    SingularThermalFactor { kappa: f64, bath: String },

    #[error(
        "real part of the field retarded transform at r = 0 is absorbed into the \
         physical frequency; use the regularized accessor"
    )]
    RenormalizedRealPart,

    #[error("invalid frequency grid: {0}")]
    InvalidGrid(String),

    #[error("integrand is not finite at kappa = {kappa}")]
    NonFiniteIntegrand { kappa: f64 },

    #[error(
        "late-time margin violated ({0}); evaluate with the direct time-domain oracle instead"
    )]
    LateTimeMargin(String),

    #[error("time step {dt} exceeds the Nyquist limit pi/cutoff = {limit} for cutoff {cutoff}")]
    Nyquist { dt: f64, cutoff: f64, limit: f64 },

    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("malformed trajectory file: {0}")]
    TrajectoryFormat(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, value: f64, reason: &'static str) -> Self {
        Error::InvalidParameter {
            name,
            value,
            reason,
        }
    }
}
