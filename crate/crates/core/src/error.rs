use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimension d={0}: need d >= 2")]
    InvalidDimension(usize),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("value {value} outside domain {domain}")]
    Domain { value: f64, domain: String },

    #[error("no tail events observed at t={t} with {n_samples} samples; increase samples or shorten the horizon")]
    InsufficientSamples { t: f64, n_samples: u64 },

    #[error(
        "infeasible run: predicted probability {predicted:.3e} at t={t} is below {floor:.3e} \
         (50/n_samples); largest observable horizon is about t={suggested_t_max:.3}"
    )]
    Infeasible {
        t: f64,
        predicted: f64,
        floor: f64,
        suggested_t_max: f64,
    },

    #[error("pathwise inclusion violated: {0} paths ended beyond the threshold without exiting")]
    InclusionViolated(u64),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
