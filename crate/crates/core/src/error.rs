use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// A value outside the domain of an operation (log of zero, BER > 0.5, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Structurally invalid input data.
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    /// Two or more transmitters share a channel in one broadcast domain.
    #[error("collision on channel {channel} between {transmitters}")]
    Collision { channel: i32, transmitters: String },

    /// A named item (path, medium, transmitter) does not exist.
    #[error("unknown {kind} '{name}'")]
    Unknown { kind: &'static str, name: String },

    /// The baseline budget already misses the required margin.
    #[error("infeasible: base margin {base_margin_db:.2} dB is {deficit_db:.2} dB below the required {min_margin_db:.2} dB")]
    Infeasible {
        base_margin_db: f64,
        min_margin_db: f64,
        deficit_db: f64,
    },
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }
}
