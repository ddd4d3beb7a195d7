use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("input error: {0}")]
    Input(String),
    #[error("size limit exceeded: {0}")]
    Size(String),
    #[error("wiring error on port {port}: {reason}")]
    Wiring { port: String, reason: String },
    #[error("causality violation: {0}")]
    Causality(String),
    #[error("protocol order error in {block}: {detail}")]
    ProtocolOrder { block: String, detail: String },
    #[error("runaway run: event budget of {0} exhausted")]
    Runaway(u64),
    #[error("usage error: {0}")]
    Usage(String),
    #[error("unknown label {0:?}")]
    UnknownLabel(String),
}

impl Error {
    pub(crate) fn wiring(port: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Wiring { port: port.into(), reason: reason.into() }
    }

    pub(crate) fn order(block: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::ProtocolOrder { block: block.into(), detail: detail.into() }
    }
}
