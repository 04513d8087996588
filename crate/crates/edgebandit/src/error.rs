use thiserror::Error;

/// Errors surfaced by the library.
///
/// The variants mirror the failure classes of the public operations:
/// bad call arguments, values outside their declared domain, radio
/// unreachability, sequencing violations in the per-slot protocol,
/// scenario configuration problems, enumeration blow-ups, and
/// infeasible solver instances.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("value outside domain: {0}")]
    Domain(String),

    #[error("unreachable link: {0}")]
    Unreachable(String),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("capacity exceeded: {0}")]
    Capacity(String),

    #[error("infeasible instance: {0}")]
    Infeasible(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
