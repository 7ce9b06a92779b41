use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Two sequences that must line up have different lengths.
    #[error("shape error: expected length {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    /// A requested physical setting cannot be reached (e.g. attenuator would need gain).
    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown {kind} {id}")]
    Lookup { kind: &'static str, id: usize },

    #[error("topology too large: {levels} levels exceeds the limit of {limit}")]
    SizeLimit { levels: u32, limit: u32 },

    /// Two users return to Alice so close together that their windows overlap.
    #[error(
        "return windows of users {first} and {second} overlap (offsets differ by {separation_ns:.3} ns, \
         need {required_ns:.3} ns); lengthen one storage fiber by at least {suggested_fiber_m:.2} m"
    )]
    Overlap {
        first: usize,
        second: usize,
        separation_ns: f64,
        required_ns: f64,
        suggested_fiber_m: f64,
    },

    #[error("schedule violates silence requirement: {0}")]
    Silence(String),

    /// Alice and Bob disagree on which packet/slot exists.
    #[error("protocol desync: packet {packet}, slot {slot}")]
    Desync { packet: u64, slot: u32 },

    #[error("estimation error: {0}")]
    Estimation(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
