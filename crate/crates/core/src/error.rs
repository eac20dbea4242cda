use thiserror::Error;

use crate::probability::SpecViolation;

#[derive(Debug, Error)]
pub enum Error {
    #[error("channel spec is invalid: {}", format_violations(.0))]
    InvalidSpec(Vec<SpecViolation>),

    #[error("joint table would need {entries} entries, above the cap of {cap}")]
    StateTooLarge { entries: u128, cap: usize },

    #[error("variable set references variables outside this joint distribution (mask {0:#x})")]
    UnknownVariable(u64),

    #[error("relay subset {subset} is not contained in the relay set {relays}")]
    InvalidSubset { subset: String, relays: String },

    #[error("layer index {index} is outside -1..={max}")]
    IndexOutOfRange { index: isize, max: usize },

    #[error("constraint requires a nonempty relay subset")]
    EmptySubset,

    #[error("{count} relays exceeds the enumeration cap of {cap}")]
    TooManyRelays { count: usize, cap: usize },

    #[error("vertex enumeration supports at most 3 dimensions, got {0}")]
    DimensionTooHigh(usize),

    #[error("invalid layering: {0}")]
    InvalidLayering(String),

    #[error("invalid rates: {0}")]
    InvalidRates(String),

    #[error("node {0} is not a relay of this network")]
    UnknownNode(usize),
}

fn format_violations(v: &[SpecViolation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
