use alloc::string::String;
use alloc::vec::Vec;

/// Errors raised by the simulation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: {what} (expected {expected}, got {actual})")]
    Dimension {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("spin domain mismatch: model is {model:?}, state is {state:?}")]
    DomainMismatch {
        model: crate::ising::SpinDomain,
        state: crate::ising::SpinDomain,
    },
    #[error("index {index} out of range for {len} entries")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("capacity exceeded: {what} has {size} entries, limit is {limit}")]
    Capacity {
        what: &'static str,
        size: usize,
        limit: usize,
    },
    #[error("compliance exceeded: {volts} V applied, compliance is {compliance} V")]
    Compliance { volts: f64, compliance: f64 },
    #[error("column {column} mixes positive and negative coefficients; a single read polarity cannot encode it")]
    MixedSignColumn { column: usize },
    #[error("{} coefficient(s) not representable on the allowed conductance levels, first at ({}, {})", .offenders.len(), .offenders[0].0, .offenders[0].1)]
    Quantization { offenders: Vec<(usize, usize, f64)> },
    #[error("{} cell(s) failed program-and-verify", .failed.len())]
    Programming { failed: Vec<(usize, usize)> },
    #[error("invalid color classes: {reason}")]
    InvalidPartition { reason: String },
    #[error("empty graph: {0}")]
    EmptyGraph(&'static str),
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::Dimension {
            what,
            expected,
            actual,
        })
    }
}
