use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which utilization of a station pair left the open unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Utilization {
    /// Workstation: probability the job queue is non-empty.
    Q1,
    /// Energy store: probability the store holds at least one energy packet.
    Q2,
}

impl fmt::Display for Utilization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Utilization::Q1 => f.write_str("q1"),
            Utilization::Q2 => f.write_str("q2"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EpnError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),

    /// The workstation fixed point has no root in (0, 1).
    #[error("no stationary solution: {0}")]
    NoStationarySolution(String),

    /// `index` is zero-based; the message reports the one-based pair number.
    #[error("unstable network: pair {} has {which} = {value} outside (0, 1)", .index + 1)]
    UnstableNetwork {
        index: usize,
        which: Utilization,
        value: f64,
    },

    #[error("infeasible network: {0}")]
    InfeasibleNetwork(String),

    #[error("allocation outside the feasible box: {0}")]
    OutOfBox(String),

    #[error("no interior root of the stationarity condition: {0}")]
    NoInteriorRoot(String),

    #[error("no admissible quartic root: {0}")]
    NoAdmissibleRoot(String),

    #[error("constraint root not bracketed: {0}")]
    ConstraintRootNotBracketed(String),

    #[error("large-gamma approximation falls outside the feasible box: {0}")]
    ApproximationOutOfBox(String),

    #[error("operation requires geometric batch distributions (pair {})", .0 + 1)]
    NotGeometric(usize),

    #[error("unsupported network size {n}: {reason}")]
    UnsupportedSize { n: usize, reason: &'static str },

    #[error("invalid simulation config: {0}")]
    InvalidSimConfig(String),
}

impl EpnError {
    /// True for errors caused by the model having no stationary regime or feasible allocation.
    pub fn is_infeasibility(&self) -> bool {
        matches!(
            self,
            EpnError::UnstableNetwork { .. }
                | EpnError::InfeasibleNetwork(_)
                | EpnError::OutOfBox(_)
                | EpnError::NoStationarySolution(_)
                | EpnError::ApproximationOutOfBox(_)
                | EpnError::NoInteriorRoot(_)
        )
    }

    /// True for errors that come from bad input rather than the model or the numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            EpnError::InvalidParameter(_)
                | EpnError::InvalidAllocation(_)
                | EpnError::InvalidSimConfig(_)
                | EpnError::NotGeometric(_)
                | EpnError::UnsupportedSize { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, EpnError>;
