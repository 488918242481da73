//! Discrete truncated Wigner sampling and stochastic integration.
//!
//! Each trajectory starts from a discrete spin configuration plus vacuum
//! field noise, follows the classical equations of motion with additive
//! resonator noise of strength `sqrt(kappa/2)`, and contributes its moments to
//! an ensemble average.

mod ensemble;
mod integrator;
mod state;

pub use ensemble::{
    run_ensemble, run_trajectory, EnsembleRecord, MomentSeries, PairMoments, TrajectorySeed, BLOCK_SIZE,
};
pub use integrator::{drift, step, IntegratorSettings, Scheme, StateDerivative, Stepper};
pub use state::{sample_initial, BlochVector, TrajectoryState};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DtwaError {
    #[error("DIMENSION_MISMATCH: state does not match the system spec")]
    DimensionMismatch,
    #[error("NONFINITE_STATE: state became non-finite at t = {t} (dt too large?)")]
    NonfiniteState { t: f64 },
    #[error("INVALID_SETTINGS: {0}")]
    InvalidSettings(String),
    #[error("trajectory {seed:?} failed: {source}")]
    Trajectory {
        seed: TrajectorySeed,
        #[source]
        source: Box<DtwaError>,
    },
}

impl DtwaError {
    pub fn code(&self) -> &'static str {
        match self {
            DtwaError::DimensionMismatch => "DIMENSION_MISMATCH",
            DtwaError::NonfiniteState { .. } => "NONFINITE_STATE",
            DtwaError::InvalidSettings(_) => "INVALID_SETTINGS",
            DtwaError::Trajectory { source, .. } => source.code(),
        }
    }

    fn in_trajectory(self, seed: TrajectorySeed) -> Self {
        match self {
            e @ DtwaError::Trajectory { .. } => e,
            e => DtwaError::Trajectory {
                seed,
                source: Box::new(e),
            },
        }
    }
}

#[cfg(test)]
mod tests;
