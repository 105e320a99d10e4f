//! Two-level emergency call center: the full net, its three-counter
//! reduction, and closed-form stationary throughputs.

mod germs;
mod net;
mod params;
mod phase;
mod reduced;

use thiserror::Error;

use crate::dynamics::DynamicsError;
use crate::model::ValidationErrors;

pub use germs::reduced_system;
pub use net::build_full_net;
pub use params::{parse_params, CallCenterParams, ParamsOverrides};
pub use phase::{breakpoints, dimension, phase_table, tau_bar, Dimensioning, Phase, PhaseTable};
pub use reduced::{simulate_reduced, ReducedCounter, ReducedDynamics, ReducedSimulator, ReducedState};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CallCenterError {
    #[error("invalid call-center parameters: {0}")]
    InvalidParams(String),
    #[error("params file: {0}")]
    ParamsFile(String),
    #[error("the phase table needs at least one level-1 operator")]
    ZeroN1,
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("{0}")]
    Model(ValidationErrors),
}
