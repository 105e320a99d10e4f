//! Performance analysis of timed Petri nets with free-choice and priority
//! routing.
//!
//! * [`model`]: nets, structural validation, JSON files.
//! * [`germ`]: the min-plus semifield of affine germs.
//! * [`dynamics`]: δ-discretized counter dynamics, stochastic and fluid.
//! * [`token`]: token-level earliest-firing simulator, used as an oracle.
//! * [`solver`]: stationary regimes by selection enumeration.
//! * [`callcenter`]: the two-level emergency call-center case study.

pub mod callcenter;
pub mod dynamics;
pub mod germ;
pub mod model;
pub mod random_net;
pub mod rational;
pub mod solver;
pub mod token;

pub use germ::Germ;
pub use model::{NetDescription, PetriNet};
pub use rational::Rational;
