//! Spot-size design rules and beacon-laser tracking for short-range
//! free-space optical links to a moving receiver.
//!
//! * [`link_design`]: closed-form average power, outage probability and the
//!   two spot-size constraints.
//! * [`tracking`]: grid maximum-likelihood and multilateration estimators,
//!   plus the linearised tracking-error bound.
//! * [`sim_harness`]: seeded Monte-Carlo experiments over both.
//! * [`cli`]: the `beamtrack` command-line front end.

pub mod beam_model;
pub mod cli;
pub mod error;
pub mod linalg;
pub mod link_design;
pub mod quadrature;
pub mod sim_harness;
pub mod specfun;
pub mod stochastic;
pub mod tracking;

pub use beam_model::{BeamSpec, ReceiverSpec, Vec2};
pub use error::{Error, Result};
pub use link_design::{DesignRule, DesignThresholds, Interval};
pub use sim_harness::{ExperimentConfig, TrialStats};
pub use specfun::LambertBranch;
pub use stochastic::{MobilitySpec, NoiseSpec, PointingSpec, RandomStream};
pub use tracking::{BeaconArray, GridSearchConfig, PowerMeasurements, TrackingEstimate, TrackingMethod};
