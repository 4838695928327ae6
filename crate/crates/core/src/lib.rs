//! Stationary age of information (AoI) for discrete-time Ber/G/1/1
//! status-update systems.
//!
//! Three independent routes compute the same quantities and check each other:
//!
//! * [`analytic`]: closed-form age-state probabilities for general service
//!   and explicit Ber/Geo/1/1 formulas;
//! * [`chain`]: the age-state Markov chain on a truncated state space,
//!   solved numerically;
//! * [`sim`]: slot-level Monte Carlo simulation.

pub mod analytic;
pub mod chain;
pub mod distribution;
pub mod error;
pub mod export;
pub mod figure;
pub mod numeric;
pub mod service;
pub mod sim;

pub use analytic::SystemParams;
pub use distribution::{AoiDistribution, JointStateTable, KernelConvention, Provenance};
pub use error::{AoiError, Result};
pub use service::{ServiceDescriptor, ServiceDistribution};
