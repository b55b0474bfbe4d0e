//! Excited random walks driven by Markovian cookie stacks.
//!
//! Closed-form parameters, regime classification, exact simulation of the walk
//! and of its forward/backward branching-like processes, and the statistics
//! used to check simulated behaviour against the closed forms.

pub mod env_model;
pub mod error;
pub mod linalg;
pub mod parameters;
pub mod regimes;
pub mod rng;
pub mod simulators;
pub mod statistics;
pub mod suites;

pub use error::{Error, Result};
