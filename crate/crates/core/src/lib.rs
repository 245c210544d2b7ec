//! Emphatic temporal-difference off-policy evaluation with periodic trace
//! restarts, its baselines, closed-form fixed points and an experiment
//! harness for the Baird counterexample.
//!
//! Everything numeric is generic over [`Real`]; the aliases at the crate
//! root fix the scalar to `f64`.

// `!(x > 0)` is used deliberately so that NaN fails the guard.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algorithms;
pub mod error;
pub mod experiments;
pub mod features;
pub mod fixed_points;
pub mod linalg;
pub mod mdp;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Mdp = mdp::FiniteMdp<f64>;
pub type Policy = mdp::Policy<f64>;
pub type Features = features::FeatureMap<f64>;
pub type Ball = features::ProjectionBall<f64>;
pub type Schedule = algorithms::StepsizeSchedule<f64>;
pub type Algo = algorithms::AlgoConfig<f64>;
pub type Model = fixed_points::OperatorModel<f64>;
