//! Stability analysis and simulation of logit routing over two parallel
//! links whose density sensors fail and recover as a continuous-time Markov
//! chain.
//!
//! * [`model`]: flow functions, fault mappings, routing, and the mode chain.
//! * [`stability`]: necessary/sufficient stability tests, numeric throughput
//!   bounds, and Lyapunov certificates.
//! * [`closed_form`]: analytic lower bounds and the witness construction for
//!   asymmetric capacities.
//! * [`sim`]: event-driven simulation of the hybrid process.
//! * [`cli`]: experiment configuration and the command implementations
//!   behind the `faultroute` binary.

// `!(a < b)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod closed_form;
pub mod error;
pub mod format;
pub mod linalg;
pub mod model;
pub mod sim;
pub mod stability;

pub use error::{Error, Result};
