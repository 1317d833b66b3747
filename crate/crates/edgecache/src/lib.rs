//! Edge-cache policy toolkit: ON-OFF demand modeling, closed-form TTL
//! policy analysis with broadcast overhearing, budgeted hit-ratio
//! optimization, and a discrete-event simulator with LRU/LFU baselines.
//!
//! See the `examples/` directory for runnable entry points per capability,
//! or the `edgecache` binary for the experiment harness.

pub mod analytics;
pub mod demand;
pub mod error;
pub mod harness;
pub mod optimizer;
pub mod policy;
pub mod rng;
pub mod simulator;

pub use error::{Error, Result};
