//! Simulation and key post-processing for time-interleaved quantum key
//! distribution over a passive tree network.
//!
//! A central station emits packets of weak coherent pulses. Each leaf unit
//! encodes bits differentially, attenuates, and sends the packet back after a
//! storage delay. Returns from different leaves are scheduled into disjoint
//! windows of a common period so that a single receiver can serve all of them.

// `!(x >= 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod io;
pub mod network;
pub mod optics;
pub mod par;
pub mod postproc;
pub mod prbs;
pub mod scenario;
pub mod schedule;
pub mod simcore;
pub mod units;

pub use error::{Error, Result};
