//! Distributed cooperative MAC for RSU-assisted vehicular networks.
//!
//! Winners of a slotted RTS/CTS contention observe their direct-link SNR
//! and either transmit, give the channel back, or probe the roadside unit
//! and transmit over the better of the direct and relayed paths. The
//! optimal policy is a pair of SNR thresholds per pair derived from the
//! long-run throughput λ*; [`optimizer`] computes them and [`engine`]
//! simulates the protocol against baseline strategies.

pub mod channel;
pub mod contention;
pub mod engine;
pub mod error;
pub mod geometry;
pub mod optimizer;
pub mod strategies;
pub mod time;

pub use error::{Error, Result};
pub use time::Nanos;
