//! Sequential frame synchronization over discrete memoryless channels.
//!
//! A sync packet of length N is transmitted at a slot drawn uniformly from
//! an uncertainty window of A slots; the receiver runs a sequential
//! joint-typicality decoder over the channel output and declares the packet
//! position. The library provides the channel machinery (KL divergence and
//! the synchronization threshold), the quantized-AWGN binary channel, the
//! m-sequence sync-word construction, both decoder engines, and a
//! reproducible Monte Carlo harness with exact small-instance oracles and
//! closed-form bounds.

pub mod awgn;
pub mod channel;
pub mod config;
pub mod decoder;
pub mod error;
pub mod experiments;
pub mod montecarlo;
pub mod syncword;

pub use error::{Error, Result};
