//! Algorithm-based fault tolerance for neural-network stages.
//!
//! Real-number convolutional codes give each checked computation a second,
//! independently computed parity vector; a mismatch between the two flags a
//! soft error. The crate covers code construction, the checked network
//! operations, the polynomial/segment activation approximations, fault
//! injection and the Monte-Carlo campaigns built on them.

pub mod approx;
pub mod checkers;
pub mod codes;
pub mod error;
pub mod faults;
pub mod harness;
pub mod linalg;
pub mod network;

pub use error::{Error, Result};
