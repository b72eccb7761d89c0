//! Joint active and passive precoding for wideband IRS-assisted cell-free
//! MIMO-OFDM downlinks.
//!
//! The crate is `no_std` (with `alloc`). It covers the system model
//! ([`scenario`], [`channel`], [`irs`]), performance metrics ([`metrics`]),
//! the fractional-programming surrogate ([`fp`]), the block solvers
//! ([`active`], [`passive`]), the outer loop and reference schemes
//! ([`joint`], [`baseline`]) and operation counting ([`complexity`]).

#![no_std]
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod active;
pub mod baseline;
pub mod channel;
pub mod complexity;
pub mod error;
pub mod fp;
pub mod irs;
pub mod joint;
pub mod linalg;
pub mod math;
pub mod metrics;
pub mod passive;
pub mod scenario;

pub use active::PrecoderStack;
pub use baseline::{run_baseline, BaselineKind};
pub use channel::{ChannelSet, StackedChannels};
pub use error::{Error, Result};
pub use irs::IrsState;
pub use joint::{joint_optimize, JointOptions, JointOutcome};
pub use scenario::{Dims, SystemConfig};
