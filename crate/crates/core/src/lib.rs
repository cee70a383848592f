//! Joint relay and user beamforming for a full-duplex two-way MIMO relay.
//!
//! Total transmit power is minimized under per-user SINR targets by
//! alternating between the relay transmit/receive beamformers (successive
//! convex approximation), the user transmit beamformers (one SOCP) and the
//! user receive filters (closed-form MMSE).

// `!(x > 0.0)` style guards are used on purpose so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ao_driver;
pub mod baselines;
pub mod bench;
pub mod conic;
pub mod error;
pub mod linalg;
pub mod model;
pub mod relay_sca;
pub mod user_opt;

pub use error::{Error, Result};
