//! Joint uplink-downlink configuration of an intelligent reflecting surface
//! (IRS) for multi-user MISO systems.
//!
//! The library models a base station serving K single-antenna users through
//! an IRS in both directions of an FDD or TDD link.  A block-coordinate
//! ascent loop optimizes uplink transmit powers (fractional programming),
//! uplink combiners (MMSE), downlink precoders (WMMSE or zero-forcing) and
//! the IRS phase shifts (Riemannian conjugate gradient on the product of
//! unit circles) against a weighted sum of downlink and uplink rates.  On
//! top of the solver sit the design variants (joint, individual, fixed,
//! sliced surface), proportional-fair weighting and the Monte-Carlo sweep
//! that traces uplink-downlink trade-off regions.

pub mod channel;
pub mod cli;
pub mod config;
pub mod designs;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod rcg;
pub mod uplink;
pub mod weighting;
pub mod wmmse;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dynamically sized complex vector.
pub type CVector = nalgebra::DVector<C64>;
/// Dynamically sized complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
