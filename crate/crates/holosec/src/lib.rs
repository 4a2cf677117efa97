//! Secrecy-rate optimization and Monte Carlo simulation for a downlink
//! assisted by a reconfigurable holographic surface.
//!
//! The transmitter combines a digital beamformer `v` over R RF chains, an
//! artificial-noise vector `z`, and real amplitude weights `w` on M surface
//! elements (`W = diag(w) phi` with fixed reference phases `phi`). The
//! alternating optimizer cycles a majorize-maximize digital step, a
//! null-space noise step, and a projected-gradient holographic step to grow
//! `max(0, rate_bob - rate_eve)` under a total power budget, and the
//! experiment runner reproduces Monte Carlo trends over transmit power,
//! surface size, RF chains, and Rician factor.

pub mod an_design;
pub mod channel;
pub mod check;
pub mod config;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod metrics;
pub mod mm_digital;
pub mod mm_holographic;
pub mod optimizer;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dynamically sized complex vector.
pub type CVector = nalgebra::DVector<C64>;
/// Dynamically sized complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dynamically sized real vector.
pub type RVector = nalgebra::DVector<f64>;
/// Dynamically sized real matrix.
pub type RMatrix = nalgebra::DMatrix<f64>;
