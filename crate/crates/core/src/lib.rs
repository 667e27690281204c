//! Link-level simulation of two-phase decode-and-forward cooperative MIMO
//! systems with joint relay selection (RS) and transmit diversity selection
//! (TDS).
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: configuration, derived limits and shared matrix types.
//! - [`channel`]: block-fading channel draws and RLS channel estimation.
//! - [`receiver`]: QPSK, Wiener filters and MMSE cost functions.
//! - [`selection`]: candidate sets, exhaustive search, the discrete
//!   stochastic approximation (DSA) engines and complexity accounting.
//! - [`sim`]: per-symbol transmission and the Monte Carlo BER experiment.

pub mod channel;
pub mod error;
pub mod model;
pub mod receiver;
pub mod selection;
pub mod sim;

pub use error::{Error, Result};
pub use model::{
    CMatrix, CVector, DerivedLimits, EstimationMode, Scheme, SelectionMethod, SystemConfig,
};
