//! Continuous-variable quantum neural networks on a truncated Fock basis.
//!
//! The crate is organised bottom-up:
//!
//! * [`fock`] simulates CV gates on truncated multi-mode states.
//! * [`layers`] composes gates into trainable layers and networks.
//! * [`training`] holds the cost functions, finite-difference gradients and
//!   optimizers.
//! * [`encoding`] maps classical images to quadrature inputs and targets.
//! * [`signal`] is the classical Fourier/noise path used for denoising.
//! * [`export`] compiles weights and trained layers into optical gate programs.
//! * [`experiments`] wires everything into the command-line experiments.

pub mod encoding;
pub mod error;
pub mod experiments;
pub mod export;
pub mod fock;
pub mod layers;
pub mod signal;
pub mod training;

pub use error::{Error, Result};
