//! Finite Kuramoto oscillator networks on rings.
//!
//! The crate builds Watts–Strogatz and distance-dependent ring topologies,
//! integrates the Kuramoto equations with an adaptive Tsitouras 5(4) scheme,
//! measures phase and frequency synchronization, and runs reproducible
//! ensembles and parameter sweeps that quantify sample-to-sample fluctuations.

pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod observables;
pub mod seeds;
pub mod sweep;
pub mod topology;

pub use error::{Error, Result};
