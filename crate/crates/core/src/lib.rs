//! Magic-resource growth in random qudit circuits.
//!
//! The crate offers three routes to CSS entropies: dense statevector
//! simulation ([`exact`]), closed Haar forms ([`analytics`]) and the
//! replica tensor network contracted as a matrix-product state
//! ([`replica`]). [`qudit`] and [`defects`] supply the shared algebra.

pub mod analytics;
pub mod defects;
pub mod error;
pub mod exact;
pub mod qudit;
pub mod replica;

pub use error::{Error, Result};
pub use qudit::{Dim, RngSeed};
