//! Replica tensor network for annealed CSS entropies.
//!
//! After Haar averaging, every site of a brick-wall circuit carries a spin
//! labelled by a permutation of the `D` replicas. The network is contracted
//! upward layer by layer as a matrix-product state over space.

mod mps;
mod network;
mod perm;
mod state_mps;
mod weingarten;

pub use mps::*;
pub use network::*;
pub use perm::*;
pub use state_mps::*;
pub use weingarten::*;
