//! Dense statevector simulation and exact CSS entropies.

mod circuits;
mod clifford2;
mod css;
mod state;
mod stats;

pub use circuits::*;
pub use clifford2::*;
pub use css::*;
pub use state::*;
pub use stats::*;
