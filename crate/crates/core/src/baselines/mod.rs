//! Reference reconstructions: delay-and-sum SAFT and two-agent UMBIR.

mod saft;
mod umbir;

pub use saft::{saft_reconstruct, SaftConfig};
pub use umbir::{umbir_reconstruct, QggmrfAgent, UmbirAgents};
