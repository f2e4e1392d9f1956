//! Cooperative coevolutionary filter pruning.
//!
//! A trained network is pruned by treating each prunable layer as an
//! independent group: a small evolutionary algorithm per layer searches
//! retain/prune masks, candidates are scored by splicing them into the
//! frozen base network, the selected masks are spliced together into a
//! complete pruned network, and the result is finetuned and archived
//! before serving as the next iteration's base. The crate ships its own
//! minimal dense/conv network substrate so runs complete in minutes on a
//! single CPU.

pub mod coevolution;
pub mod config;
pub mod dataset;
pub mod genome;
pub mod group_ea;
pub mod net;
pub mod report;

pub use coevolution::{ArchiveEntry, CcepConfig, RunOutput};
pub use genome::{LayerGenome, MutationParams};
pub use group_ea::{GroupEaConfig, Individual, SelectionStrategy};
pub use net::{ArchitectureSpec, LayerSpec, NetworkModel};
