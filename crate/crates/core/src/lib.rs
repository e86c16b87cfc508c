//! Bandwidth-aware virtual network embedding across multiple substrate
//! domains.
//!
//! The crate is layered bottom-up: [`topology`] models the substrate and the
//! requests and owns the resource ledger, [`abstraction`] builds the
//! per-domain candidate views a global controller sees, [`pso`] searches node
//! assignments over those views, [`embedding`] turns an assignment into a
//! committed embedding, [`baselines`] provides comparison heuristics, and
//! [`simulation`] drives everything over a Poisson arrival process while
//! [`metrics`] keeps score.

// `!(x > 0.0)` is how validation rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod abstraction;
pub mod baselines;
pub mod embedding;
pub mod metrics;
pub mod pso;
pub mod rng;
pub mod routing;
pub mod simulation;
pub mod topology;

pub use abstraction::{AbstractionOptions, GlobalCandidateNetwork};
pub use embedding::{embed_vnr, Algorithm, EmbeddingResult, RejectCause};
pub use pso::PsoParams;
pub use routing::{max_bandwidth_path, SubstratePath, ThresholdBasis};
pub use simulation::{run, SimulationConfig, SimulationReport};
pub use topology::{
    generate_substrate, generate_vnr, GeneratorConfig, LinkId, NodeId, SubstrateNetwork, VirtualNetworkRequest,
    VnrConfig,
};
