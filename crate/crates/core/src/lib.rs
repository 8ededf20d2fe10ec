//! Round-synchronous CONGEST-model network simulator and a metered
//! implementation of exact single- and multi-source shortest-path protocols
//! built from weight scaling, short-range hybrid search, virtual graphs, and
//! congestion+dilation scheduling.
//!
//! The crate is organised in layers:
//!
//! * [`graph`] — communication topologies, weighted instances, generators,
//!   and the on-disk instance format.
//! * [`oracle`] — sequential ground-truth algorithms used by tests and the
//!   optional debug cross-checks.
//! * [`sim`] — the deterministic message-passing engine, metrics, BFS-tree
//!   primitives, pipelined broadcast, and the random-delay scheduler.
//! * [`scaling`], [`short_range`], [`approx`] — the network-level protocol
//!   building blocks.
//! * [`vgraph`] — virtual graphs, the broadcast-only simulation runtime, and
//!   the exact virtual SSSP solver variants.
//! * [`pipeline`] — the top-level single-source and multi-source drivers.

pub mod approx;
pub mod baseline;
pub mod graph;
pub mod oracle;
pub mod pipeline;
pub mod scaling;
pub mod short_range;
pub mod sim;
pub mod vgraph;

/// Node identifier inside a topology.
pub type NodeId = u32;

/// Distance value; `INF` marks "no path known".
pub type Dist = u64;

/// Sentinel for an unknown/unreachable distance. Never placed on the wire.
pub const INF: Dist = u64::MAX;

/// Per-node distance estimates tagged with the source they refer to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceTable {
    pub source: NodeId,
    pub dist: Vec<Dist>,
}
