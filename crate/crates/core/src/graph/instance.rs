use std::sync::Arc;

use crate::graph::Topology;
use crate::{Dist, NodeId};

/// Weighted problem instance: directed integer weights over an undirected
/// topology. The two directions of an edge may carry different weights.
///
/// Input instances have weights in `[1, lambda]`; instances derived by the
/// scaling framework may contain zeros.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedInstance {
    topo: Arc<Topology>,
    /// Weight per directed channel id.
    w: Vec<u64>,
    lambda: u64,
    sources: Vec<NodeId>,
    max_w: u64,
}

impl WeightedInstance {
    /// Builds an input instance, checking the weight range `[1, lambda]` and
    /// the payload bound `lambda <= n^4`.
    pub fn new_input(
        topo: Arc<Topology>,
        w: Vec<u64>,
        lambda: u64,
        sources: Vec<NodeId>,
    ) -> Result<Self, String> {
        if lambda == 0 {
            return Err("lambda must be positive".into());
        }
        let n4 = (topo.n().max(2) as u64).saturating_pow(4);
        if lambda > n4 {
            return Err(format!("lambda {lambda} exceeds n^4 = {n4}"));
        }
        if w.len() != topo.channels() {
            return Err(format!(
                "expected {} directed weights, got {}",
                topo.channels(),
                w.len()
            ));
        }
        if let Some(bad) = w.iter().position(|&x| x == 0 || x > lambda) {
            let (u, v) = topo.endpoints(bad as u32);
            return Err(format!("weight of ({u},{v}) outside [1, {lambda}]"));
        }
        if sources.is_empty() || sources.iter().any(|&s| s as usize >= topo.n()) {
            return Err("invalid source list".into());
        }
        Ok(Self::assemble(topo, w, lambda, sources))
    }

    /// Builds a derived instance (zero weights allowed, no range check).
    pub fn derived(topo: Arc<Topology>, w: Vec<u64>, sources: Vec<NodeId>) -> Self {
        assert_eq!(w.len(), topo.channels());
        let lambda = w.iter().copied().max().unwrap_or(1).max(1);
        Self::assemble(topo, w, lambda, sources)
    }

    fn assemble(topo: Arc<Topology>, w: Vec<u64>, lambda: u64, sources: Vec<NodeId>) -> Self {
        let max_w = w.iter().copied().max().unwrap_or(0);
        WeightedInstance {
            topo,
            w,
            lambda,
            sources,
            max_w,
        }
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn topology_arc(&self) -> Arc<Topology> {
        Arc::clone(&self.topo)
    }

    pub fn n(&self) -> usize {
        self.topo.n()
    }

    pub fn lambda(&self) -> u64 {
        self.lambda
    }

    pub fn max_weight(&self) -> u64 {
        self.max_w
    }

    pub fn sources(&self) -> &[NodeId] {
        &self.sources
    }

    pub fn set_sources(&mut self, sources: Vec<NodeId>) {
        self.sources = sources;
    }

    /// Weight of the directed channel `chan`.
    pub fn weight_of_channel(&self, chan: u32) -> u64 {
        self.w[chan as usize]
    }

    /// Weight of the ordered pair `(u, v)`; panics if not adjacent.
    pub fn weight(&self, u: NodeId, v: NodeId) -> u64 {
        let c = self
            .topo
            .channel_between(u, v)
            .unwrap_or_else(|| panic!("({u},{v}) not adjacent"));
        self.w[c as usize]
    }

    pub fn weights(&self) -> &[u64] {
        &self.w
    }

    /// Outgoing `(neighbor, weight, channel)` triples of `u`.
    pub fn out_edges(&self, u: NodeId) -> impl Iterator<Item = (NodeId, u64, u32)> + '_ {
        let range = self.topo.channel_range(u);
        let nbs = self.topo.neighbors(u);
        nbs.iter()
            .zip(range.clone())
            .map(move |(&v, c)| (v, self.w[c], c as u32))
    }

    /// Same topology, new directed weights.
    pub fn with_weights(&self, w: Vec<u64>) -> WeightedInstance {
        WeightedInstance::derived(Arc::clone(&self.topo), w, self.sources.clone())
    }

    /// Plain out-adjacency view for the sequential oracles.
    pub fn adj_list(&self) -> AdjList {
        let n = self.n();
        let mut out = vec![Vec::new(); n];
        for u in 0..n as NodeId {
            for (v, w, _) in self.out_edges(u) {
                out[u as usize].push((v, w));
            }
        }
        AdjList { n, out }
    }
}

/// Directed out-adjacency list used by the sequential oracles. Also the
/// common denominator between network instances and virtual graphs.
#[derive(Debug, Clone)]
pub struct AdjList {
    pub n: usize,
    pub out: Vec<Vec<(NodeId, Dist)>>,
}
