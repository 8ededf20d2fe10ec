use crate::graph::AdjList;
use crate::{Dist, NodeId};

/// A directed weighted graph over a subset of topology nodes. Edges are
/// derived (they need not exist in the network) and each edge is known only
/// at its head endpoint. Virtual node ids are indices into `hosts`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VirtualGraph {
    /// Topology node hosting each virtual node.
    pub hosts: Vec<NodeId>,
    /// Virtual index of the source; `hosts[source]` always contains it.
    pub source: u32,
    /// Per-head list of `(tail virtual index, weight)`.
    pub in_edges: Vec<Vec<(u32, Dist)>>,
    /// Declared upper bound on `d(s, v')` inside the virtual graph.
    pub radius: Dist,
}

impl VirtualGraph {
    pub fn new(hosts: Vec<NodeId>, source: u32, radius: Dist) -> Self {
        let n = hosts.len();
        assert!((source as usize) < n);
        VirtualGraph {
            hosts,
            source,
            in_edges: vec![Vec::new(); n],
            radius,
        }
    }

    pub fn n_virtual(&self) -> usize {
        self.hosts.len()
    }

    pub fn add_edge(&mut self, tail: u32, head: u32, w: Dist) {
        debug_assert!(tail != head);
        self.in_edges[head as usize].push((tail, w));
    }

    pub fn edge_count(&self) -> usize {
        self.in_edges.iter().map(|e| e.len()).sum()
    }

    pub fn max_weight(&self) -> Dist {
        self.in_edges
            .iter()
            .flat_map(|e| e.iter().map(|&(_, w)| w))
            .max()
            .unwrap_or(0)
    }

    /// Out-adjacency view (transposed) for the sequential oracles.
    pub fn adj_list(&self) -> AdjList {
        let n = self.n_virtual();
        let mut out = vec![Vec::new(); n];
        for (head, edges) in self.in_edges.iter().enumerate() {
            for &(tail, w) in edges {
                out[tail as usize].push((head as NodeId, w));
            }
        }
        AdjList { n, out }
    }

    /// Virtual nodes that have an in-edge from `tail`.
    pub fn listeners(&self) -> Vec<Vec<u32>> {
        let mut by_tail = vec![Vec::new(); self.n_virtual()];
        for (head, edges) in self.in_edges.iter().enumerate() {
            for &(tail, _) in edges {
                by_tail[tail as usize].push(head as u32);
            }
        }
        for l in &mut by_tail {
            l.sort_unstable();
            l.dedup();
        }
        by_tail
    }

    /// Same nodes and weights, different weight vector per edge slot.
    pub fn with_in_weights(&self, f: impl Fn(u32, u32, Dist) -> Dist) -> VirtualGraph {
        let mut g = self.clone();
        for (head, edges) in g.in_edges.iter_mut().enumerate() {
            for e in edges.iter_mut() {
                e.1 = f(e.0, head as u32, e.1);
            }
        }
        g
    }
}
