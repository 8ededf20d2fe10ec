use thiserror::Error;

use crate::NodeId;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TopologyError {
    #[error("topology must have at least one node")]
    Empty,
    #[error("edge ({0}, {1}) out of range")]
    EdgeOutOfRange(NodeId, NodeId),
    #[error("self-loop at node {0}")]
    SelfLoop(NodeId),
    #[error("parallel edge ({0}, {1})")]
    ParallelEdge(NodeId, NodeId),
    #[error("graph is not connected ({reached} of {total} nodes reachable from node 0)")]
    Disconnected { reached: usize, total: usize },
}

/// Undirected, connected communication graph.
///
/// Stored in CSR form with sorted neighbor lists. Every ordered adjacent pair
/// `(u, v)` has a *channel id*; channel ids are dense in `0..2m` and the
/// engine meters messages per channel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    n: usize,
    off: Vec<usize>,
    dst: Vec<NodeId>,
    src: Vec<NodeId>,
    rev: Vec<u32>,
}

impl Topology {
    /// Builds and validates a topology from undirected edges.
    pub fn new(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self, TopologyError> {
        if n == 0 {
            return Err(TopologyError::Empty);
        }
        let mut adj: Vec<Vec<NodeId>> = vec![Vec::new(); n];
        for &(u, v) in edges {
            if u as usize >= n || v as usize >= n {
                return Err(TopologyError::EdgeOutOfRange(u, v));
            }
            if u == v {
                return Err(TopologyError::SelfLoop(u));
            }
            adj[u as usize].push(v);
            adj[v as usize].push(u);
        }
        for (u, list) in adj.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                let d = list.windows(2).find(|w| w[0] == w[1]).unwrap()[0];
                return Err(TopologyError::ParallelEdge(u as NodeId, d));
            }
        }

        let mut off = Vec::with_capacity(n + 1);
        let mut dst = Vec::with_capacity(2 * edges.len());
        let mut src = Vec::with_capacity(2 * edges.len());
        off.push(0);
        for (u, list) in adj.iter().enumerate() {
            dst.extend_from_slice(list);
            src.extend(std::iter::repeat(u as NodeId).take(list.len()));
            off.push(dst.len());
        }
        let mut topo = Topology {
            n,
            off,
            dst,
            src,
            rev: Vec::new(),
        };
        topo.rev = (0..topo.dst.len() as u32)
            .map(|c| {
                let (u, v) = (topo.src[c as usize], topo.dst[c as usize]);
                topo.channel_between(v, u).expect("symmetric adjacency")
            })
            .collect();

        let reached = topo.bfs_levels(0).iter().filter(|d| d.is_some()).count();
        if reached != n {
            return Err(TopologyError::Disconnected { reached, total: n });
        }
        Ok(topo)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of directed channels (twice the undirected edge count).
    pub fn channels(&self) -> usize {
        self.dst.len()
    }

    pub fn edge_count(&self) -> usize {
        self.dst.len() / 2
    }

    pub fn degree(&self, u: NodeId) -> usize {
        self.off[u as usize + 1] - self.off[u as usize]
    }

    pub fn neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.dst[self.off[u as usize]..self.off[u as usize + 1]]
    }

    /// Channel id of node `u`'s `j`-th outgoing direction.
    pub fn channel(&self, u: NodeId, j: usize) -> u32 {
        (self.off[u as usize] + j) as u32
    }

    pub fn channel_between(&self, u: NodeId, v: NodeId) -> Option<u32> {
        let nb = self.neighbors(u);
        nb.binary_search(&v)
            .ok()
            .map(|j| (self.off[u as usize] + j) as u32)
    }

    /// `(from, to)` endpoints of a directed channel.
    pub fn endpoints(&self, chan: u32) -> (NodeId, NodeId) {
        (self.src[chan as usize], self.dst[chan as usize])
    }

    /// Channel id of the opposite direction.
    pub fn reverse(&self, chan: u32) -> u32 {
        self.rev[chan as usize]
    }

    pub fn channel_range(&self, u: NodeId) -> std::ops::Range<usize> {
        self.off[u as usize]..self.off[u as usize + 1]
    }

    /// Hop distances from `root`, or `None` where unreachable.
    pub fn bfs_levels(&self, root: NodeId) -> Vec<Option<u32>> {
        let mut level = vec![None; self.n];
        level[root as usize] = Some(0);
        let mut frontier = vec![root];
        let mut next = Vec::new();
        let mut d = 0u32;
        while !frontier.is_empty() {
            d += 1;
            for &u in &frontier {
                for &v in self.neighbors(u) {
                    if level[v as usize].is_none() {
                        level[v as usize] = Some(d);
                        next.push(v);
                    }
                }
            }
            std::mem::swap(&mut frontier, &mut next);
            next.clear();
        }
        level
    }

    /// Exact hop eccentricity of `root`.
    pub fn eccentricity(&self, root: NodeId) -> u32 {
        self.bfs_levels(root)
            .iter()
            .map(|d| d.expect("connected"))
            .max()
            .unwrap_or(0)
    }

    /// Exact hop diameter via one BFS per node. Oracle-grade; not metered.
    pub fn exact_diameter(&self) -> u32 {
        (0..self.n as NodeId)
            .map(|u| self.eccentricity(u))
            .max()
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn path_topology_basics() {
        let t = Topology::new(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(t.n(), 4);
        assert_eq!(t.channels(), 6);
        assert_eq!(t.neighbors(1), &[0, 2]);
        let c = t.channel_between(1, 2).unwrap();
        assert_eq!(t.endpoints(c), (1, 2));
        assert_eq!(t.endpoints(t.reverse(c)), (2, 1));
        assert_eq!(t.eccentricity(0), 3);
        assert_eq!(t.exact_diameter(), 3);
    }

    #[test]
    fn rejects_invalid_graphs() {
        assert_eq!(
            Topology::new(2, &[(0, 0)]).unwrap_err(),
            TopologyError::SelfLoop(0)
        );
        assert_eq!(
            Topology::new(2, &[(0, 1), (1, 0)]).unwrap_err(),
            TopologyError::ParallelEdge(0, 1)
        );
        assert!(matches!(
            Topology::new(3, &[(0, 1)]).unwrap_err(),
            TopologyError::Disconnected { reached: 2, total: 3 }
        ));
    }

    #[test]
    fn single_node_is_connected() {
        let t = Topology::new(1, &[]).unwrap();
        assert_eq!(t.channels(), 0);
        assert_eq!(t.exact_diameter(), 0);
    }
}
