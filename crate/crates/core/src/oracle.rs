//! Sequential ground-truth algorithms used by tests and debug cross-checks.
//!
//! All functions operate on a directed [`AdjList`] so the same oracle serves
//! network instances and virtual graphs.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::graph::AdjList;
use crate::{Dist, NodeId, INF};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    pub dist: Vec<Dist>,
    /// Minimal hop count among minimum-weight paths (lexicographic
    /// `(weight, hops)` relaxation); `u32::MAX` where unreachable.
    pub hops: Vec<u32>,
    /// Predecessor on the canonical `(weight, hops)`-minimal path.
    pub pred: Vec<Option<NodeId>>,
}

impl OracleResult {
    /// Nodes of the canonical shortest path from the source to `t`, source first.
    pub fn canonical_path(&self, t: NodeId) -> Option<Vec<NodeId>> {
        if self.dist[t as usize] == INF {
            return None;
        }
        let mut path = vec![t];
        let mut cur = t;
        while let Some(p) = self.pred[cur as usize] {
            path.push(p);
            cur = p;
        }
        path.reverse();
        Some(path)
    }
}

/// Dijkstra with lexicographic `(weight, hops)` keys.
pub fn dijkstra(g: &AdjList, s: NodeId) -> OracleResult {
    let mut dist = vec![INF; g.n];
    let mut hops = vec![u32::MAX; g.n];
    let mut pred = vec![None; g.n];
    let mut done = vec![false; g.n];
    let mut heap = BinaryHeap::new();
    dist[s as usize] = 0;
    hops[s as usize] = 0;
    heap.push(Reverse((0u64, 0u32, s)));
    while let Some(Reverse((d, h, u))) = heap.pop() {
        if done[u as usize] {
            continue;
        }
        done[u as usize] = true;
        debug_assert!(d == dist[u as usize] && h == hops[u as usize]);
        for &(v, w) in &g.out[u as usize] {
            let nd = d + w;
            let nh = h + 1;
            if (nd, nh) < (dist[v as usize], hops[v as usize]) {
                dist[v as usize] = nd;
                hops[v as usize] = nh;
                pred[v as usize] = Some(u);
                heap.push(Reverse((nd, nh, v)));
            }
        }
    }
    OracleResult { dist, hops, pred }
}

/// Full Bellman-Ford; independent second oracle for dijkstra.
pub fn bellman_ford(g: &AdjList, s: NodeId) -> Vec<Dist> {
    let mut dist = vec![INF; g.n];
    dist[s as usize] = 0;
    for _ in 0..g.n.saturating_sub(1) {
        let mut changed = false;
        for u in 0..g.n {
            if dist[u] == INF {
                continue;
            }
            for &(v, w) in &g.out[u] {
                let nd = dist[u] + w;
                if nd < dist[v as usize] {
                    dist[v as usize] = nd;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    dist
}

/// Exact `h`-hop-restricted distances via `h` synchronous relaxation rounds.
pub fn hop_bounded(g: &AdjList, s: NodeId, h: u32) -> Vec<Dist> {
    let mut dist = vec![INF; g.n];
    dist[s as usize] = 0;
    for _ in 0..h {
        let prev = dist.clone();
        for u in 0..g.n {
            if prev[u] == INF {
                continue;
            }
            for &(v, w) in &g.out[u] {
                dist[v as usize] = dist[v as usize].min(prev[u] + w);
            }
        }
    }
    dist
}

/// `max_t d(s,t)`; `INF` if some node is unreachable.
pub fn radius(g: &AdjList, s: NodeId) -> Dist {
    dijkstra(g, s).dist.into_iter().max().unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family, GeneratorSpec};

    fn adj(n: usize, edges: &[(NodeId, NodeId, u64)]) -> AdjList {
        let mut out = vec![Vec::new(); n];
        for &(u, v, w) in edges {
            out[u as usize].push((v, w));
        }
        AdjList { n, out }
    }

    #[test]
    fn single_node() {
        let r = dijkstra(&adj(1, &[]), 0);
        assert_eq!(r.dist, vec![0]);
        assert_eq!(r.hops, vec![0]);
    }

    #[test]
    fn triangle_prefers_two_hop_route() {
        // w(s,a)=1, w(a,b)=1, w(s,b)=3: b is reached through a.
        let g = adj(3, &[(0, 1, 1), (1, 2, 1), (0, 2, 3)]);
        let r = dijkstra(&g, 0);
        assert_eq!(r.dist, vec![0, 1, 2]);
        assert_eq!(r.hops[2], 2);
        assert_eq!(r.canonical_path(2).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn hops_break_weight_ties() {
        // Two weight-4 routes to node 3; the 1-hop edge wins the tie.
        let g = adj(4, &[(0, 1, 2), (1, 3, 2), (0, 3, 4), (0, 2, 1), (2, 3, 9)]);
        let r = dijkstra(&g, 0);
        assert_eq!(r.dist[3], 4);
        assert_eq!(r.hops[3], 1);
    }

    #[test]
    fn dijkstra_matches_bellman_ford_and_triangle_inequality() {
        let inst = generate(&GeneratorSpec::new(Family::ErdosRenyiConnected, 200, 50, 9)).unwrap();
        let g = inst.adj_list();
        let r = dijkstra(&g, 0);
        assert_eq!(r.dist, bellman_ford(&g, 0));
        for u in 0..g.n {
            for &(v, w) in &g.out[u] {
                assert!(r.dist[v as usize] <= r.dist[u] + w);
            }
        }
    }

    #[test]
    fn hop_bounded_limits() {
        // path s -> a -> b with weights (2, 3)
        let g = adj(3, &[(0, 1, 2), (1, 2, 3)]);
        assert_eq!(hop_bounded(&g, 0, 0), vec![0, INF, INF]);
        assert_eq!(hop_bounded(&g, 0, 1), vec![0, 2, INF]);
        let full = dijkstra(&g, 0).dist;
        assert_eq!(hop_bounded(&g, 0, 2), full);
    }

    #[test]
    fn hop_bounded_is_monotone_in_h() {
        let inst = generate(&GeneratorSpec::new(Family::ErdosRenyiConnected, 60, 30, 4)).unwrap();
        let g = inst.adj_list();
        let exact = dijkstra(&g, 0).dist;
        let mut prev = hop_bounded(&g, 0, 0);
        for h in 1..g.n as u32 {
            let cur = hop_bounded(&g, 0, h);
            assert!(cur.iter().zip(&prev).all(|(c, p)| c <= p));
            prev = cur;
        }
        assert_eq!(prev, exact);
    }
}
