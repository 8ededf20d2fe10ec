use crate::graph::Topology;
use crate::sim::{
    run_protocol, word_cap, Control, Delivery, EngineConfig, NodeProgram, Outbox, Payload,
    ProtocolCtx, RunMetrics, SimError,
};
use crate::NodeId;

/// Hop-shortest-path tree rooted at `root`, with per-node depths and child
/// lists precomputed for the broadcast primitives.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BfsTree {
    pub root: NodeId,
    /// Parent per node; the root maps to itself.
    pub parent: Vec<NodeId>,
    pub children: Vec<Vec<NodeId>>,
    pub depth_of: Vec<u32>,
    /// Hop eccentricity of the root.
    pub depth: u32,
}

struct BfsBuild {
    root: NodeId,
}

#[derive(Clone)]
struct BfsState {
    dist: Option<u64>,
    parent: Option<NodeId>,
    sent: bool,
}

impl NodeProgram for BfsBuild {
    type State = BfsState;

    fn init(&self, node: NodeId, _ctx: &ProtocolCtx) -> (BfsState, Control) {
        if node == self.root {
            (
                BfsState {
                    dist: Some(0),
                    parent: None,
                    sent: false,
                },
                Control::WakeAt(0),
            )
        } else {
            (
                BfsState {
                    dist: None,
                    parent: None,
                    sent: false,
                },
                Control::Sleep,
            )
        }
    }

    fn step(
        &self,
        st: &mut BfsState,
        _node: NodeId,
        round: u64,
        inbox: &[Delivery],
        out: &mut Outbox,
        _ctx: &ProtocolCtx,
    ) -> Control {
        if st.dist.is_none() {
            if let Some(first) = inbox.first() {
                st.dist = Some(round);
                st.parent = Some(first.from);
            }
        }
        if let Some(d) = st.dist {
            if !st.sent {
                st.sent = true;
                out.broadcast(Payload::one(d));
            }
        }
        Control::Sleep
    }
}

/// Builds a BFS tree as a real protocol run: every node broadcasts its hop
/// distance exactly once, so each channel direction carries one message and
/// the run finishes within `depth + 1` rounds.
pub fn build_bfs_tree(
    topo: &Topology,
    root: NodeId,
    seed: u64,
) -> Result<(BfsTree, RunMetrics), SimError> {
    let cfg = EngineConfig::new(word_cap(topo.n(), 1), topo.n() as u64 + 2);
    let (states, metrics) = run_protocol(topo, &BfsBuild { root }, seed, &cfg)?;

    let n = topo.n();
    let mut parent = vec![root; n];
    let mut depth_of = vec![0u32; n];
    let mut children: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    let mut depth = 0;
    for (u, st) in states.iter().enumerate() {
        let d = st.dist.expect("topology is connected") as u32;
        depth_of[u] = d;
        depth = depth.max(d);
        if u as NodeId != root {
            let p = st.parent.expect("non-root learned from someone");
            parent[u] = p;
            children[p as usize].push(u as NodeId);
        }
    }
    Ok((
        BfsTree {
            root,
            parent,
            children,
            depth_of,
            depth,
        },
        metrics,
    ))
}

/// Estimates the hop diameter as twice the depth of a BFS tree from node 0,
/// giving a value in `[D, 2D]`.
pub fn estimate_diameter(topo: &Topology, seed: u64) -> Result<(u64, RunMetrics), SimError> {
    let (tree, metrics) = build_bfs_tree(topo, 0, seed)?;
    Ok(((2 * tree.depth as u64).max(1), metrics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family, GeneratorSpec};

    #[test]
    fn star_rooted_at_center() {
        let topo = Topology::new(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let (tree, m) = build_bfs_tree(&topo, 0, 0).unwrap();
        assert_eq!(tree.depth, 1);
        assert!(tree.parent.iter().enumerate().all(|(_, &p)| p == 0));
        assert!(m.rounds <= 2);
        assert!(m.edge_messages.iter().all(|&c| c == 1));
    }

    #[test]
    fn path_rooted_at_end() {
        let topo = Topology::new(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]).unwrap();
        let (tree, m) = build_bfs_tree(&topo, 0, 0).unwrap();
        assert_eq!(tree.depth, 5);
        assert!(m.rounds <= 6);
    }

    #[test]
    fn random_graph_depth_matches_oracle_eccentricity() {
        let inst = generate(&GeneratorSpec::new(Family::ErdosRenyiConnected, 50, 5, 13)).unwrap();
        let topo = inst.topology();
        for root in [0u32, 7, 23] {
            let (tree, m) = build_bfs_tree(topo, root, 0).unwrap();
            assert_eq!(tree.depth, topo.eccentricity(root));
            for u in 0..topo.n() {
                assert_eq!(
                    tree.depth_of[u],
                    topo.bfs_levels(root)[u].unwrap(),
                    "node {u}"
                );
            }
            assert!(m.rounds as u32 <= tree.depth + 1);
            assert!(m.edge_messages.iter().all(|&c| c == 1));
        }
    }

    #[test]
    fn diameter_estimate_brackets_truth() {
        // K4: true D = 1, estimate 2.
        let topo = Topology::new(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(estimate_diameter(&topo, 0).unwrap().0, 2);

        let topo = Topology::new(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(estimate_diameter(&topo, 0).unwrap().0, 6);

        let inst =
            generate(&GeneratorSpec::new(Family::ErdosRenyiConnected, 100, 5, 3)).unwrap();
        let d = inst.topology().exact_diameter() as u64;
        let (est, _) = estimate_diameter(inst.topology(), 0).unwrap();
        assert!(est >= d && est <= 2 * d, "D={d} estimate={est}");
    }
}
