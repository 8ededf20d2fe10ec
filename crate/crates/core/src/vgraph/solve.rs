use std::sync::Arc;

use thiserror::Error;

use crate::graph::Topology;
use crate::oracle;
use crate::scaling::{iteration_count, weight_prefix};
use crate::sim::{
    pipelined_broadcast, word_cap, BfsTree, EngineConfig, Payload, RunMetrics, SimError,
};
use crate::vgraph::{
    run_virtual_batch, VControl, VHeard, VirtualGraph, VirtualJob, VirtualProgram,
};
use crate::{Dist, NodeId, INF};

#[derive(Debug, Error)]
pub enum VgError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("negative virtual reweighted edge ({tail},{head}) = {value}")]
    NegativeWeight { tail: u32, head: u32, value: i128 },
    #[error("radius promise violated: virtual node {node} has distance {dist} > {bound}")]
    PromiseViolation { node: u32, dist: Dist, bound: Dist },
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("recursion deeper than {limit} levels")]
    RecursionDepthExceeded { limit: u32 },
}

#[derive(Debug, Clone, Copy, Default)]
pub struct VgOptions {
    /// Oracle cross-checks: radius promises and per-bucket distances.
    pub debug_oracle: bool,
}

#[derive(Debug, Clone)]
pub struct VirtualSolveOutcome {
    /// Distance per virtual index.
    pub dist: Vec<Dist>,
    pub metrics: RunMetrics,
    pub virtual_rounds: u64,
    pub broadcasts: u64,
}

/// The queue protocol: process distance values `0, 1, 2, ...` in order; a
/// node broadcasts once, in the round its distance equals the current value,
/// and every node advances the value after a round with no broadcasts.
struct QueueProgram {
    k: u64,
}

#[derive(Clone)]
struct QueueState {
    d: Dist,
    i: u64,
    sent: bool,
}

impl VirtualProgram for QueueProgram {
    type VState = QueueState;

    fn init(&self, v: u32, g: &VirtualGraph) -> (QueueState, VControl) {
        let d = if v == g.source { 0 } else { INF };
        (QueueState { d, i: 0, sent: false }, VControl::WakeAt(0))
    }

    fn step(
        &self,
        st: &mut QueueState,
        v: u32,
        round: u64,
        heard: &[VHeard],
        g: &VirtualGraph,
    ) -> (Option<u64>, VControl) {
        if round > 0 {
            if heard.is_empty() {
                st.i += 1;
            } else {
                for h in heard {
                    for &(tail, w) in &g.in_edges[v as usize] {
                        if tail == h.origin {
                            st.d = st.d.min(h.value + w);
                        }
                    }
                }
            }
        }
        let mut emit = None;
        if !st.sent && st.d == st.i {
            st.sent = true;
            emit = Some(st.d);
        }
        // A node that has broadcast holds its final distance; it only needs
        // to keep listening, which message delivery provides for free.
        if st.sent || st.i >= self.k {
            (emit, VControl::Sleep)
        } else {
            (emit, VControl::WakeAt(round + 1))
        }
    }
}

/// Exact SSSP on a virtual graph under the promise `d(s, v') <= n_v - 1`.
/// Uses at most one broadcast per virtual node and at most `2 n_v` virtual
/// rounds.
pub fn small_weight_virtual_sssp(
    topo: &Topology,
    tree: &Arc<BfsTree>,
    g: &Arc<VirtualGraph>,
    opts: &VgOptions,
) -> Result<VirtualSolveOutcome, VgError> {
    let nv = g.n_virtual() as u64;
    if opts.debug_oracle {
        let want = oracle::dijkstra(&g.adj_list(), g.source);
        for (v, &d) in want.dist.iter().enumerate() {
            if d != INF && d > nv.saturating_sub(1) {
                return Err(VgError::PromiseViolation {
                    node: v as u32,
                    dist: d,
                    bound: nv - 1,
                });
            }
        }
    }
    let job = VirtualJob {
        program: QueueProgram { k: nv },
        graph: Arc::clone(g),
    };
    let wcap = word_cap(topo.n(), g.max_weight().max(nv));
    let out = run_virtual_batch(topo, tree, &[job], wcap, 2 * nv + 4)?;
    Ok(VirtualSolveOutcome {
        dist: out.states[0].iter().map(|s| s.d).collect(),
        metrics: out.metrics,
        virtual_rounds: out.virtual_rounds,
        broadcasts: out.broadcasts[0],
    })
}

/// Broadcasts every virtual node's current distance to all nodes (used by
/// the virtualized scaling reweighting). `INF` entries are skipped.
pub(crate) fn broadcast_table(
    topo: &Topology,
    tree: &Arc<BfsTree>,
    g: &VirtualGraph,
    values: &[Dist],
    extra_cap: u64,
) -> Result<RunMetrics, SimError> {
    let mut items: Vec<Vec<Payload>> = vec![Vec::new(); topo.n()];
    for (v, &d) in values.iter().enumerate() {
        if d != INF {
            items[g.hosts[v] as usize].push(Payload::two(v as u64, d));
        }
    }
    let cfg = EngineConfig::new(
        word_cap(topo.n(), extra_cap.max(g.n_virtual() as u64)),
        u64::MAX / 2,
    );
    let (_, m) = pipelined_broadcast(topo, Arc::clone(tree), items, &cfg)?;
    Ok(m)
}

/// Exact SSSP on a virtual graph with weights up to poly(n): virtualized
/// scaling over the virtual edges, each iteration solved by `inner` under
/// the radius promise `n_v - 1`, with one global broadcast of all current
/// distances between iterations.
pub(crate) fn virtual_scaling<F>(
    topo: &Topology,
    tree: &Arc<BfsTree>,
    g: &Arc<VirtualGraph>,
    opts: &VgOptions,
    mut inner: F,
) -> Result<VirtualSolveOutcome, VgError>
where
    F: FnMut(&Arc<VirtualGraph>) -> Result<VirtualSolveOutcome, VgError>,
{
    let nv = g.n_virtual();
    let mut metrics = RunMetrics::new(topo);
    let mut vrounds = 0;
    let mut bcasts = 0;
    let t = iteration_count(g.max_weight());
    let mut dtilde: Vec<Dist> = vec![0; nv];

    for i in 1..=t {
        // Everyone already knows the all-zero table of the first iteration.
        if i > 1 {
            let m = broadcast_table(topo, tree, g, &dtilde, g.max_weight())?;
            metrics.absorb(&m);
        }
        let mut neg: Option<VgError> = None;
        let ell = g.with_in_weights(|tail, head, w| {
            let wi = weight_prefix(w, i, t).expect("weight fits scaling bits");
            let v = 2 * dtilde[tail as usize] as i128 + wi as i128
                - 2 * dtilde[head as usize] as i128;
            if v < 0 {
                neg.get_or_insert(VgError::NegativeWeight {
                    tail,
                    head,
                    value: v,
                });
                0
            } else {
                v as u64
            }
        });
        if let Some(e) = neg {
            return Err(e);
        }
        let mut ell = ell;
        ell.radius = nv.saturating_sub(1) as u64;
        let sub = inner(&Arc::new(ell))?;
        metrics.absorb(&sub.metrics);
        vrounds += sub.virtual_rounds;
        bcasts += sub.broadcasts;
        for (d, &x) in dtilde.iter_mut().zip(&sub.dist) {
            *d = if *d == INF || x == INF { INF } else { 2 * *d + x };
        }
    }

    if opts.debug_oracle {
        let want = oracle::dijkstra(&g.adj_list(), g.source).dist;
        for (v, (&got, &w)) in dtilde.iter().zip(&want).enumerate() {
            if got != w {
                return Err(VgError::PromiseViolation {
                    node: v as u32,
                    dist: got,
                    bound: w,
                });
            }
        }
    }
    Ok(VirtualSolveOutcome {
        dist: dtilde,
        metrics,
        virtual_rounds: vrounds,
        broadcasts: bcasts,
    })
}

/// `VirtualSSSP` of the base algorithm: virtualized scaling with the queue
/// protocol as the inner solver.
pub fn virtual_sssp(
    topo: &Topology,
    tree: &Arc<BfsTree>,
    g: &Arc<VirtualGraph>,
    opts: &VgOptions,
) -> Result<VirtualSolveOutcome, VgError> {
    virtual_scaling(topo, tree, g, opts, |ell| {
        small_weight_virtual_sssp(topo, tree, ell, opts)
    })
}

/// Gathers the whole virtual graph at every node via pipelined broadcast
/// (`2 depth + 2|E'| + 2` rounds), then solves locally.
pub fn virtual_sssp_gather(
    topo: &Topology,
    tree: &Arc<BfsTree>,
    g: &Arc<VirtualGraph>,
) -> Result<VirtualSolveOutcome, VgError> {
    let nv = g.n_virtual() as u64;
    let mut items: Vec<Vec<Payload>> = vec![Vec::new(); topo.n()];
    let mut edges = 0u64;
    for (head, list) in g.in_edges.iter().enumerate() {
        let host = g.hosts[head] as usize;
        for &(tail, w) in list {
            items[host].push(Payload::two(tail as u64 * nv + head as u64, w));
            edges += 1;
        }
    }
    let cfg = EngineConfig::new(
        word_cap(topo.n(), g.max_weight().max(nv * nv)),
        u64::MAX / 2,
    );
    let (_, metrics) = pipelined_broadcast(topo, Arc::clone(tree), items, &cfg)?;
    // Every node now holds the full edge list; the local computation is the
    // same everywhere.
    let dist = oracle::dijkstra(&g.adj_list(), g.source).dist;
    Ok(VirtualSolveOutcome {
        dist,
        metrics,
        virtual_rounds: 1,
        broadcasts: edges,
    })
}

/// Unified entry: solves a virtual graph exactly with the requested variant.
/// Queue, nonrecursive and recursive run under the virtualized scaling
/// wrapper (which normalizes the radius to `n_v - 1` per iteration); gather
/// is radius-oblivious.
pub fn solve_virtual_exact(
    topo: &Topology,
    tree: &Arc<BfsTree>,
    g: &Arc<VirtualGraph>,
    variant: &crate::vgraph::VirtualVariant,
    d_hat: u64,
    seed: u64,
    opts: &VgOptions,
) -> Result<VirtualSolveOutcome, VgError> {
    use crate::vgraph::VirtualVariant::*;
    match variant {
        Queue => virtual_sssp(topo, tree, g, opts),
        Gather => virtual_sssp_gather(topo, tree, g),
        Nonrecursive => virtual_scaling(topo, tree, g, opts, |ell| {
            let k = (d_hat as f64).sqrt().ceil() as u64;
            crate::vgraph::variants::nonrecursive_with_defaults(
                topo, tree, ell, k, d_hat, seed, opts,
            )
        }),
        Recursive(eps) => virtual_scaling(topo, tree, g, opts, |ell| {
            crate::vgraph::variants::recursive_solve(topo, tree, ell, *eps, d_hat, seed, opts, 0)
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family, GeneratorSpec};
    use crate::sim::build_bfs_tree;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn setup(n: usize, seed: u64) -> (Arc<WeightedHost>, Arc<BfsTree>) {
        let inst =
            generate(&GeneratorSpec::new(Family::ErdosRenyiConnected, n, 4, seed)).unwrap();
        let topo = inst.topology_arc();
        let (tree, _) = build_bfs_tree(&topo, 0, 0).unwrap();
        (Arc::new(WeightedHost { topo }), Arc::new(tree))
    }

    struct WeightedHost {
        topo: Arc<Topology>,
    }

    /// Random virtual graph with source radius strictly below `n_v`.
    pub(crate) fn random_virtual_graph(
        topo: &Topology,
        nv: usize,
        seed: u64,
        max_w: u64,
    ) -> Arc<VirtualGraph> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = topo.n();
        assert!(nv <= n);
        let mut hosts: Vec<NodeId> = (0..n as NodeId).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            hosts.swap(i, j);
        }
        hosts.truncate(nv);
        hosts.sort_unstable();
        let mut g = VirtualGraph::new(hosts, 0, nv as u64 - 1);
        // Backbone path of small weights keeps the radius within the
        // promise; extra random edges only shorten distances.
        for v in 1..nv as u32 {
            g.add_edge(v - 1, v, rng.random_range(0..=1));
        }
        for _ in 0..2 * nv {
            let a = rng.random_range(0..nv as u32);
            let b = rng.random_range(0..nv as u32);
            if a != b {
                g.add_edge(a, b, rng.random_range(0..=max_w));
            }
        }
        Arc::new(g)
    }

    #[test]
    fn singleton_graph() {
        let (host, tree) = setup(8, 1);
        let g = Arc::new(VirtualGraph::new(vec![3], 0, 0));
        let out =
            small_weight_virtual_sssp(&host.topo, &tree, &g, &VgOptions::default()).unwrap();
        assert_eq!(out.dist, vec![0]);
        assert!(out.broadcasts <= 1);
    }

    #[test]
    fn queue_trace_zero_then_one() {
        // edges (s,a) w=0, (a,b) w=1: values 0,0,1.
        let (host, tree) = setup(10, 2);
        let mut g = VirtualGraph::new(vec![1, 4, 7], 0, 2);
        g.add_edge(0, 1, 0);
        g.add_edge(1, 2, 1);
        let g = Arc::new(g);
        let out =
            small_weight_virtual_sssp(&host.topo, &tree, &g, &VgOptions::default()).unwrap();
        assert_eq!(out.dist, vec![0, 0, 1]);
        assert_eq!(out.broadcasts, 3);
        assert!(out.virtual_rounds <= 6);
    }

    #[test]
    fn random_small_weight_graphs_match_oracle() {
        let (host, tree) = setup(60, 3);
        for seed in 0..30 {
            let g = random_virtual_graph(&host.topo, 25, seed, 1);
            let opts = VgOptions { debug_oracle: true };
            let out = small_weight_virtual_sssp(&host.topo, &tree, &g, &opts).unwrap();
            let want = oracle::dijkstra(&g.adj_list(), 0).dist;
            assert_eq!(out.dist, want, "seed {seed}");
            assert!(out.broadcasts <= 25);
            assert!(out.virtual_rounds <= 50, "vrounds = {}", out.virtual_rounds);
        }
    }

    #[test]
    fn scaling_wrapper_handles_large_weights() {
        let (host, tree) = setup(40, 4);
        // Single edge of weight lambda: log-many iterations reconstruct it.
        let mut g = VirtualGraph::new(vec![2, 9], 0, 1 << 9);
        g.add_edge(0, 1, 513);
        let g = Arc::new(g);
        let out = virtual_sssp(&host.topo, &tree, &g, &VgOptions::default()).unwrap();
        assert_eq!(out.dist, vec![0, 513]);
    }

    #[test]
    fn unit_clique_distances() {
        let (host, tree) = setup(20, 5);
        let mut g = VirtualGraph::new(vec![0, 5, 10, 15], 0, 3);
        for a in 0..4u32 {
            for b in 0..4u32 {
                if a != b {
                    g.add_edge(a, b, 1);
                }
            }
        }
        let g = Arc::new(g);
        let out = virtual_sssp(&host.topo, &tree, &g, &VgOptions::default()).unwrap();
        assert_eq!(out.dist, vec![0, 1, 1, 1]);
    }

    #[test]
    fn virtual_sssp_random_weights_exact() {
        let (host, tree) = setup(50, 6);
        for seed in 0..20 {
            let g = random_virtual_graph(&host.topo, 30, 100 + seed, 900);
            let out = virtual_sssp(&host.topo, &tree, &g, &VgOptions::default()).unwrap();
            let want = oracle::dijkstra(&g.adj_list(), 0).dist;
            assert_eq!(out.dist, want, "seed {seed}");
        }
    }

    #[test]
    fn gather_is_exact_with_metered_rounds() {
        let (host, tree) = setup(50, 7);
        for seed in 0..5 {
            let g = random_virtual_graph(&host.topo, 40, 200 + seed, 50);
            let out = virtual_sssp_gather(&host.topo, &tree, &g).unwrap();
            let want = oracle::dijkstra(&g.adj_list(), 0).dist;
            assert_eq!(out.dist, want);
            let e = g.edge_count() as u64;
            assert!(out.metrics.rounds <= 2 * tree.depth as u64 + 2 * e + 2);
        }
    }

    #[test]
    fn gather_empty_graph_only_source_reachable() {
        let (host, tree) = setup(12, 8);
        let g = Arc::new(VirtualGraph::new(vec![1, 5, 9], 1, 0));
        let out = virtual_sssp_gather(&host.topo, &tree, &g).unwrap();
        assert_eq!(out.dist, vec![INF, 0, INF]);
        assert_eq!(out.metrics.total_messages(), 0);
    }
}
