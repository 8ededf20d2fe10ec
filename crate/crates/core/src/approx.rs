//! Approximate SSSP precomputation: timed bounded-distance search, the
//! `(1+eps)`-multiplicative bounded-hop wrapper built from logarithmically
//! many rescaled bounded-distance runs, and the additive-error SSSP that the
//! bucketed main algorithm uses to pin down bucket membership.
//!
//! All error arithmetic is exact: approximate distances are rationals with a
//! run-wide denominator, and every rescaling is an integer ceiling division.

use std::sync::Arc;

use thiserror::Error;

use crate::graph::WeightedInstance;
use crate::pipeline::sample_virtual_nodes;
use crate::sim::{
    run_protocol, schedule_parallel, word_cap, BfsTree, Control, Delivery, EngineConfig,
    NodeProgram, Outbox, Payload, ProtocolCtx, RunMetrics, ScheduleBounds, ScheduleConfig,
    SimError,
};
use crate::vgraph::{virtual_sssp, VgError, VgOptions, VirtualGraph};
use crate::{Dist, NodeId, INF};

#[derive(Debug, Error)]
pub enum ApproxError {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error("node {0} unreachable within the hop/radius promise")]
    Incomplete(NodeId),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Vg(#[from] VgError),
}

/// Per-node approximate distances as exact rationals `num / den`, tagged
/// with the source. `u128::MAX` numerator marks "unknown".
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ApproxTable {
    pub source: NodeId,
    pub num: Vec<u128>,
    pub den: u128,
}

pub const APPROX_INF: u128 = u128::MAX;

impl ApproxTable {
    pub fn is_finite(&self, v: usize) -> bool {
        self.num[v] != APPROX_INF
    }

    /// Whether the value lies in the half-open integer window `[lo, hi)`.
    pub fn in_window(&self, v: usize, lo: u64, hi: u64) -> bool {
        self.num[v] != APPROX_INF
            && lo as u128 * self.den <= self.num[v]
            && self.num[v] < hi as u128 * self.den
    }

    /// `value >= x` for an integer `x`.
    pub fn at_least(&self, v: usize, x: u64) -> bool {
        self.num[v] == APPROX_INF || self.num[v] >= x as u128 * self.den
    }

    /// `value <= x` for an integer `x`.
    pub fn at_most(&self, v: usize, x: u64) -> bool {
        self.num[v] != APPROX_INF && self.num[v] <= x as u128 * self.den
    }

    pub fn as_f64(&self, v: usize) -> f64 {
        if self.num[v] == APPROX_INF {
            f64::INFINITY
        } else {
            self.num[v] as f64 / self.den as f64
        }
    }
}

fn ceil_div(a: u128, b: u128) -> u128 {
    debug_assert!(b > 0);
    a.div_ceil(b)
}

/// Initialization of a bounded-distance run.
#[derive(Clone)]
pub enum BdInit {
    Source(NodeId),
    /// Per-node starting values on the run's weight grid; `u64::MAX` = none.
    Table(Arc<Vec<u64>>),
}

/// Timed single-tree-wave search: a node whose current estimate equals the
/// round number broadcasts it, once. Estimates above `cap` are discarded, so
/// the run lasts at most `cap + 1` rounds and each node broadcasts at most
/// once.
pub struct BoundedDistanceProgram {
    /// Grid weights per directed channel, all at least 1.
    pub w: Arc<Vec<u64>>,
    pub init: BdInit,
    pub cap: u64,
}

#[derive(Clone)]
pub struct BdState {
    pub d: Dist,
    sent: bool,
}

impl NodeProgram for BoundedDistanceProgram {
    type State = BdState;

    fn init(&self, node: NodeId, _ctx: &ProtocolCtx) -> (BdState, Control) {
        let d = match &self.init {
            BdInit::Source(s) => {
                if node == *s {
                    0
                } else {
                    INF
                }
            }
            BdInit::Table(t) => t[node as usize],
        };
        let d = if d <= self.cap { d } else { INF };
        let ctl = if d != INF {
            Control::WakeAt(d)
        } else {
            Control::Sleep
        };
        (BdState { d, sent: false }, ctl)
    }

    fn step(
        &self,
        st: &mut BdState,
        node: NodeId,
        round: u64,
        inbox: &[Delivery],
        out: &mut Outbox,
        ctx: &ProtocolCtx,
    ) -> Control {
        for m in inbox {
            let chan = ctx
                .topo
                .channel_between(m.from, node)
                .expect("sender adjacent");
            let cand = m.payload.a + self.w[chan as usize];
            if cand <= self.cap && cand < st.d {
                st.d = cand;
            }
        }
        if !st.sent && st.d == round {
            st.sent = true;
            out.broadcast(Payload::one(st.d));
            return Control::Sleep;
        }
        if !st.sent && st.d != INF && st.d > round {
            Control::WakeAt(st.d)
        } else {
            Control::Sleep
        }
    }
}

/// Exact distances up to `cap`, `INF` beyond; at most `cap + 1` rounds and
/// one broadcast per node.
pub fn bounded_distance_sssp(
    inst: &WeightedInstance,
    w: Arc<Vec<u64>>,
    source: NodeId,
    cap: u64,
) -> Result<(Vec<Dist>, RunMetrics), ApproxError> {
    if w.iter().any(|&x| x == 0) {
        return Err(ApproxError::Param("grid weights must be >= 1".into()));
    }
    let max_w = w.iter().copied().max().unwrap_or(1);
    let prog = BoundedDistanceProgram {
        w,
        init: BdInit::Source(source),
        cap,
    };
    let cfg = EngineConfig::new(word_cap(inst.n(), max_w.max(cap)), cap + 2);
    let (states, metrics) = run_protocol(inst.topology(), &prog, 0, &cfg)?;
    Ok((states.into_iter().map(|s| s.d).collect(), metrics))
}

/// Grid scale of instance `i`: weights `max(1, ceil(2h*w / (eps * 2^i)))`.
fn grid_weights(inst: &WeightedInstance, h: u64, eps_num: u64, eps_den: u64, i: u32) -> Vec<u64> {
    inst.weights()
        .iter()
        .map(|&w| {
            let num = 2 * h as u128 * w as u128 * eps_den as u128;
            let den = eps_num as u128 * (1u128 << i);
            (ceil_div(num, den) as u64).max(1)
        })
        .collect()
}

/// Cap `K`: covers `(1 + 2/eps)h` plus the ceiling slack of initial values.
fn grid_cap(h: u64, eps_num: u64, eps_den: u64) -> u64 {
    ceil_div(2 * h as u128 * eps_den as u128, eps_num as u128) as u64 + 3 * h + 2
}

fn log2_ceil(x: u64) -> u32 {
    64 - x.max(1).saturating_sub(1).leading_zeros()
}

/// `(1+eps)`-multiplicative approximate `h`-hop distances, from
/// logarithmically many bounded-distance runs on rescaled grids, scheduled
/// concurrently. `radius_bound` is the promised source radius (grids cover
/// distances up to twice this bound).
pub fn bounded_hop_sssp(
    inst: &Arc<WeightedInstance>,
    source: NodeId,
    h: u64,
    eps_num: u64,
    eps_den: u64,
    radius_bound: u64,
    seed: u64,
) -> Result<(ApproxTable, RunMetrics), ApproxError> {
    if eps_num == 0 || eps_num > eps_den {
        return Err(ApproxError::Param(format!(
            "eps must be in (0, 1], got {eps_num}/{eps_den}"
        )));
    }
    let i_max = log2_ceil(radius_bound).max(1);
    let cap = grid_cap(h, eps_num, eps_den);
    let programs: Vec<BoundedDistanceProgram> = (1..=i_max)
        .map(|i| BoundedDistanceProgram {
            w: Arc::new(grid_weights(inst, h, eps_num, eps_den, i)),
            init: BdInit::Source(source),
            cap,
        })
        .collect();
    let bounds = ScheduleBounds {
        dilation: cap + 2,
        congestion: 2 * i_max as u64,
    };
    let max_grid_w = programs
        .iter()
        .flat_map(|p| p.w.iter().copied())
        .max()
        .unwrap_or(1);
    let cfg = ScheduleConfig::new(word_cap(inst.n(), max_grid_w.max(cap)));
    let (outs, metrics) = schedule_parallel(inst.topology(), &programs, seed, bounds, &cfg)?;

    // value_i = (eps * 2^i / 2h) * d_i; common denominator 2h * eps_den.
    let den = 2 * h as u128 * eps_den as u128;
    let mut num = vec![APPROX_INF; inst.n()];
    for (idx, states) in outs.iter().enumerate() {
        let i = idx as u32 + 1;
        for (v, st) in states.iter().enumerate() {
            if st.d != INF {
                let cand = eps_num as u128 * (1u128 << i) * st.d as u128;
                if cand < num[v] {
                    num[v] = cand;
                }
            }
        }
    }
    Ok((ApproxTable { source, num, den }, metrics))
}

#[derive(Debug, Clone, Copy)]
pub struct AdditiveOptions {
    /// Lemma-3 sampling constant for the hop budget `ceil(c_h n ln n / k)`.
    pub c_h: u64,
    pub debug_oracle: bool,
}

impl Default for AdditiveOptions {
    fn default() -> Self {
        AdditiveOptions {
            c_h: 3,
            debug_oracle: false,
        }
    }
}

pub fn hop_budget(n: usize, k: u64, c_h: u64) -> u64 {
    let ln_n = (n.max(2) as f64).ln();
    ((c_h as f64 * n as f64 * ln_n / k.max(1) as f64).ceil() as u64).max(1)
}

/// Additive-error SSSP under the scaling promise (radius <= n-1): skeleton
/// sampling, concurrent bounded-hop searches from every skeleton node, an
/// exact solve of the skeleton graph (quantized onto the additive-budget
/// grid to keep its weights polynomially small), and a final bounded-hop
/// extension seeded with the skeleton distances. Satisfies
/// `d <= result <= d + alpha` for every node.
pub fn additive_sssp(
    inst: &Arc<WeightedInstance>,
    tree: &Arc<BfsTree>,
    source: NodeId,
    alpha: u64,
    k: u64,
    opts: &AdditiveOptions,
    seed: u64,
) -> Result<(ApproxTable, RunMetrics), ApproxError> {
    if alpha == 0 || k == 0 {
        return Err(ApproxError::Param("alpha and k must be >= 1".into()));
    }
    let n = inst.n();
    let topo = inst.topology();
    if n == 1 {
        return Ok((
            ApproxTable {
                source,
                num: vec![0],
                den: 1,
            },
            RunMetrics::new(topo),
        ));
    }
    let mut metrics = RunMetrics::new(topo);

    // eps_r = alpha / (12 n): two multiplicative phases plus the skeleton
    // quantization must compose to an additive error below alpha.
    let eps_num = alpha;
    let eps_den = 12 * n as u64;
    let h = hop_budget(n, k, opts.c_h);
    let cap = grid_cap(h, eps_num, eps_den);
    let i_max = log2_ceil(n as u64 - 1) + 2;

    let skeleton = sample_virtual_nodes(n, source, k, seed ^ 0x5eed_0001);
    let nv = skeleton.len();
    let src_idx = skeleton.binary_search(&source).expect("source sampled") as u32;

    let grids: Vec<Arc<Vec<u64>>> = (1..=i_max)
        .map(|i| Arc::new(grid_weights(inst, h, eps_num, eps_den, i)))
        .collect();
    let max_grid_w = grids
        .iter()
        .flat_map(|w| w.iter().copied())
        .max()
        .unwrap_or(1);
    let sched_cfg = ScheduleConfig::new(word_cap(n, max_grid_w.max(cap)));

    // Phase 1: bounded-distance runs from every skeleton node on every grid.
    let mut programs = Vec::with_capacity(nv * i_max as usize);
    for &u in &skeleton {
        for w in &grids {
            programs.push(BoundedDistanceProgram {
                w: Arc::clone(w),
                init: BdInit::Source(u),
                cap,
            });
        }
    }
    let bounds = ScheduleBounds {
        dilation: cap + 2,
        congestion: 2 * programs.len() as u64,
    };
    let (outs, m) = schedule_parallel(topo, &programs, seed ^ 0x5eed_0002, bounds, &sched_cfg)?;
    metrics.absorb(&m);

    // Skeleton-to-skeleton rationals with denominator 2h * eps_den.
    let den_t = 2 * h as u128 * eps_den as u128;
    let mut pair_num = vec![APPROX_INF; nv * nv];
    for (a, &_u) in skeleton.iter().enumerate() {
        for (idx, states) in outs[a * i_max as usize..(a + 1) * i_max as usize]
            .iter()
            .enumerate()
        {
            let i = idx as u32 + 1;
            for (b, &v_node) in skeleton.iter().enumerate() {
                let st = &states[v_node as usize];
                if st.d != INF {
                    let cand = eps_num as u128 * (1u128 << i) * st.d as u128;
                    let slot = &mut pair_num[a * nv + b];
                    if cand < *slot {
                        *slot = cand;
                    }
                }
            }
        }
    }
    drop(outs);

    // Quantize onto units of alpha / (8 (nv + 1)) and solve exactly. Edges
    // whose estimate exceeds 2n are overestimates of useless pairs and are
    // dropped to keep the quantized weights small.
    let qd = 8 * (nv as u128 + 1);
    let mut skel_graph = VirtualGraph::new(
        skeleton.clone(),
        src_idx,
        ceil_div(2 * n as u128 * qd, alpha as u128) as u64 + 2,
    );
    for a in 0..nv {
        for b in 0..nv {
            let numv = pair_num[a * nv + b];
            if a == b || numv == APPROX_INF || numv > 2 * n as u128 * den_t {
                continue;
            }
            let wq = ceil_div(numv * qd, den_t * alpha as u128) as u64;
            skel_graph.add_edge(a as u32, b as u32, wq);
        }
    }
    let vg_opts = VgOptions {
        debug_oracle: false,
    };
    let skel = virtual_sssp(topo, tree, &Arc::new(skel_graph), &vg_opts)?;
    metrics.absorb(&skel.metrics);

    // Phase 2: one bounded-distance run per grid, seeded with the skeleton
    // distances converted onto that grid.
    let mut ext_programs = Vec::with_capacity(i_max as usize);
    for (idx, w) in grids.iter().enumerate() {
        let i = idx as u32 + 1;
        let mut init = vec![INF; n];
        for (a, &u) in skeleton.iter().enumerate() {
            if skel.dist[a] != INF {
                // delta0 / unit_i = dist_q * (alpha/qd) * (2h eps_den) / (alpha 2^i)
                let v = ceil_div(
                    skel.dist[a] as u128 * 2 * h as u128 * eps_den as u128,
                    qd * (1u128 << i),
                );
                init[u as usize] = u64::try_from(v).unwrap_or(INF);
            }
        }
        ext_programs.push(BoundedDistanceProgram {
            w: Arc::clone(w),
            init: BdInit::Table(Arc::new(init)),
            cap,
        });
    }
    let bounds = ScheduleBounds {
        dilation: cap + 2,
        congestion: 2 * ext_programs.len() as u64,
    };
    let (outs, m) = schedule_parallel(topo, &ext_programs, seed ^ 0x5eed_0003, bounds, &sched_cfg)?;
    metrics.absorb(&m);

    // Final table with denominator den_t * qd.
    let den = den_t * qd;
    let mut num = vec![APPROX_INF; n];
    num[source as usize] = 0;
    for (idx, states) in outs.iter().enumerate() {
        let i = idx as u32 + 1;
        for (v, st) in states.iter().enumerate() {
            if st.d != INF {
                let cand = eps_num as u128 * (1u128 << i) * st.d as u128 * qd;
                if cand < num[v] {
                    num[v] = cand;
                }
            }
        }
    }
    for (a, &u) in skeleton.iter().enumerate() {
        if skel.dist[a] != INF {
            let cand = skel.dist[a] as u128 * alpha as u128 * den_t;
            if cand < num[u as usize] {
                num[u as usize] = cand;
            }
        }
    }
    if let Some(v) = num.iter().position(|&x| x == APPROX_INF) {
        return Err(ApproxError::Incomplete(v as NodeId));
    }
    Ok((ApproxTable { source, num, den }, metrics))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family, GeneratorSpec, Topology};
    use crate::oracle;
    use crate::sim::build_bfs_tree;

    fn path_inst(weights: &[(u64, u64)]) -> Arc<WeightedInstance> {
        let n = weights.len() + 1;
        let edges: Vec<_> = (0..n as u32 - 1).map(|i| (i, i + 1)).collect();
        let topo = Arc::new(Topology::new(n, &edges).unwrap());
        let mut w = vec![0u64; topo.channels()];
        for (i, &(wf, wb)) in weights.iter().enumerate() {
            let c = topo.channel_between(i as u32, i as u32 + 1).unwrap();
            w[c as usize] = wf;
            w[topo.reverse(c) as usize] = wb;
        }
        Arc::new(WeightedInstance::derived(topo, w, vec![0]))
    }

    #[test]
    fn bounded_distance_cap_zero_reaches_only_source() {
        let inst = path_inst(&[(1, 1), (1, 1)]);
        let w = Arc::new(vec![1u64; inst.topology().channels()]);
        let (d, _) = bounded_distance_sssp(&inst, w, 0, 0).unwrap();
        assert_eq!(d, vec![0, INF, INF]);
    }

    #[test]
    fn bounded_distance_truncates_at_cap() {
        let inst = path_inst(&[(1, 1), (1, 1), (1, 1)]);
        let w = Arc::new(inst.weights().to_vec());
        let (d, m) = bounded_distance_sssp(&inst, w, 0, 2).unwrap();
        assert_eq!(d, vec![0, 1, 2, INF]);
        assert!(m.rounds <= 3);
        assert!(m.node_broadcasts.iter().all(|&b| b <= 1));
    }

    #[test]
    fn bounded_distance_median_cap_matches_thresholded_oracle() {
        let inst = Arc::new(
            generate(&GeneratorSpec::new(Family::ErdosRenyiConnected, 60, 8, 3)).unwrap(),
        );
        let want = oracle::dijkstra(&inst.adj_list(), 0).dist;
        let mut sorted = want.clone();
        sorted.sort_unstable();
        let cap = sorted[30];
        let (d, m) = bounded_distance_sssp(&inst, Arc::new(inst.weights().to_vec()), 0, cap)
            .unwrap();
        for v in 0..60 {
            if want[v] <= cap {
                assert_eq!(d[v], want[v]);
            } else {
                assert_eq!(d[v], INF);
            }
        }
        assert!(m.rounds <= cap + 1);
    }

    #[test]
    fn single_edge_hand_computed_grids() {
        // Single edge of weight 4, h = 1, eps = 1/2, radius bound 4.
        let inst = path_inst(&[(4, 4)]);
        let (t, _) = bounded_hop_sssp(&inst, 0, 1, 1, 2, 4, 0).unwrap();
        // exact within factor 1.5
        let lo = t.at_least(1, 4);
        let hi = t.num[1] * 2 <= 4 * 3 * t.den;
        assert!(lo && hi, "got {}", t.as_f64(1));
    }

    #[test]
    fn unit_weight_sandwich_with_eps_one() {
        let inst = Arc::new(generate(&GeneratorSpec::new(Family::Cycle, 12, 1, 2)).unwrap());
        let h = 11;
        let (t, _) = bounded_hop_sssp(&inst, 0, h, 1, 1, 11, 0).unwrap();
        let want = oracle::hop_bounded(&inst.adj_list(), 0, h as u32);
        for v in 0..12 {
            assert!(t.at_least(v, want[v]));
            assert!(t.num[v] <= 2 * want[v] as u128 * t.den);
        }
    }

    #[test]
    fn random_h_hop_sandwich_quarter_eps() {
        let inst = Arc::new(
            generate(&GeneratorSpec::new(Family::ErdosRenyiConnected, 60, 9, 11)).unwrap(),
        );
        let h = 15u64;
        let exact = oracle::dijkstra(&inst.adj_list(), 0).dist;
        let radius = exact.iter().copied().max().unwrap();
        let (t, m) = bounded_hop_sssp(&inst, 0, h, 1, 4, radius, 5).unwrap();
        let want = oracle::hop_bounded(&inst.adj_list(), 0, h as u32);
        for v in 0..60 {
            assert!(t.at_least(v, want[v]), "node {v} underestimated");
            if want[v] != INF {
                assert!(
                    4 * t.num[v] <= 5 * want[v] as u128 * t.den,
                    "node {v}: {} > 1.25 * {}",
                    t.as_f64(v),
                    want[v]
                );
            }
        }
        // Two messages per channel direction per grid instance.
        let i_max = log2_ceil(radius).max(1) as u64;
        for &c in &m.edge_messages {
            assert!(c <= 2 * i_max);
        }
    }

    #[test]
    fn additive_sandwich_on_scaled_style_instances() {
        for seed in 0..5 {
            let inst = Arc::new(
                generate(&GeneratorSpec::new(
                    Family::ErdosRenyiConnected,
                    60,
                    4,
                    100 + seed,
                ))
                .unwrap(),
            );
            let topo = inst.topology_arc();
            let (tree, _) = build_bfs_tree(&topo, 0, 0).unwrap();
            let tree = Arc::new(tree);
            let alpha = 8u64;
            let (t, _) =
                additive_sssp(&inst, &tree, 0, alpha, 10, &AdditiveOptions::default(), seed)
                    .unwrap();
            let want = oracle::dijkstra(&inst.adj_list(), 0).dist;
            for v in 0..inst.n() {
                assert!(t.at_least(v, want[v]), "seed {seed} node {v} under");
                assert!(
                    t.at_most(v, want[v] + alpha),
                    "seed {seed} node {v}: {} > {} + {alpha}",
                    t.as_f64(v),
                    want[v]
                );
            }
        }
    }

    #[test]
    fn additive_trivial_budget_still_no_underestimate() {
        let inst = Arc::new(
            generate(&GeneratorSpec::new(Family::ErdosRenyiConnected, 30, 2, 9)).unwrap(),
        );
        let topo = inst.topology_arc();
        let (tree, _) = build_bfs_tree(&topo, 0, 0).unwrap();
        let tree = Arc::new(tree);
        let (t, _) = additive_sssp(
            &inst,
            &tree,
            0,
            inst.n() as u64,
            4,
            &AdditiveOptions::default(),
            1,
        )
        .unwrap();
        let want = oracle::dijkstra(&inst.adj_list(), 0).dist;
        for v in 0..inst.n() {
            assert!(t.at_least(v, want[v]));
        }
    }
}
