//! Bit-prefix weight scaling: reduces SSSP with weights in `[0, 2^T)` to `T`
//! SSSP computations on reweighted graphs whose source radius is at most
//! `n - 1`, at one broadcast round per iteration for the reweighting.

use std::sync::Arc;

use thiserror::Error;

use crate::graph::WeightedInstance;
use crate::oracle;
use crate::sim::{
    run_protocol, word_cap, Control, Delivery, EngineConfig, NodeProgram, Outbox, Payload,
    ProtocolCtx, RunMetrics, SimError,
};
use crate::{Dist, DistanceTable, NodeId};

#[derive(Debug, Error)]
pub enum ScalingError {
    #[error("weight {w} out of range for {t} prefix bits")]
    Range { w: u64, t: u32 },
    #[error("negative reweighted edge ({u},{v}) = {value}; upstream distances are not exact")]
    NegativeWeight { u: NodeId, v: NodeId, value: i128 },
    #[error("iteration {iteration}: node {node} got {got}, oracle says {want}")]
    Consistency {
        iteration: u32,
        node: NodeId,
        got: Dist,
        want: Dist,
    },
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("inner solver: {0}")]
    Inner(String),
}

/// Number of scaling iterations for weights in `[0/1, lambda]`.
pub fn iteration_count(lambda: u64) -> u32 {
    64 - lambda.max(1).leading_zeros()
}

/// The integer formed by the `i` most significant of `t` bits of `w`.
pub fn weight_prefix(w: u64, i: u32, t: u32) -> Result<u64, ScalingError> {
    if t < 64 && w >= 1u64 << t {
        return Err(ScalingError::Range { w, t });
    }
    debug_assert!((1..=t).contains(&i));
    Ok(w >> (t - i))
}

/// One-round exchange: every node broadcasts its accumulated distance, then
/// reweights its outgoing edges as `2*d(u) + w_i(u,v) - 2*d(v)`.
struct ReweightExchange {
    prefix: Arc<Vec<u64>>,
    dtilde: Arc<Vec<Dist>>,
}

#[derive(Clone)]
struct ReweightState {
    ell_out: Vec<i128>,
}

impl NodeProgram for ReweightExchange {
    type State = ReweightState;

    fn init(&self, _node: NodeId, _ctx: &ProtocolCtx) -> (ReweightState, Control) {
        (ReweightState { ell_out: Vec::new() }, Control::WakeAt(0))
    }

    fn step(
        &self,
        st: &mut ReweightState,
        node: NodeId,
        round: u64,
        inbox: &[Delivery],
        out: &mut Outbox,
        ctx: &ProtocolCtx,
    ) -> Control {
        if round == 0 {
            out.broadcast(Payload::one(self.dtilde[node as usize]));
            return Control::Sleep;
        }
        // Round 1: the inbox holds every neighbor's distance.
        let nbs = ctx.topo.neighbors(node);
        let range = ctx.topo.channel_range(node);
        st.ell_out = vec![0; nbs.len()];
        let du = self.dtilde[node as usize] as i128;
        for d in inbox {
            let j = nbs.binary_search(&d.from).expect("sender is a neighbor");
            let w_i = self.prefix[range.start + j] as i128;
            st.ell_out[j] = 2 * du + w_i - 2 * d.payload.a as i128;
        }
        Control::Sleep
    }
}

/// Builds the iteration-`i` prefix-weight vector of `inst`.
pub fn prefix_weights(inst: &WeightedInstance, i: u32, t: u32) -> Result<Vec<u64>, ScalingError> {
    inst.weights()
        .iter()
        .map(|&w| weight_prefix(w, i, t))
        .collect()
}

/// Runs the reweighting exchange and returns the reweighted instance.
pub fn reweight(
    inst: &WeightedInstance,
    prefix: Arc<Vec<u64>>,
    dtilde: Arc<Vec<Dist>>,
) -> Result<(WeightedInstance, RunMetrics), ScalingError> {
    let topo = inst.topology();
    let max_seen = dtilde
        .iter()
        .copied()
        .max()
        .unwrap_or(0)
        .max(inst.max_weight());
    let cfg = EngineConfig::new(word_cap(topo.n(), max_seen), 4);
    let prog = ReweightExchange {
        prefix: Arc::clone(&prefix),
        dtilde,
    };
    let (states, metrics) = run_protocol(topo, &prog, 0, &cfg)?;

    let mut ell = vec![0u64; topo.channels()];
    for (u, st) in states.iter().enumerate() {
        let range = topo.channel_range(u as NodeId);
        for (j, c) in range.enumerate() {
            let value = st.ell_out[j];
            if value < 0 {
                let (u, v) = topo.endpoints(c as u32);
                return Err(ScalingError::NegativeWeight { u, v, value });
            }
            ell[c] = value as u64;
        }
    }
    Ok((inst.with_weights(ell), metrics))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ScalingOptions {
    /// Cross-check every iteration against the sequential oracle: reweighted
    /// radius bound, the distance recurrence, and final exactness.
    pub debug_oracle: bool,
}

pub struct ScalingOutcome {
    pub table: DistanceTable,
    pub metrics: RunMetrics,
    pub iterations: u32,
}

/// The outer scaling loop. `inner` must solve SSSP exactly on instances
/// promised to have source radius at most `n - 1`; it is invoked exactly
/// `floor(log2 lambda) + 1` times.
pub fn run_scaling<F>(
    inst: &WeightedInstance,
    source: NodeId,
    opts: &ScalingOptions,
    mut inner: F,
) -> Result<ScalingOutcome, ScalingError>
where
    F: FnMut(&WeightedInstance, NodeId, u32) -> Result<(Vec<Dist>, RunMetrics), ScalingError>,
{
    let n = inst.n();
    let t = iteration_count(inst.max_weight());
    let mut metrics = RunMetrics::new(inst.topology());
    let mut dtilde: Arc<Vec<Dist>> = Arc::new(vec![0; n]);

    for i in 1..=t {
        let prefix = Arc::new(prefix_weights(inst, i, t)?);
        let (ell_inst, m) = reweight(inst, Arc::clone(&prefix), Arc::clone(&dtilde))?;
        metrics.absorb(&m);

        if opts.debug_oracle {
            check_lemma_properties(inst, &ell_inst, &prefix, &dtilde, source, i)?;
        }

        let (delta, m) = inner(&ell_inst, source, i)?;
        metrics.absorb(&m);

        let next: Vec<Dist> = dtilde
            .iter()
            .zip(&delta)
            .map(|(&d, &x)| 2 * d + x)
            .collect();
        dtilde = Arc::new(next);

        if opts.debug_oracle {
            let want = oracle::dijkstra(&inst.with_weights((*prefix).clone()).adj_list(), source);
            for (v, (&got, &w)) in dtilde.iter().zip(&want.dist).enumerate() {
                if got != w {
                    return Err(ScalingError::Consistency {
                        iteration: i,
                        node: v as NodeId,
                        got,
                        want: w,
                    });
                }
            }
        }
    }

    Ok(ScalingOutcome {
        table: DistanceTable {
            source,
            dist: (*dtilde).clone(),
        },
        metrics,
        iterations: t,
    })
}

/// Lemma-level invariants of one iteration, asserted against the oracle:
/// nonnegative reweighted edges (already enforced), reweighted radius at most
/// `n - 1`, and `d_{w_i} = 2 d_{w_{i-1}} + d_{ell_i}` for every node.
fn check_lemma_properties(
    inst: &WeightedInstance,
    ell_inst: &WeightedInstance,
    prefix: &[u64],
    dtilde_prev: &[Dist],
    source: NodeId,
    i: u32,
) -> Result<(), ScalingError> {
    let ell_oracle = oracle::dijkstra(&ell_inst.adj_list(), source);
    let n = inst.n() as u64;
    for (v, &d) in ell_oracle.dist.iter().enumerate() {
        if d > n - 1 {
            return Err(ScalingError::Consistency {
                iteration: i,
                node: v as NodeId,
                got: d,
                want: n - 1,
            });
        }
    }
    let wi_oracle = oracle::dijkstra(&inst.with_weights(prefix.to_vec()).adj_list(), source);
    for v in 0..inst.n() {
        let want = wi_oracle.dist[v];
        let got = 2 * dtilde_prev[v] + ell_oracle.dist[v];
        if got != want {
            return Err(ScalingError::Consistency {
                iteration: i,
                node: v as NodeId,
                got,
                want,
            });
        }
    }
    Ok(())
}
