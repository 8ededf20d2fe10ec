//! Restricted-range SSSP: a BFS phase on a `1/q`-granularity weight grid
//! followed by a broadcast-budgeted Bellman-Ford phase. Computes exact
//! distances to every node whose shortest path from the source has at most
//! `h` hops and length at most `ell`, never underestimates anywhere, runs in
//! at most `ell*q + 2h + 2` rounds, and sends at most `1 + floor(h/q)`
//! messages per channel direction.

use std::sync::Arc;

use thiserror::Error;

use crate::graph::WeightedInstance;
use crate::sim::{
    run_protocol, schedule_parallel, word_cap, Control, Delivery, EngineConfig, NodeProgram,
    Outbox, Payload, ProtocolCtx, RunMetrics, ScheduleBounds, ScheduleConfig, SimError,
};
use crate::{Dist, DistanceTable, NodeId, INF};

#[derive(Debug, Error)]
pub enum ShortRangeError {
    #[error("invalid parameter: {0}")]
    Param(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ShortRangeParams {
    /// Hop budget.
    pub h: u64,
    /// Distance budget.
    pub ell: u64,
    /// Granularity: zero-weight edges cost `1/q` during the BFS phase.
    pub q: u64,
}

impl ShortRangeParams {
    pub fn new(h: u64, ell: u64, q: u64) -> Result<Self, ShortRangeError> {
        if h < 1 || ell < 1 || q < 1 {
            return Err(ShortRangeError::Param(format!(
                "h, ell, q must all be >= 1 (got {h}, {ell}, {q})"
            )));
        }
        Ok(ShortRangeParams { h, ell, q })
    }

    /// Last BFS grid round `ell*q + h`.
    pub fn grid_end(&self) -> u64 {
        self.ell * self.q + self.h
    }

    /// First Bellman-Ford round.
    pub fn bf_start(&self) -> u64 {
        self.grid_end() + 1
    }

    /// Bellman-Ford broadcast budget per node.
    pub fn bf_cap(&self) -> u64 {
        self.h / self.q
    }

    /// Inclusive round budget `ell*q + 2h + 2`.
    pub fn round_budget(&self) -> u64 {
        self.ell * self.q + 2 * self.h + 2
    }

    /// Per-channel-direction message budget `1 + floor(h/q)`.
    pub fn channel_budget(&self) -> u64 {
        1 + self.bf_cap()
    }
}

/// Phase-transition core shared by the network protocol and its virtual-graph
/// form. Weight access is abstracted so both can reuse the exact same rules.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SrCore {
    pub params: ShortRangeParams,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SrState {
    /// Distance on the `q`-scaled grid during the BFS phase.
    scaled: Dist,
    bfs_sent: bool,
    floored: bool,
    /// Integer estimate after the floor.
    pub d: Dist,
    announced: Dist,
    bf_sent: u64,
}

pub(crate) enum SrEmit {
    None,
    Value(u64),
}

impl SrCore {
    pub fn initial_state(&self, is_source: bool) -> SrState {
        SrState {
            scaled: if is_source { 0 } else { INF },
            bfs_sent: false,
            floored: false,
            d: INF,
            announced: INF,
            bf_sent: 0,
        }
    }

    /// Relaxation for a BFS-phase arrival carrying a scaled value; `ws` is
    /// the scaled weight of the traversed edge.
    pub fn bfs_arrival(&self, st: &mut SrState, value: u64, ws: u64) {
        st.scaled = st.scaled.min(value + ws);
    }

    /// Relaxation for a Bellman-Ford arrival; `w` is the raw edge weight.
    pub fn bf_arrival(&self, st: &mut SrState, value: u64, w: u64) {
        st.d = st.d.min(value + w);
    }

    pub fn floor_once(&self, st: &mut SrState) {
        if !st.floored {
            st.floored = true;
            if st.scaled != INF {
                st.d = st.d.min(st.scaled / self.params.q);
            }
        }
    }

    /// Broadcast decision for `round`; also returns the node's next wake.
    pub fn act(&self, st: &mut SrState, round: u64) -> (SrEmit, Option<u64>) {
        let p = &self.params;
        if round < p.bf_start() {
            if !st.bfs_sent && st.scaled == round {
                st.bfs_sent = true;
                return (SrEmit::Value(st.scaled), Some(p.bf_start()));
            }
            let wake = if !st.bfs_sent && st.scaled != INF && st.scaled <= p.grid_end() {
                st.scaled.max(round + 1)
            } else {
                p.bf_start()
            };
            return (SrEmit::None, Some(wake));
        }
        self.floor_once(st);
        // Bellman-Ford broadcast rounds are bf_start .. bf_start + h - 1.
        if round < p.bf_start() + p.h
            && st.d != INF
            && st.d < st.announced
            && st.bf_sent < p.bf_cap()
        {
            st.announced = st.d;
            st.bf_sent += 1;
            return (SrEmit::Value(st.d), None);
        }
        (SrEmit::None, None)
    }
}

/// ShortRange as a network protocol instance rooted at `source`.
pub struct ShortRangeProgram {
    inst: Arc<WeightedInstance>,
    /// Grid weights: `q*w`, with zero-weight edges mapped to 1.
    ws: Arc<Vec<u64>>,
    core: SrCore,
    source: NodeId,
}

impl ShortRangeProgram {
    pub fn new(inst: Arc<WeightedInstance>, source: NodeId, params: ShortRangeParams) -> Self {
        let ws = Arc::new(scaled_weights(&inst, params.q));
        ShortRangeProgram {
            inst,
            ws,
            core: SrCore { params },
            source,
        }
    }

    /// Same parameters, different source; the weight grid is shared.
    pub fn with_source(&self, source: NodeId) -> Self {
        ShortRangeProgram {
            inst: Arc::clone(&self.inst),
            ws: Arc::clone(&self.ws),
            core: self.core,
            source,
        }
    }
}

pub(crate) fn scaled_weights(inst: &WeightedInstance, q: u64) -> Vec<u64> {
    inst.weights()
        .iter()
        .map(|&w| if w == 0 { 1 } else { q * w })
        .collect()
}

impl NodeProgram for ShortRangeProgram {
    type State = SrState;

    fn init(&self, node: NodeId, _ctx: &ProtocolCtx) -> (SrState, Control) {
        let st = self.core.initial_state(node == self.source);
        let ctl = if node == self.source {
            Control::WakeAt(0)
        } else {
            Control::WakeAt(self.core.params.bf_start())
        };
        (st, ctl)
    }

    fn step(
        &self,
        st: &mut SrState,
        node: NodeId,
        round: u64,
        inbox: &[Delivery],
        out: &mut Outbox,
        ctx: &ProtocolCtx,
    ) -> Control {
        let p = &self.core.params;
        if round <= p.bf_start() {
            // Arrivals up to and including bf_start carry scaled values.
            for m in inbox {
                let chan = ctx
                    .topo
                    .channel_between(m.from, node)
                    .expect("sender adjacent");
                self.core
                    .bfs_arrival(st, m.payload.a, self.ws[chan as usize]);
            }
        }
        if round >= p.bf_start() {
            self.core.floor_once(st);
            if round > p.bf_start() {
                for m in inbox {
                    let w = self.inst.weight(m.from, node);
                    self.core.bf_arrival(st, m.payload.a, w);
                }
            }
        }
        let (emit, wake) = self.core.act(st, round);
        if let SrEmit::Value(v) = emit {
            out.broadcast(Payload::one(v));
        }
        match wake {
            Some(r) => Control::WakeAt(r),
            None => Control::Sleep,
        }
    }
}

fn engine_word_cap(inst: &WeightedInstance, q: u64) -> u64 {
    word_cap(inst.n(), (inst.max_weight() + 1).saturating_mul(q.max(1)))
}

/// Runs ShortRange from one source.
pub fn short_range(
    inst: &Arc<WeightedInstance>,
    source: NodeId,
    params: ShortRangeParams,
) -> Result<(DistanceTable, RunMetrics), ShortRangeError> {
    let prog = ShortRangeProgram::new(Arc::clone(inst), source, params);
    let cfg = EngineConfig::new(engine_word_cap(inst, params.q), params.round_budget());
    let (states, metrics) = run_protocol(inst.topology(), &prog, 0, &cfg)?;
    Ok((
        DistanceTable {
            source,
            dist: states.into_iter().map(|s| s.d).collect(),
        },
        metrics,
    ))
}

/// Runs ShortRange from every source concurrently under the scheduler, with
/// declared dilation `ell*q + 2h + 2` and congestion `k * (1 + floor(h/q))`.
pub fn short_range_many(
    inst: &Arc<WeightedInstance>,
    sources: &[NodeId],
    params: ShortRangeParams,
    seed: u64,
) -> Result<(Vec<DistanceTable>, RunMetrics), ShortRangeError> {
    let proto = ShortRangeProgram::new(Arc::clone(inst), 0, params);
    let programs: Vec<ShortRangeProgram> =
        sources.iter().map(|&s| proto.with_source(s)).collect();
    let bounds = ScheduleBounds {
        dilation: params.round_budget(),
        congestion: sources.len() as u64 * params.channel_budget(),
    };
    let cfg = ScheduleConfig::new(engine_word_cap(inst, params.q));
    let (all_states, metrics) =
        schedule_parallel(inst.topology(), &programs, seed, bounds, &cfg)?;
    let tables = sources
        .iter()
        .zip(all_states)
        .map(|(&s, states)| DistanceTable {
            source: s,
            dist: states.into_iter().map(|st| st.d).collect(),
        })
        .collect();
    Ok((tables, metrics))
}
