use std::cmp::Reverse;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::graph::Topology;
use crate::sim::RunMetrics;
use crate::NodeId;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Message payload: one or two integer words. Word values are capped by the
/// engine configuration, modelling the O(log n)-bit CONGEST limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Payload {
    pub a: u64,
    pub b: Option<u64>,
}

impl Payload {
    pub fn one(a: u64) -> Self {
        Payload { a, b: None }
    }

    pub fn two(a: u64, b: u64) -> Self {
        Payload { a, b: Some(b) }
    }

    pub fn words(&self) -> u8 {
        1 + self.b.is_some() as u8
    }

    pub fn max_word(&self) -> u64 {
        self.a.max(self.b.unwrap_or(0))
    }
}

/// A message as seen by the receiving node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delivery {
    pub from: NodeId,
    pub payload: Payload,
}

/// What a node wants from the engine after a step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    /// Step me again at this round (clamped to the future) even without mail.
    WakeAt(u64),
    /// Step me only when a message arrives. A node that sleeps with no mail
    /// in flight counts as locally terminated.
    Sleep,
}

/// Shared read-only context handed to node handlers.
pub struct ProtocolCtx<'a> {
    pub topo: &'a Topology,
    pub seed: u64,
}

/// Outgoing messages of one node for one round. At most one message per
/// incident directed channel.
pub struct Outbox<'a> {
    topo: &'a Topology,
    from: NodeId,
    sends: Vec<(u32, Payload)>,
}

impl<'a> Outbox<'a> {
    pub(crate) fn new(topo: &'a Topology, from: NodeId) -> Self {
        Outbox {
            topo,
            from,
            sends: Vec::new(),
        }
    }

    pub(crate) fn into_sends(self) -> Vec<(u32, Payload)> {
        self.sends
    }

    /// Sends to an adjacent node. Panics if `to` is not a neighbor.
    pub fn send(&mut self, to: NodeId, payload: Payload) {
        let chan = self
            .topo
            .channel_between(self.from, to)
            .unwrap_or_else(|| panic!("{} is not adjacent to {}", self.from, to));
        self.sends.push((chan, payload));
    }

    /// Sends to the j-th neighbor.
    pub fn send_nb(&mut self, j: usize, payload: Payload) {
        self.sends.push((self.topo.channel(self.from, j), payload));
    }

    /// Sends the same payload on every incident channel.
    pub fn broadcast(&mut self, payload: Payload) {
        for c in self.topo.channel_range(self.from) {
            self.sends.push((c as u32, payload));
        }
    }

    pub fn is_empty(&self) -> bool {
        self.sends.is_empty()
    }
}

/// A synchronous per-node protocol. Handlers must be pure functions of the
/// node's own state, its inbox, the round number, and shared configuration.
pub trait NodeProgram: Sync {
    type State: Send + Sync;

    fn init(&self, node: NodeId, ctx: &ProtocolCtx) -> (Self::State, Control);

    fn step(
        &self,
        state: &mut Self::State,
        node: NodeId,
        round: u64,
        inbox: &[Delivery],
        out: &mut Outbox,
        ctx: &ProtocolCtx,
    ) -> Control;
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("capacity violation: node {node} sent twice to {to} in round {round}")]
    CapacityViolation { node: NodeId, to: NodeId, round: u64 },
    #[error("payload violation: word {word} > cap {cap} from node {node} in round {round}")]
    PayloadViolation {
        node: NodeId,
        word: u64,
        cap: u64,
        round: u64,
    },
    #[error("round cap {cap} exceeded before quiescence")]
    RoundCapExceeded { cap: u64 },
    #[error("protocol error: {0}")]
    Protocol(String),
}

/// Engine limits for one protocol run.
#[derive(Debug, Clone, Copy)]
pub struct EngineConfig {
    /// Maximum value of a payload word.
    pub word_cap: u64,
    /// Inclusive round budget; exceeding it is an error.
    pub round_cap: u64,
    /// Evaluate step handlers in parallel (requires the `parallel` feature;
    /// results are identical either way).
    pub parallel: bool,
}

impl EngineConfig {
    pub fn new(word_cap: u64, round_cap: u64) -> Self {
        EngineConfig {
            word_cap,
            round_cap,
            parallel: cfg!(feature = "parallel"),
        }
    }
}

/// Word cap for a run over `n` nodes with values up to `max_value`: room for
/// any distance below `n * max_value` and for packed node-id pairs.
pub fn word_cap(n: usize, max_value: u64) -> u64 {
    let n = n as u64;
    (n * n).max(n.saturating_mul(max_value.max(1))) + 2
}

const PAR_THRESHOLD: usize = 512;

struct StepOutcome {
    node: NodeId,
    control: Control,
    sends: Vec<(u32, Payload)>,
}

/// Runs one protocol to quiescence: all nodes asleep and no message in
/// flight. Messages sent in round `t` are delivered in round `t + 1`.
/// Execution is a deterministic function of `(topology, program, seed)`.
pub fn run_protocol<P: NodeProgram>(
    topo: &Topology,
    program: &P,
    seed: u64,
    cfg: &EngineConfig,
) -> Result<(Vec<P::State>, RunMetrics), SimError> {
    let n = topo.n();
    let ctx = ProtocolCtx { topo, seed };
    let mut metrics = RunMetrics::new(topo);

    let mut states: Vec<P::State> = Vec::with_capacity(n);
    let mut next_wake: Vec<u64> = vec![u64::MAX; n];
    let mut wake_heap: BinaryHeap<Reverse<(u64, NodeId)>> = BinaryHeap::new();
    for u in 0..n as NodeId {
        let (st, ctl) = program.init(u, &ctx);
        states.push(st);
        if let Control::WakeAt(r) = ctl {
            next_wake[u as usize] = r;
            wake_heap.push(Reverse((r, u)));
        }
    }

    let mut inboxes: Vec<Vec<Delivery>> = vec![Vec::new(); n];
    let mut has_mail: Vec<NodeId> = Vec::new();
    let mut pending: Vec<(u32, Payload)> = Vec::new();
    let mut active: Vec<NodeId> = Vec::new();
    let mut is_active: Vec<bool> = vec![false; n];

    let mut now: u64 = 0;
    let mut begun = false;
    let mut last_event: u64 = 0;

    loop {
        // Next round with something to do: a delivery or a scheduled wake.
        let wake_next = loop {
            match wake_heap.peek() {
                Some(&Reverse((r, u))) if next_wake[u as usize] != r => {
                    wake_heap.pop();
                }
                Some(&Reverse((r, _))) => break Some(r),
                None => break None,
            }
        };
        let next = if !pending.is_empty() {
            Some(now + 1)
        } else if !begun {
            wake_next
        } else {
            wake_next.map(|r| r.max(now + 1))
        };
        let Some(next) = next else {
            break;
        };
        if next > cfg.round_cap {
            return Err(SimError::RoundCapExceeded { cap: cfg.round_cap });
        }
        now = next;
        begun = true;

        // Deliver messages sent last round.
        if !pending.is_empty() {
            last_event = now;
            for (chan, payload) in pending.drain(..) {
                let (from, to) = topo.endpoints(chan);
                metrics.edge_messages[chan as usize] += 1;
                metrics.max_payload_words = metrics.max_payload_words.max(payload.words());
                if inboxes[to as usize].is_empty() {
                    has_mail.push(to);
                }
                inboxes[to as usize].push(Delivery { from, payload });
            }
        }

        // Active set: nodes with mail plus nodes whose wake time arrived.
        active.clear();
        for &u in &has_mail {
            if !is_active[u as usize] {
                is_active[u as usize] = true;
                active.push(u);
            }
        }
        while let Some(&Reverse((r, u))) = wake_heap.peek() {
            if r > now {
                break;
            }
            wake_heap.pop();
            if next_wake[u as usize] == r {
                next_wake[u as usize] = u64::MAX;
                if !is_active[u as usize] {
                    is_active[u as usize] = true;
                    active.push(u);
                }
            }
        }
        if active.is_empty() {
            continue;
        }
        active.sort_unstable();
        last_event = now;

        let outcomes = step_nodes(program, &mut states, &active, &inboxes, now, &ctx, cfg);

        for &u in &has_mail {
            inboxes[u as usize].clear();
        }
        has_mail.clear();
        for &u in &active {
            is_active[u as usize] = false;
        }

        for out in outcomes {
            let u = out.node;
            match out.control {
                Control::WakeAt(r) => {
                    let r = r.max(now + 1);
                    next_wake[u as usize] = r;
                    wake_heap.push(Reverse((r, u)));
                }
                Control::Sleep => next_wake[u as usize] = u64::MAX,
            }
            if out.sends.is_empty() {
                continue;
            }
            metrics.node_broadcasts[u as usize] += 1;
            let mut seen: Vec<u32> = Vec::with_capacity(out.sends.len());
            for (chan, payload) in out.sends {
                if seen.contains(&chan) {
                    return Err(SimError::CapacityViolation {
                        node: u,
                        to: topo.endpoints(chan).1,
                        round: now,
                    });
                }
                seen.push(chan);
                if payload.max_word() > cfg.word_cap {
                    return Err(SimError::PayloadViolation {
                        node: u,
                        word: payload.max_word(),
                        cap: cfg.word_cap,
                        round: now,
                    });
                }
                pending.push((chan, payload));
            }
        }
    }

    metrics.rounds = last_event;
    Ok((states, metrics))
}

fn step_nodes<P: NodeProgram>(
    program: &P,
    states: &mut [P::State],
    active: &[NodeId],
    inboxes: &[Vec<Delivery>],
    now: u64,
    ctx: &ProtocolCtx,
    cfg: &EngineConfig,
) -> Vec<StepOutcome> {
    #[cfg(feature = "parallel")]
    if cfg.parallel && active.len() >= PAR_THRESHOLD {
        let mut selected: Vec<bool> = vec![false; states.len()];
        for &u in active {
            selected[u as usize] = true;
        }
        return states
            .par_iter_mut()
            .enumerate()
            .filter(|(u, _)| selected[*u])
            .map(|(u, st)| {
                let u = u as NodeId;
                let mut out = Outbox::new(ctx.topo, u);
                let control = program.step(st, u, now, &inboxes[u as usize], &mut out, ctx);
                StepOutcome {
                    node: u,
                    control,
                    sends: out.sends,
                }
            })
            .collect();
    }
    let _ = cfg;
    active
        .iter()
        .map(|&u| {
            let st = &mut states[u as usize];
            let mut out = Outbox::new(ctx.topo, u);
            let control = program.step(st, u, now, &inboxes[u as usize], &mut out, ctx);
            StepOutcome {
                node: u,
                control,
                sends: out.sends,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Sends one message on every channel in round 0, then stops.
    struct FloodOnce;

    impl NodeProgram for FloodOnce {
        type State = u32;

        fn init(&self, _node: NodeId, _ctx: &ProtocolCtx) -> (u32, Control) {
            (0, Control::WakeAt(0))
        }

        fn step(
            &self,
            state: &mut u32,
            _node: NodeId,
            round: u64,
            inbox: &[Delivery],
            out: &mut Outbox,
            _ctx: &ProtocolCtx,
        ) -> Control {
            *state += inbox.len() as u32;
            if round == 0 {
                out.broadcast(Payload::one(1));
            }
            Control::Sleep
        }
    }

    /// Terminates in init without sending anything.
    struct EmptyProgram;

    impl NodeProgram for EmptyProgram {
        type State = ();

        fn init(&self, _node: NodeId, _ctx: &ProtocolCtx) -> ((), Control) {
            ((), Control::Sleep)
        }

        fn step(
            &self,
            _state: &mut (),
            _node: NodeId,
            _round: u64,
            _inbox: &[Delivery],
            _out: &mut Outbox,
            _ctx: &ProtocolCtx,
        ) -> Control {
            Control::Sleep
        }
    }

    /// Unweighted BFS used to check round accounting against hop distances.
    struct HopFlood {
        root: NodeId,
    }

    impl NodeProgram for HopFlood {
        type State = Option<u64>;

        fn init(&self, node: NodeId, _ctx: &ProtocolCtx) -> (Option<u64>, Control) {
            if node == self.root {
                (Some(0), Control::WakeAt(0))
            } else {
                (None, Control::Sleep)
            }
        }

        fn step(
            &self,
            state: &mut Option<u64>,
            _node: NodeId,
            round: u64,
            inbox: &[Delivery],
            out: &mut Outbox,
            _ctx: &ProtocolCtx,
        ) -> Control {
            if state.is_none() && !inbox.is_empty() {
                *state = Some(round);
            }
            if state.map(|d| d == round).unwrap_or(false) {
                out.broadcast(Payload::one(round));
            }
            Control::Sleep
        }
    }

    fn cfg() -> EngineConfig {
        EngineConfig::new(1 << 40, 1 << 20)
    }

    #[test]
    fn empty_protocol_runs_zero_rounds() {
        let topo = Topology::new(1, &[]).unwrap();
        let (_, m) = run_protocol(&topo, &EmptyProgram, 0, &cfg()).unwrap();
        assert_eq!(m.rounds, 0);
        assert_eq!(m.total_messages(), 0);
    }

    #[test]
    fn single_exchange_costs_one_round() {
        let topo = Topology::new(2, &[(0, 1)]).unwrap();
        let (states, m) = run_protocol(&topo, &FloodOnce, 0, &cfg()).unwrap();
        assert_eq!(m.rounds, 1);
        assert_eq!(m.edge_messages, vec![1, 1]);
        assert_eq!(states, vec![1, 1]);
        assert_eq!(m.node_broadcasts, vec![1, 1]);
    }

    #[test]
    fn bfs_on_path_learns_hop_distances() {
        let topo = Topology::new(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap();
        let (states, m) = run_protocol(&topo, &HopFlood { root: 0 }, 0, &cfg()).unwrap();
        let got: Vec<u64> = states.into_iter().map(|s| s.unwrap()).collect();
        assert_eq!(got, vec![0, 1, 2, 3, 4]);
        // Deepest node echoes back to its parent one round after learning.
        assert!(m.rounds <= 5);
        assert!(m.edge_messages.iter().all(|&c| c == 1));
    }

    #[test]
    fn determinism_across_runs_and_parallel_modes() {
        let topo = Topology::new(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]).unwrap();
        let (s1, m1) = run_protocol(&topo, &HopFlood { root: 2 }, 7, &cfg()).unwrap();
        let (s2, m2) = run_protocol(&topo, &HopFlood { root: 2 }, 7, &cfg()).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(m1, m2);
        let mut seq = cfg();
        seq.parallel = false;
        let (s3, m3) = run_protocol(&topo, &HopFlood { root: 2 }, 7, &seq).unwrap();
        assert_eq!(s1, s3);
        assert_eq!(m1, m3);
    }

    #[test]
    fn payload_cap_is_enforced() {
        struct Oversized;
        impl NodeProgram for Oversized {
            type State = ();
            fn init(&self, node: NodeId, _ctx: &ProtocolCtx) -> ((), Control) {
                ((), if node == 0 { Control::WakeAt(0) } else { Control::Sleep })
            }
            fn step(
                &self,
                _state: &mut (),
                _node: NodeId,
                _round: u64,
                _inbox: &[Delivery],
                out: &mut Outbox,
                _ctx: &ProtocolCtx,
            ) -> Control {
                out.broadcast(Payload::one(10_000));
                Control::Sleep
            }
        }
        let topo = Topology::new(2, &[(0, 1)]).unwrap();
        let err = run_protocol(&topo, &Oversized, 0, &EngineConfig::new(100, 10)).unwrap_err();
        assert!(matches!(err, SimError::PayloadViolation { word: 10_000, .. }));
    }

    #[test]
    fn duplicate_channel_send_is_a_capacity_violation() {
        struct DoubleSend;
        impl NodeProgram for DoubleSend {
            type State = ();
            fn init(&self, node: NodeId, _ctx: &ProtocolCtx) -> ((), Control) {
                ((), if node == 0 { Control::WakeAt(0) } else { Control::Sleep })
            }
            fn step(
                &self,
                _state: &mut (),
                _node: NodeId,
                _round: u64,
                _inbox: &[Delivery],
                out: &mut Outbox,
                _ctx: &ProtocolCtx,
            ) -> Control {
                out.send(1, Payload::one(1));
                out.send(1, Payload::one(2));
                Control::Sleep
            }
        }
        let topo = Topology::new(2, &[(0, 1)]).unwrap();
        let err = run_protocol(&topo, &DoubleSend, 0, &cfg()).unwrap_err();
        assert!(matches!(err, SimError::CapacityViolation { node: 0, to: 1, .. }));
    }

    #[test]
    fn round_cap_is_enforced() {
        struct PingPong;
        impl NodeProgram for PingPong {
            type State = ();
            fn init(&self, node: NodeId, _ctx: &ProtocolCtx) -> ((), Control) {
                ((), if node == 0 { Control::WakeAt(0) } else { Control::Sleep })
            }
            fn step(
                &self,
                _state: &mut (),
                _node: NodeId,
                _round: u64,
                _inbox: &[Delivery],
                out: &mut Outbox,
                _ctx: &ProtocolCtx,
            ) -> Control {
                out.broadcast(Payload::one(0));
                Control::Sleep
            }
        }
        let topo = Topology::new(2, &[(0, 1)]).unwrap();
        let err = run_protocol(&topo, &PingPong, 0, &EngineConfig::new(10, 8)).unwrap_err();
        assert_eq!(err, SimError::RoundCapExceeded { cap: 8 });
    }

    #[test]
    fn wake_gaps_are_skipped_but_counted() {
        struct LateWake;
        impl NodeProgram for LateWake {
            type State = bool;
            fn init(&self, node: NodeId, _ctx: &ProtocolCtx) -> (bool, Control) {
                if node == 0 {
                    (false, Control::WakeAt(1000))
                } else {
                    (false, Control::Sleep)
                }
            }
            fn step(
                &self,
                state: &mut bool,
                _node: NodeId,
                round: u64,
                _inbox: &[Delivery],
                out: &mut Outbox,
                _ctx: &ProtocolCtx,
            ) -> Control {
                if round == 1000 && !*state {
                    *state = true;
                    out.broadcast(Payload::one(7));
                }
                Control::Sleep
            }
        }
        let topo = Topology::new(2, &[(0, 1)]).unwrap();
        let (_, m) = run_protocol(&topo, &LateWake, 0, &EngineConfig::new(100, 2000)).unwrap();
        assert_eq!(m.rounds, 1001);
        assert_eq!(m.total_messages(), 1);
    }
}
