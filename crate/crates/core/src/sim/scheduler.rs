use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::Topology;
use crate::sim::{
    Control, Delivery, NodeProgram, Outbox, Payload, ProtocolCtx, RunMetrics, SimError,
};
use crate::NodeId;

/// Declared (or measured) dilation and congestion for a batch of independent
/// instances: the maximum solo running time and the maximum total number of
/// messages any single channel carries across all instances.
#[derive(Debug, Clone, Copy)]
pub struct ScheduleBounds {
    pub dilation: u64,
    pub congestion: u64,
}

#[derive(Debug, Clone, Copy)]
pub struct ScheduleConfig {
    pub word_cap: u64,
    /// Scales the makespan cap `mult * (dilation + congestion) * ceil(log2 n)`.
    /// Default 64; overridable via `ROUND_CAP_MULTIPLIER`.
    pub cap_multiplier: u64,
}

impl ScheduleConfig {
    pub fn new(word_cap: u64) -> Self {
        ScheduleConfig {
            word_cap,
            cap_multiplier: default_cap_multiplier(),
        }
    }
}

/// Reads `ROUND_CAP_MULTIPLIER` from the environment, defaulting to 64.
pub(crate) fn default_cap_multiplier() -> u64 {
    std::env::var("ROUND_CAP_MULTIPLIER")
        .ok()
        .and_then(|v| v.parse().ok())
        .filter(|&v| v > 0)
        .unwrap_or(64)
}

struct Instance<S> {
    states: Vec<S>,
    next_wake: Vec<u64>,
    wake_heap: BinaryHeap<Reverse<(u64, NodeId)>>,
    awake: usize,
    /// Next virtual round to execute.
    vnow: u64,
    /// Messages from the last executed virtual round still in channel queues.
    outstanding: usize,
    arrivals: Vec<Vec<Delivery>>,
    touched: Vec<NodeId>,
    delay: u64,
    started: bool,
    done: bool,
}

/// Runs independent instances of one protocol concurrently under full
/// CONGEST capacity: each instance gets a uniformly random start delay in
/// `[0, congestion)` and messages are multiplexed per-channel FIFO with one
/// delivery per channel direction per round. Every instance still observes a
/// faithful synchronous execution, so per-instance outputs equal solo runs.
pub fn schedule_parallel<P: NodeProgram>(
    topo: &Topology,
    programs: &[P],
    seed: u64,
    bounds: ScheduleBounds,
    cfg: &ScheduleConfig,
) -> Result<(Vec<Vec<P::State>>, RunMetrics), SimError> {
    let n = topo.n();
    let k = programs.len();
    let ctx = ProtocolCtx { topo, seed };
    let mut metrics = RunMetrics::new(topo);
    if k == 0 {
        return Ok((Vec::new(), metrics));
    }

    let log_n = (n.max(2) as f64).log2().ceil() as u64;
    let cap = cfg
        .cap_multiplier
        .saturating_mul(bounds.dilation + bounds.congestion)
        .saturating_mul(log_n.max(1));
    let delay_range = bounds.congestion.max(1);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut insts: Vec<Instance<P::State>> = Vec::with_capacity(k);
    for prog in programs {
        let mut states = Vec::with_capacity(n);
        let mut next_wake = vec![u64::MAX; n];
        let mut wake_heap = BinaryHeap::new();
        let mut awake = 0;
        for u in 0..n as NodeId {
            let (st, ctl) = prog.init(u, &ctx);
            states.push(st);
            if let Control::WakeAt(r) = ctl {
                next_wake[u as usize] = r;
                wake_heap.push(Reverse((r, u)));
                awake += 1;
            }
        }
        let done = awake == 0;
        insts.push(Instance {
            states,
            next_wake,
            wake_heap,
            awake,
            vnow: 0,
            outstanding: 0,
            arrivals: vec![Vec::new(); n],
            touched: Vec::new(),
            delay: rng.random_range(0..delay_range),
            started: false,
            done,
        });
    }
    let mut live = insts.iter().filter(|i| !i.done).count();

    let mut queues: Vec<VecDeque<(u32, Payload)>> = vec![VecDeque::new(); topo.channels()];
    let mut busy: Vec<u32> = Vec::new();
    let mut in_busy = vec![false; topo.channels()];
    let mut now: u64 = 0;
    let mut last_event: u64 = 0;

    while live > 0 {
        if now > cap {
            return Err(SimError::RoundCapExceeded { cap });
        }

        // Deliver one queued message per busy channel.
        let mut b = 0;
        while b < busy.len() {
            let chan = busy[b];
            let (inst_id, payload) = queues[chan as usize].pop_front().expect("busy channel");
            let (from, to) = topo.endpoints(chan);
            metrics.edge_messages[chan as usize] += 1;
            metrics.max_payload_words = metrics.max_payload_words.max(payload.words());
            last_event = now;
            let inst = &mut insts[inst_id as usize];
            if inst.arrivals[to as usize].is_empty() {
                inst.touched.push(to);
            }
            inst.arrivals[to as usize].push(Delivery { from, payload });
            inst.outstanding -= 1;
            if queues[chan as usize].is_empty() {
                in_busy[chan as usize] = false;
                busy.swap_remove(b);
            } else {
                b += 1;
            }
        }

        // Execute one virtual round for every instance whose previous round
        // has fully drained.
        for (inst_id, inst) in insts.iter_mut().enumerate() {
            if inst.done || now < inst.delay || inst.outstanding > 0 {
                continue;
            }
            inst.started = true;
            let vround = inst.vnow;
            inst.vnow += 1;

            let mut active: Vec<NodeId> = Vec::new();
            for &u in &inst.touched {
                active.push(u);
            }
            loop {
                match inst.wake_heap.peek() {
                    Some(&Reverse((r, u))) => {
                        if inst.next_wake[u as usize] != r {
                            inst.wake_heap.pop();
                            continue;
                        }
                        if r > vround {
                            break;
                        }
                        inst.wake_heap.pop();
                        inst.next_wake[u as usize] = u64::MAX;
                        inst.awake -= 1;
                        // Touched nodes are already listed via `arrivals`.
                        if inst.arrivals[u as usize].is_empty() {
                            active.push(u);
                        }
                    }
                    None => break,
                }
            }
            if active.is_empty() {
                if inst.awake == 0 {
                    inst.done = true;
                    live -= 1;
                }
                continue;
            }
            active.sort_unstable();
            active.dedup();
            last_event = now;

            for &u in &active {
                inst.arrivals[u as usize].sort_by_key(|d| d.from);
                let mut out = Outbox::new(topo, u);
                let ctl = programs[inst_id].step(
                    &mut inst.states[u as usize],
                    u,
                    vround,
                    &inst.arrivals[u as usize],
                    &mut out,
                    &ctx,
                );
                match ctl {
                    Control::WakeAt(r) => {
                        let r = r.max(vround + 1);
                        if inst.next_wake[u as usize] == u64::MAX {
                            inst.awake += 1;
                        }
                        inst.next_wake[u as usize] = r;
                        inst.wake_heap.push(Reverse((r, u)));
                    }
                    Control::Sleep => {
                        if inst.next_wake[u as usize] != u64::MAX {
                            inst.next_wake[u as usize] = u64::MAX;
                            inst.awake -= 1;
                        }
                    }
                }
                let sends = out.into_sends();
                if sends.is_empty() {
                    continue;
                }
                metrics.node_broadcasts[u as usize] += 1;
                let mut seen: Vec<u32> = Vec::with_capacity(sends.len());
                for (chan, payload) in sends {
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
                    queues[chan as usize].push_back((inst_id as u32, payload));
                    inst.outstanding += 1;
                    if !in_busy[chan as usize] {
                        in_busy[chan as usize] = true;
                        busy.push(chan);
                    }
                }
            }
            for &u in &inst.touched {
                inst.arrivals[u as usize].clear();
            }
            inst.touched.clear();
            if inst.awake == 0 && inst.outstanding == 0 {
                inst.done = true;
                live -= 1;
            }
        }

        // Advance time; jump over stretches where every live instance is
        // only waiting for a future wake.
        if !busy.is_empty() {
            now += 1;
            continue;
        }
        let mut gap = u64::MAX;
        for inst in &insts {
            if inst.done {
                continue;
            }
            let g = if !inst.started {
                inst.delay.saturating_sub(now).max(1)
            } else if !inst.touched.is_empty() {
                1
            } else {
                match inst.wake_heap.peek() {
                    Some(&Reverse((r, _))) => (r.saturating_sub(inst.vnow)).max(1),
                    None => 1,
                }
            };
            gap = gap.min(g);
        }
        if gap == u64::MAX {
            break;
        }
        let gap = gap.max(1);
        now += gap;
        for inst in insts.iter_mut() {
            if !inst.done && inst.started && inst.outstanding == 0 {
                inst.vnow += gap - 1;
            }
        }
    }

    metrics.rounds = last_event;
    Ok((insts.into_iter().map(|i| i.states).collect(), metrics))
}
