//! Executes broadcast-only protocols on virtual graphs by simulating each
//! virtual round as one pipelined broadcast over the real network: a virtual
//! round in which `b` virtual nodes broadcast costs the tree rounds of
//! disseminating `b` items (plus one silent round when nobody speaks, which
//! is how all nodes detect global silence).

use std::sync::Arc;

use crate::graph::Topology;
use crate::sim::{pipelined_broadcast, BfsTree, EngineConfig, Payload, RunMetrics, SimError};
use crate::vgraph::VirtualGraph;

/// A broadcast heard by every virtual node of the same job one round after
/// it was emitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VHeard {
    pub origin: u32,
    pub value: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VControl {
    WakeAt(u64),
    Sleep,
}

/// A per-virtual-node protocol restricted to broadcasts: in each virtual
/// round a node either broadcasts one value to all other virtual nodes of
/// its job or stays silent.
pub trait VirtualProgram {
    type VState: Clone;

    fn init(&self, v: u32, g: &VirtualGraph) -> (Self::VState, VControl);

    fn step(
        &self,
        st: &mut Self::VState,
        v: u32,
        round: u64,
        heard: &[VHeard],
        g: &VirtualGraph,
    ) -> (Option<u64>, VControl);
}

pub struct VirtualJob<P: VirtualProgram> {
    pub program: P,
    pub graph: Arc<VirtualGraph>,
}

struct JobState<S> {
    states: Vec<S>,
    next_wake: Vec<u64>,
    heard: Vec<VHeard>,
}

pub struct BatchOutcome<S> {
    pub states: Vec<Vec<S>>,
    pub metrics: RunMetrics,
    /// Virtual rounds executed (broadcast rounds plus silent rounds).
    pub virtual_rounds: u64,
    /// Total broadcasts per job.
    pub broadcasts: Vec<u64>,
}

/// Runs all jobs in virtual-round lockstep. Each round's emissions from all
/// jobs are pipelined together over the BFS tree (`O(depth + b_t)` network
/// rounds); rounds with no emissions cost one network round.
pub fn run_virtual_batch<P: VirtualProgram>(
    topo: &Topology,
    tree: &Arc<BfsTree>,
    jobs: &[VirtualJob<P>],
    word_cap: u64,
    vround_cap: u64,
) -> Result<BatchOutcome<P::VState>, SimError> {
    let mut metrics = RunMetrics::new(topo);
    let mut job_states: Vec<JobState<P::VState>> = Vec::with_capacity(jobs.len());
    let mut broadcasts = vec![0u64; jobs.len()];
    let nv_max = jobs
        .iter()
        .map(|j| j.graph.n_virtual())
        .max()
        .unwrap_or(0) as u64;

    for job in jobs {
        let nv = job.graph.n_virtual();
        let mut states = Vec::with_capacity(nv);
        let mut next_wake = vec![u64::MAX; nv];
        for v in 0..nv as u32 {
            let (st, ctl) = job.program.init(v, &job.graph);
            states.push(st);
            if let VControl::WakeAt(r) = ctl {
                next_wake[v as usize] = r;
            }
        }
        job_states.push(JobState {
            states,
            next_wake,
            heard: Vec::new(),
        });
    }

    // Item encoding: (job * nv_max + origin, value).
    let pack_cap = (jobs.len() as u64) * nv_max.max(1) + 2;
    let bcast_cfg = EngineConfig::new(word_cap.max(pack_cap), u64::MAX / 2);

    let mut vround: u64 = 0;
    loop {
        if vround > vround_cap {
            return Err(SimError::RoundCapExceeded { cap: vround_cap });
        }
        let mut emissions: Vec<(u32, u32, u64)> = Vec::new();
        let mut any_live = false;
        for (ji, (job, js)) in jobs.iter().zip(job_states.iter_mut()).enumerate() {
            // Active: nodes whose wake time arrived, plus all nodes when
            // something was heard (silence itself is information only for
            // nodes that asked to be woken).
            let heard = std::mem::take(&mut js.heard);
            let nv = job.graph.n_virtual();
            for v in 0..nv {
                let awake = js.next_wake[v] <= vround;
                let has_mail = !heard.is_empty();
                if !awake && !has_mail {
                    continue;
                }
                if awake {
                    js.next_wake[v] = u64::MAX;
                }
                let (emit, ctl) =
                    job.program
                        .step(&mut js.states[v], v as u32, vround, &heard, &job.graph);
                if let Some(value) = emit {
                    emissions.push((ji as u32, v as u32, value));
                    broadcasts[ji] += 1;
                }
                if let VControl::WakeAt(r) = ctl {
                    js.next_wake[v] = r.max(vround + 1);
                }
            }
            if js.next_wake.iter().any(|&w| w != u64::MAX) {
                any_live = true;
            }
        }

        if emissions.is_empty() {
            if !any_live {
                break;
            }
            // Silent virtual round: one network round for global silence.
            metrics.add_rounds(1);
            vround += 1;
            // Jump over stretches where every waiting node sleeps silently,
            // except that silence itself may be observed next round; a node
            // that heard something last round was already stepped above.
            continue;
        }

        emissions.sort_unstable();
        let mut items: Vec<Vec<Payload>> = vec![Vec::new(); topo.n()];
        for &(ji, origin, value) in &emissions {
            let host = jobs[ji as usize].graph.hosts[origin as usize];
            items[host as usize].push(Payload::two(ji as u64 * nv_max + origin as u64, value));
        }
        let (_, m) = pipelined_broadcast(topo, Arc::clone(tree), items, &bcast_cfg)?;
        metrics.absorb(&m);

        for &(ji, origin, value) in &emissions {
            job_states[ji as usize].heard.push(VHeard { origin, value });
        }
        vround += 1;
    }

    Ok(BatchOutcome {
        states: job_states.into_iter().map(|j| j.states).collect(),
        metrics,
        virtual_rounds: vround,
        broadcasts,
    })
}
