//! Distributed Bellman-Ford: the classical exact baseline and the generic
//! relaxation program reused by tests.

use std::sync::Arc;

use crate::graph::WeightedInstance;
use crate::sim::{
    run_protocol, word_cap, Control, Delivery, EngineConfig, NodeProgram, Outbox, Payload,
    ProtocolCtx, RunMetrics, SimError,
};
use crate::{Dist, DistanceTable, NodeId, INF};

/// Synchronous Bellman-Ford for a fixed round budget. Nodes broadcast their
/// estimate whenever it improved since the last broadcast. Termination is by
/// round count: no node can locally rule out a further update, so the
/// designated source stays awake for the whole budget and the run meters the
/// full `rounds` cost.
pub struct BellmanFord {
    pub inst: Arc<WeightedInstance>,
    pub source: NodeId,
    pub rounds: u64,
}

#[derive(Clone)]
pub struct BfState {
    pub d: Dist,
    announced: Dist,
}

impl NodeProgram for BellmanFord {
    type State = BfState;

    fn init(&self, node: NodeId, _ctx: &ProtocolCtx) -> (BfState, Control) {
        let d = if node == self.source { 0 } else { INF };
        let ctl = if node == self.source {
            Control::WakeAt(0)
        } else {
            Control::Sleep
        };
        (BfState { d, announced: INF }, ctl)
    }

    fn step(
        &self,
        st: &mut BfState,
        node: NodeId,
        round: u64,
        inbox: &[Delivery],
        out: &mut Outbox,
        _ctx: &ProtocolCtx,
    ) -> Control {
        for m in inbox {
            let w = self.inst.weight(m.from, node);
            st.d = st.d.min(m.payload.a + w);
        }
        if round < self.rounds && st.d < st.announced {
            st.announced = st.d;
            out.broadcast(Payload::one(st.d));
        }
        if node == self.source && round < self.rounds {
            Control::WakeAt(round + 1)
        } else {
            Control::Sleep
        }
    }
}

/// Exact SSSP by `n - 1` rounds of distributed Bellman-Ford.
pub fn bellman_ford_sssp(
    inst: &Arc<WeightedInstance>,
    source: NodeId,
) -> Result<(DistanceTable, RunMetrics), SimError> {
    let n = inst.n();
    let rounds = n.saturating_sub(1) as u64;
    let prog = BellmanFord {
        inst: Arc::clone(inst),
        source,
        rounds,
    };
    let cfg = EngineConfig::new(word_cap(n, inst.max_weight()), rounds + 2);
    let (states, metrics) = run_protocol(inst.topology(), &prog, 0, &cfg)?;
    Ok((
        DistanceTable {
            source,
            dist: states.into_iter().map(|s| s.d).collect(),
        },
        metrics,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Family, GeneratorSpec};
    use crate::oracle;

    #[test]
    fn matches_dijkstra_and_meters_full_budget() {
        let inst = Arc::new(
            generate(&GeneratorSpec::new(Family::ErdosRenyiConnected, 80, 40, 3)).unwrap(),
        );
        let (table, m) = bellman_ford_sssp(&inst, 0).unwrap();
        assert_eq!(table.dist, oracle::dijkstra(&inst.adj_list(), 0).dist);
        assert_eq!(m.rounds, 79);
    }
}
