use std::collections::VecDeque;
use std::sync::Arc;

use crate::graph::Topology;
use crate::sim::{
    run_protocol, Control, Delivery, EngineConfig, NodeProgram, Outbox, Payload, ProtocolCtx,
    RunMetrics, SimError,
};
use crate::NodeId;

/// A broadcast item: an opaque one- or two-word value.
pub type Item = Payload;

/// Result of a pipelined broadcast: every node's received item list (the
/// node's own items included), in root-emission order.
pub struct BroadcastOutput {
    pub items_at: Vec<Vec<Item>>,
}

struct Pipeline {
    tree: Arc<BfsTreeRef>,
    items: Vec<Vec<Item>>,
    total: usize,
}

// Thin alias so the program does not depend on the tree module layout.
type BfsTreeRef = crate::sim::BfsTree;

#[derive(Clone)]
struct PipeState {
    up: VecDeque<Item>,
    all: Vec<Item>,
    down: VecDeque<Item>,
}

impl NodeProgram for Pipeline {
    type State = PipeState;

    fn init(&self, node: NodeId, _ctx: &ProtocolCtx) -> (PipeState, Control) {
        let own = self.items[node as usize].clone();
        let is_root = node == self.tree.root;
        let mut st = PipeState {
            up: VecDeque::new(),
            all: Vec::new(),
            down: VecDeque::new(),
        };
        let ctl = if self.total == 0 {
            Control::Sleep
        } else if is_root {
            st.all = own;
            if st.all.len() == self.total {
                st.down = st.all.iter().copied().collect();
            }
            Control::WakeAt(0)
        } else {
            st.up = own.into_iter().collect();
            if st.up.is_empty() {
                Control::Sleep
            } else {
                Control::WakeAt(0)
            }
        };
        (st, ctl)
    }

    fn step(
        &self,
        st: &mut PipeState,
        node: NodeId,
        _round: u64,
        inbox: &[Delivery],
        out: &mut Outbox,
        _ctx: &ProtocolCtx,
    ) -> Control {
        let is_root = node == self.tree.root;
        let parent = self.tree.parent[node as usize];
        for d in inbox {
            if !is_root && d.from == parent {
                // Down-phase item from the parent.
                st.all.push(d.payload);
                st.down.push_back(d.payload);
            } else if is_root {
                st.all.push(d.payload);
                if st.all.len() == self.total && st.down.is_empty() {
                    st.down = st.all.iter().copied().collect();
                }
            } else {
                // Up-phase item from a child.
                st.up.push_back(d.payload);
            }
        }
        if !is_root {
            if let Some(item) = st.up.pop_front() {
                out.send(parent, item);
            }
        }
        if let Some(item) = st.down.pop_front() {
            for &c in &self.tree.children[node as usize] {
                out.send(c, item);
            }
        }
        if st.up.is_empty() && st.down.is_empty() {
            Control::Sleep
        } else {
            Control::WakeAt(0)
        }
    }
}

/// Disseminates all items to every node by pipelining a convergecast to the
/// tree root followed by a pipelined downcast. With `m` total items and tree
/// depth `Δ` this takes at most `2Δ + 2m` rounds, sends at most `m` messages
/// per tree-channel direction, and uses no non-tree channel. The total item
/// count is shared static configuration.
pub fn pipelined_broadcast(
    topo: &Topology,
    tree: Arc<BfsTreeRef>,
    items: Vec<Vec<Item>>,
    cfg: &EngineConfig,
) -> Result<(BroadcastOutput, RunMetrics), SimError> {
    let total: usize = items.iter().map(|v| v.len()).sum();
    let program = Pipeline { tree, items, total };
    let (states, metrics) = run_protocol(topo, &program, 0, cfg)?;
    debug_assert!(states.iter().all(|s| s.all.len() == total));
    Ok((
        BroadcastOutput {
            items_at: states.into_iter().map(|s| s.all).collect(),
        },
        metrics,
    ))
}
