//! Deterministic round-synchronous CONGEST engine and its primitives.

mod broadcast;
mod engine;
mod metrics;
mod scheduler;
mod tree;

pub use broadcast::{pipelined_broadcast, BroadcastOutput, Item};
pub use engine::{
    run_protocol, word_cap, Control, Delivery, EngineConfig, NodeProgram, Outbox, Payload,
    ProtocolCtx, SimError,
};
pub use metrics::{MetricsRecord, RunMetrics};
pub use scheduler::{schedule_parallel, ScheduleBounds, ScheduleConfig};
pub use tree::{build_bfs_tree, estimate_diameter, BfsTree};
