//! Virtual graphs: sampled node subsets with derived directed edges that
//! need not exist in the network, the broadcast-only simulation runtime that
//! executes protocols over them, and the exact virtual SSSP solver variants.

mod approx;
mod graph;
mod runtime;
mod solve;
mod variants;

pub use approx::{virtual_additive, ApproxTable};
pub use graph::VirtualGraph;
pub use runtime::{run_virtual_batch, VControl, VHeard, VirtualJob, VirtualProgram};
pub use solve::{
    small_weight_virtual_sssp, solve_virtual_exact, virtual_sssp, virtual_sssp_gather, VgError,
    VgOptions, VirtualSolveOutcome,
};
pub use variants::{
    select_virtual_variant, virtual_sssp_nonrecursive, virtual_sssp_recursive, VirtualVariant,
};
