use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{Topology, WeightedInstance};
use crate::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Family {
    Path,
    Cycle,
    StarOfPaths,
    ErdosRenyiConnected,
    LowDiameterExpander,
    Grid,
}

impl Family {
    pub fn parse(s: &str) -> Option<Family> {
        Some(match s {
            "path" => Family::Path,
            "cycle" => Family::Cycle,
            "star_of_paths" => Family::StarOfPaths,
            "erdos_renyi_connected" | "er" => Family::ErdosRenyiConnected,
            "low_diameter_expander" | "expander" => Family::LowDiameterExpander,
            "grid" => Family::Grid,
            _ => return None,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Path => "path",
            Family::Cycle => "cycle",
            Family::StarOfPaths => "star_of_paths",
            Family::ErdosRenyiConnected => "erdos_renyi_connected",
            Family::LowDiameterExpander => "low_diameter_expander",
            Family::Grid => "grid",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneratorSpec {
    pub family: Family,
    pub n: usize,
    pub lambda: u64,
    pub seed: u64,
    /// Force `w(u,v) = w(v,u)`; default is independent directions.
    pub symmetric: bool,
}

impl GeneratorSpec {
    pub fn new(family: Family, n: usize, lambda: u64, seed: u64) -> Self {
        GeneratorSpec {
            family,
            n,
            lambda,
            seed,
            symmetric: false,
        }
    }
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("infeasible spec: {0}")]
    InfeasibleSpec(String),
    #[error("bad instance: {0}")]
    BadInstance(String),
}

/// Generates a connected weighted instance, deterministically in the seed.
pub fn generate(spec: &GeneratorSpec) -> Result<WeightedInstance, GenError> {
    if spec.n == 0 {
        return Err(GenError::InfeasibleSpec("n must be >= 1".into()));
    }
    if spec.lambda == 0 {
        return Err(GenError::InfeasibleSpec("lambda must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let edges = build_edges(spec, &mut rng)?;
    let topo = Arc::new(
        Topology::new(spec.n, &edges).map_err(|e| GenError::BadInstance(e.to_string()))?,
    );

    let mut w = vec![0u64; topo.channels()];
    // Draw weights in canonical channel order so the output is independent
    // of how the edge list was assembled.
    for c in 0..topo.channels() as u32 {
        let (u, v) = topo.endpoints(c);
        if u < v {
            let wf = draw_weight(spec, &mut rng, u, v);
            let wb = if spec.symmetric {
                wf
            } else {
                draw_weight(spec, &mut rng, v, u)
            };
            w[c as usize] = wf;
            w[topo.reverse(c) as usize] = wb;
        }
    }
    WeightedInstance::new_input(topo, w, spec.lambda, vec![0]).map_err(GenError::BadInstance)
}

fn draw_weight(spec: &GeneratorSpec, rng: &mut ChaCha8Rng, u: NodeId, v: NodeId) -> u64 {
    match spec.family {
        // Hub spokes get the full weight; path links stay at 1 so the most
        // significant scaling iterations see long all-zero stretches.
        Family::StarOfPaths => {
            if u == 0 || v == 0 {
                spec.lambda
            } else {
                1
            }
        }
        _ => rng.random_range(1..=spec.lambda),
    }
}

fn build_edges(spec: &GeneratorSpec, rng: &mut ChaCha8Rng) -> Result<Vec<(NodeId, NodeId)>, GenError> {
    let n = spec.n as NodeId;
    let mut edges = Vec::new();
    match spec.family {
        Family::Path => {
            for u in 1..n {
                edges.push((u - 1, u));
            }
        }
        Family::Cycle => {
            for u in 1..n {
                edges.push((u - 1, u));
            }
            if n > 2 {
                edges.push((n - 1, 0));
            }
        }
        Family::StarOfPaths => {
            // Hub 0 with ~sqrt(n) paths of ~sqrt(n) nodes each.
            let arm = ((spec.n as f64).sqrt().ceil() as usize).max(1);
            let mut next: NodeId = 1;
            while (next as usize) < spec.n {
                let mut prev: NodeId = 0;
                for _ in 0..arm {
                    if next as usize >= spec.n {
                        break;
                    }
                    edges.push((prev, next));
                    prev = next;
                    next += 1;
                }
            }
        }
        Family::ErdosRenyiConnected => {
            // Random recursive tree for connectivity, then G(n, p) extras.
            for u in 1..n {
                let p = rng.random_range(0..u);
                edges.push((p, u));
            }
            let p = 2.0 * (spec.n.max(2) as f64).ln() / spec.n as f64;
            for u in 0..n {
                for v in (u + 1)..n {
                    if rng.random_bool(p.min(1.0)) {
                        edges.push((u, v));
                    }
                }
            }
        }
        Family::LowDiameterExpander => {
            // Each node links to a few uniform targets; O(log n) diameter
            // w.h.p. A recursive-tree backbone keeps it connected for any n.
            for u in 1..n {
                let p = rng.random_range(0..u);
                edges.push((p, u));
            }
            if n > 2 {
                let extra = 3usize;
                for u in 0..n {
                    for _ in 0..extra {
                        let v = rng.random_range(0..n);
                        if v != u {
                            edges.push((u.min(v), u.max(v)));
                        }
                    }
                }
            }
        }
        Family::Grid => {
            let side = (spec.n as f64).sqrt().round() as usize;
            if side * side != spec.n {
                return Err(GenError::InfeasibleSpec(format!(
                    "grid needs square n, got {}",
                    spec.n
                )));
            }
            let id = |r: usize, c: usize| (r * side + c) as NodeId;
            for r in 0..side {
                for c in 0..side {
                    if c + 1 < side {
                        edges.push((id(r, c), id(r, c + 1)));
                    }
                    if r + 1 < side {
                        edges.push((id(r, c), id(r + 1, c)));
                    }
                }
            }
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Ok(edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_path_weights() {
        let inst = generate(&GeneratorSpec::new(Family::Path, 2, 1, 0)).unwrap();
        assert_eq!(inst.weight(0, 1), 1);
        assert_eq!(inst.weight(1, 0), 1);
    }

    #[test]
    fn cycle_invariants_hold() {
        let inst = generate(&GeneratorSpec::new(Family::Cycle, 5, 10, 7)).unwrap();
        assert_eq!(inst.topology().edge_count(), 5);
        assert!(inst.weights().iter().all(|&w| (1..=10).contains(&w)));
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = GeneratorSpec::new(Family::ErdosRenyiConnected, 100, 100, 41);
        let a = generate(&spec).unwrap();
        let b = generate(&spec).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn grid_needs_square_n() {
        assert!(generate(&GeneratorSpec::new(Family::Grid, 10, 5, 0)).is_err());
        let inst = generate(&GeneratorSpec::new(Family::Grid, 9, 5, 0)).unwrap();
        assert_eq!(inst.topology().exact_diameter(), 4);
    }

    #[test]
    fn symmetric_flag_forces_equal_directions() {
        let mut spec = GeneratorSpec::new(Family::Cycle, 6, 50, 3);
        spec.symmetric = true;
        let inst = generate(&spec).unwrap();
        let topo = inst.topology();
        for c in 0..topo.channels() as u32 {
            assert_eq!(
                inst.weight_of_channel(c),
                inst.weight_of_channel(topo.reverse(c))
            );
        }
    }

    #[test]
    fn families_are_connected_for_odd_sizes() {
        for family in [
            Family::Path,
            Family::Cycle,
            Family::StarOfPaths,
            Family::ErdosRenyiConnected,
            Family::LowDiameterExpander,
        ] {
            for n in [1usize, 2, 3, 17, 50] {
                let inst = generate(&GeneratorSpec::new(family, n, 4, 11)).unwrap();
                assert_eq!(inst.n(), n, "{family:?} n={n}");
            }
        }
    }
}
