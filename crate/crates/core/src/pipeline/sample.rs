use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::NodeId;

/// Samples the virtual node set: every node joins independently with
/// probability `k / n`, and the source joins with probability one. The
/// result is sorted and deterministic in the seed.
pub fn sample_virtual_nodes(n: usize, source: NodeId, k: u64, seed: u64) -> Vec<NodeId> {
    let p = (k as f64 / n as f64).min(1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = Vec::new();
    for u in 0..n as NodeId {
        let take = rng.random_bool(p);
        if take || u == source {
            picked.push(u);
        }
    }
    picked
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_rate_takes_everyone() {
        assert_eq!(sample_virtual_nodes(5, 2, 5, 9), vec![0, 1, 2, 3, 4]);
        assert_eq!(sample_virtual_nodes(5, 2, 7, 9), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn source_is_always_included() {
        for seed in 0..50 {
            let v = sample_virtual_nodes(100, 37, 1, seed);
            assert!(v.contains(&37));
        }
    }

    #[test]
    fn deterministic_in_seed() {
        let a = sample_virtual_nodes(200, 0, 16, 5);
        let b = sample_virtual_nodes(200, 0, 16, 5);
        assert_eq!(a, b);
    }

    #[test]
    fn concentration_is_plausible() {
        // |V'| <= 4k + 8 ln n over many seeds.
        let n = 1000;
        let k = 32u64;
        let cap = 4 * k as usize + (8.0 * (n as f64).ln()) as usize;
        for seed in 0..200 {
            let v = sample_virtual_nodes(n, 0, k, seed);
            assert!(v.len() <= cap, "seed {seed}: {} > {cap}", v.len());
        }
    }
}
