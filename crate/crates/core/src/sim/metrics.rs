use serde::{Deserialize, Serialize};

use crate::graph::Topology;

/// Per-run meters: elapsed rounds, per-directed-channel message counts,
/// per-node broadcast counts (rounds in which the node sent at least one
/// message), and the peak payload width observed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunMetrics {
    pub rounds: u64,
    pub edge_messages: Vec<u64>,
    pub node_broadcasts: Vec<u64>,
    pub max_payload_words: u8,
}

impl RunMetrics {
    pub fn new(topo: &Topology) -> Self {
        RunMetrics {
            rounds: 0,
            edge_messages: vec![0; topo.channels()],
            node_broadcasts: vec![0; topo.n()],
            max_payload_words: 0,
        }
    }

    pub fn total_messages(&self) -> u64 {
        self.edge_messages.iter().sum()
    }

    pub fn max_edge_congestion(&self) -> u64 {
        self.edge_messages.iter().copied().max().unwrap_or(0)
    }

    pub fn max_node_broadcasts(&self) -> u64 {
        self.node_broadcasts.iter().copied().max().unwrap_or(0)
    }

    /// Accumulates a sequentially-composed phase: rounds add, counters add.
    pub fn absorb(&mut self, other: &RunMetrics) {
        assert_eq!(self.edge_messages.len(), other.edge_messages.len());
        self.rounds += other.rounds;
        for (a, b) in self.edge_messages.iter_mut().zip(&other.edge_messages) {
            *a += b;
        }
        for (a, b) in self.node_broadcasts.iter_mut().zip(&other.node_broadcasts) {
            *a += b;
        }
        self.max_payload_words = self.max_payload_words.max(other.max_payload_words);
    }

    /// Adds silent rounds (no messages) to the tally.
    pub fn add_rounds(&mut self, rounds: u64) {
        self.rounds += rounds;
    }

    pub fn record(&self, seed: u64) -> MetricsRecord {
        MetricsRecord {
            rounds: self.rounds,
            max_edge_congestion: self.max_edge_congestion(),
            total_messages: self.total_messages(),
            per_node_broadcast_max: self.max_node_broadcasts(),
            seed,
        }
    }
}

/// One exported record per run. JSON object or CSV row with the same columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub rounds: u64,
    pub max_edge_congestion: u64,
    pub total_messages: u64,
    pub per_node_broadcast_max: u64,
    pub seed: u64,
}

impl MetricsRecord {
    pub fn csv_header() -> &'static str {
        "rounds,max_edge_congestion,total_messages,per_node_broadcast_max,seed"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.rounds,
            self.max_edge_congestion,
            self.total_messages,
            self.per_node_broadcast_max,
            self.seed
        )
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("record serializes")
    }
}
