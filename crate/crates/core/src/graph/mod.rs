//! Communication topologies and weighted problem instances.

mod generate;
mod instance;
mod io;
mod topology;

pub use generate::{generate, Family, GeneratorSpec};
pub use instance::{AdjList, WeightedInstance};
pub use io::{load_instance, parse_instance, save_instance, serialize_instance, ParseError};
pub use topology::{Topology, TopologyError};
