//! Joint power-factor-correction and feeder-reconfiguration toolkit for
//! radial distribution grids.
//!
//! The pipeline: load a network model and hourly profiles, coarsen the grid
//! into a reduced graph of substations and virtual breakers, enumerate every
//! radial configuration, order the list by Hamming distance, solve the power
//! flow per candidate, score candidates with a penalty-augmented loss
//! objective, screen configurations for inherent constraint violation, and
//! search the mixed genome with a genetic algorithm.

pub mod cli;
pub mod model;
pub mod objective;
pub mod optimizer;
pub mod powerflow;
pub mod profiles;
pub mod screening;
pub mod solution;
pub mod stats;
pub mod topology;

pub use model::{load_network, NetworkModel};
pub use profiles::{load_profiles, total_load, HourlyProfiles};
pub use solution::{CandidateSolution, SearchDomain};
pub use topology::{
    enumerate_admissible, hamming, is_radial, order_by_hamming, reduce_graph, Bits,
    Configuration, ConfigurationList, ReducedGraph,
};
