//! The branching particle system and the queries made on it.

mod coupling;
mod engine;
mod export;
mod few;
mod query;
mod tree;
mod window;

pub use coupling::{coupled_discrepancy, CouplingOutcome};
pub use engine::{
    population_at, population_horizon, run, Fate, ParticleView, PruneRule, RunSummary, SimConfig,
    Stop, StopReason, Storage, Visitor, DEFAULT_POPULATION_CAP,
};
pub use export::{tree_from_json, tree_to_json, ParticleRecord, TreeExport, TREE_SCHEMA};
pub use few::{many_to_one_check, many_to_two_moment_check, second_moment};
pub use query::{
    compute_z, count_good_particles, horizon_max, max_coordinate, max_modulus, Extreme,
    GoodParticleCount, GoodParticleSpec,
};
pub use tree::{simulate_tree, Particle, ParticleTree};
pub use window::{simulate_from_window, window_config};
