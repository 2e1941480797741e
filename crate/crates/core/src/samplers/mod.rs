//! Exact, guided and fixed-step simulation of point-mutation processes.

mod exact;
mod gillespie;
mod guidance;
pub mod jsonl;
mod oracle;
mod tree;

pub use exact::{exact_guided_distribution, sample_factorized, tilted_generator};
pub use gillespie::{
    candidate_rates, fixed_step_gillespie, gillespie, guided_gillespie, simulate, Guide, Jump, Trajectory,
    DEFAULT_MAX_JUMPS,
};
pub use guidance::{normal_cdf, tilt_factor, tilt_factors, GuidanceConfig, GuidanceMode, SigmaAt};
pub use oracle::{FitnessOracle, LinearOracle, OracleFile, TabularOracle, SIGMA_FLOOR};
pub use tree::{simulate_tree, EdgeSampler, Node, Tree};
