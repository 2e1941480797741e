//! Experiment orchestration and artifact plumbing.

mod manifest;
mod sampling;
mod sweep;
mod trees;

pub use manifest::{write_csv, RunManifest, MANIFEST_FILE};
pub use sampling::{run_sampling_comparison, SamplingConfig, SamplingCurves};
pub use sweep::{epistasis_truth, run_epistasis_sweep, SweepConfig, SweepRow, DEFAULT_EPSILONS, PAPER_SCALE_SAMPLES};
pub use trees::{random_tree, run_tree_fidelity, Closer, LeafRow, TreeFidelity};
