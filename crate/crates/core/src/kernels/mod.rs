//! Matrix exponentials, transition kernels and their derivatives.

mod expm;
mod frechet;
pub mod poisson;
mod transition;

pub use expm::{
    check_generator, clamp_stochastic, expm_generator, expm_taylor, one_norm, uniformization_squarings,
    ExpmConfig, ExpmMethod, NEGATIVE_CLAMP, ROW_SUM_TOL,
};
pub use frechet::{expm_entry_gradient, frechet_derivative};
pub use poisson::PoissonWeights;
pub use transition::{
    exact_transition, factorized_distribution, factorized_site_kernels, factorized_transition, match_rows_to_truth,
    prop1_error, transition_matrix, TransitionDistribution,
};
