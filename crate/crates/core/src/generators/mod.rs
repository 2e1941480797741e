//! Rate matrices: full point-mutation generators, per-site generators,
//! context-conditional factorized models and mutation–selection generators.

mod factorized;
mod full;
pub mod io;
pub mod link;
mod selection;
mod site;

pub use factorized::{tabular_index, tabular_len, FactorizedModel, Parameterization, INIT_STD};
pub use full::{
    build_factorized_truth, build_factorized_truth_with_sites, build_state_dependent_truth, draw_site_matrices,
    interpolate_truth, kronecker_sum, FullGenerator, DENSE_MATRIX_CAP, FULL_ROW_TOL,
};
pub use io::{Model, ModelFile, ModelHeader, ModelKind};
pub use selection::{fixation_probability, halpern_bruno_generator, FixationParams};
pub use site::{SiteRateMatrix, SITE_ROW_TOL};
