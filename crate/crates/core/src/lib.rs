//! Sequential point-mutation Markov chains over fixed-length sequences:
//! generators, transition kernels, exact and guided simulation, likelihood
//! fitting and evaluation.

pub mod analysis;
pub mod error;
pub mod estimation;
pub mod generators;
pub mod harness;
pub mod kernels;
pub mod par;
pub mod rng;
pub mod samplers;
pub mod state_space;

pub use error::{Error, Result};
