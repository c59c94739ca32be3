//! Stationary Kundu and A-M minification/maxification processes with
//! power-function, complementary power-function and Pareto(I) marginals.
//!
//! The crate covers simulation ([`processes`]), closed-form moments,
//! crossing probabilities and joint laws ([`analytics`]), method-of-moments
//! estimation ([`inference`]), a Monte-Carlo oracle and simulation study
//! ([`montecarlo`]) and ECDF-based fitting of observed series ([`fitting`]).

pub mod analytics;
pub mod corrections;
pub mod distributions;
pub mod error;
pub mod fitting;
pub mod inference;
pub mod montecarlo;
pub mod numfmt;
pub mod processes;
pub mod rng;
pub mod stats;

pub use distributions::{CpfdParams, Marginal, ParetoParams, PfdParams};
pub use error::{Error, Result};
pub use processes::{
    generate_path, transform_marginal, AmParams, Baseline, Family, KunduParams, Origin, Path, Process, ProcessKind,
    ProcessSpec, TransformDirection,
};
pub use rng::{derive_seed, SeededStream};
