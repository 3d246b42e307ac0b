//! Reinforced edge-transmission spreading processes on directed graphs.
//!
//! A transmission at each time step crosses edge `e` with probability
//! proportional to `b_t(e) * w(e)`, where `b_t(e)` counts how often the
//! source vertex of `e` has been infected so far and `w(e)` is a
//! nonnegative edge weight, by default the exponential parametrization
//! `w(e) = exp(x_e' beta)` in known edge covariates. The crate provides
//!
//! - simulation of the process and its vertex-only projection ([`sim`]),
//! - the urn view of the process: replacement matrix and its Perron left
//!   eigenvector, which is the long-run transmission distribution
//!   ([`graph`], [`spectral`]),
//! - maximum likelihood for `beta` from an ordered trace with analytic
//!   gradient and Hessian, an exact LP-based existence check, and
//!   asymptotic confidence intervals ([`likelihood`], [`existence`],
//!   [`inference`]),
//! - per-edge weight estimation: nonparametric MLE from ordered traces
//!   ([`weights`]) and moment/fixed-point estimators from unordered counts
//!   ([`unordered`]),
//! - the CSV formats shared with the command-line tool ([`io`]).
//!
//! The numeric kernels are generic over the scalar type through
//! [`scalar::Scalar`]; the aliases below fix the common `f64` and `f32`
//! instantiations.

pub mod error;
pub mod existence;
pub mod graph;
pub mod inference;
pub mod io;
pub mod likelihood;
pub mod linalg;
pub mod scalar;
pub mod sim;
pub mod simplex;
pub mod spectral;
pub mod unordered;
pub mod weights;

pub use error::{Error, Result};
pub use existence::{check_mle_existence, Existence, ExistenceOptions};
pub use graph::{Graph, UrnMatrix};
pub use inference::{
    information_estimate, normal_quantile, standard_errors_ci, wald_order, wald_stats,
    InferenceResult,
};
pub use likelihood::{
    fit_mle, vertex_log_likelihood, FitOptions, FitResult, FitStatus, LikelihoodContext,
};
pub use scalar::Scalar;
pub use sim::{counts_from_trace, simulate_trace, simulate_vertex_trace, Counts, Trace};
pub use spectral::{
    b_infinity_from_pi, leading_left_eigenvector, limiting_edge_distribution, SpectralResult,
};
pub use unordered::{
    cyclic_fixed_point_oracle, empirical_weight_estimate, fixed_point_estimate, CyclicOracle,
    FixedPointOptions, UnorderedData,
};
pub use weights::{fit_general_weights, project_to_beta, GeneralWeightsFit};

/// `f64` instantiations, the working types of the CLI.
pub type Graph64 = graph::Graph<f64>;
pub type UrnMatrix64 = graph::UrnMatrix<f64>;
pub type SpectralResult64 = spectral::SpectralResult<f64>;
pub type LikelihoodContext64 = likelihood::LikelihoodContext<f64>;
pub type FitResult64 = likelihood::FitResult<f64>;
pub type FitOptions64 = likelihood::FitOptions<f64>;
pub type InferenceResult64 = inference::InferenceResult<f64>;
pub type GeneralWeightsFit64 = weights::GeneralWeightsFit<f64>;

/// `f32` instantiations; the default tolerances are tuned for `f64`, so
/// pass wider ones where a solver accepts them.
pub type Graph32 = graph::Graph<f32>;
pub type UrnMatrix32 = graph::UrnMatrix<f32>;
pub type SpectralResult32 = spectral::SpectralResult<f32>;
pub type LikelihoodContext32 = likelihood::LikelihoodContext<f32>;
pub type FitResult32 = likelihood::FitResult<f32>;
