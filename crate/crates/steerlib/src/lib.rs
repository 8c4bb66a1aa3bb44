//! `steerlib` — steering quantifiers for finite-dimensional quantum
//! assemblages.
//!
//! The library computes local-hidden-state (LHS) membership with certificates,
//! the restricted relative entropy of steering as a two-sided bracket,
//! restricted and strategy-based trace distances of assemblages, entropic
//! upper bounds, and runs a theorem-by-theorem property suite (monotonicity,
//! convexity, continuity, faithfulness) on generated instances.
//!
//! Start from [`assemblage::Assemblage`] and the top-level functions in
//! [`quantifiers`]; the `examples/` directory has one runnable program per
//! capability, and the `steer` binary exposes the same operations on JSON
//! documents.

pub mod assemblage;
pub mod cli;
pub mod error;
pub mod harness;
pub mod lhs;
pub mod linalg;
pub mod quantifiers;

pub use error::{Error, Result};
pub use linalg::{
    conditional_mutual_information, eig_hermitian, log_frechet_apply, matrix_function,
    matrix_function_on_support, partial_trace, relative_entropy, trace_norm, von_neumann_entropy,
    ComplexMatrix, DensityOperator, EigenDecomposition, HermitianOperator, RelEntropy,
};

pub use assemblage::{
    Assemblage, CqState, Instrument, MeasurementStrategy, Povm, ProbabilityVector,
    RestrictedOneWayLocc,
};
pub use lhs::{
    enumerate_strategies, inner_inf_relative_entropy, lhs_feasibility, DeterministicStrategy,
    FeasibilityReport, FeasibilityStatus, InnerSolveResult, LhsModel, SolverConfig,
};
pub use quantifiers::{
    continuity_bound_check, faithfulness_check, g_eps, res_lower_bound_full, restricted_res,
    restricted_res_exchanged, restricted_trace_distance, restricted_upper_bound,
    trace_distance_lower_bound, upper_bound_full, Interval,
};
pub use harness::{
    random_assemblage, random_density, random_instrument, random_povm, random_restricted_op,
    run_suite, werner_assemblage, Rng, SuiteConfig, SuiteReport,
};
