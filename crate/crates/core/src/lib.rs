//! Maximum-entropy inversion of dimension-reducing linear features.
//!
//! Given features `z = Wᵀx` produced by a full-rank N×M map `W` with M < N,
//! this crate reconstructs `x` as the mean of an exponential-class surrogate
//! distribution: it solves `Wᵀ λ(W h) = z` for the natural coordinates `h`
//! and returns `x̄ = λ(W h)`, where the activation `λ` is the mean function
//! of the per-element prior. Five priors are supported (Gaussian, truncated
//! Gaussian, exponential, chi-squared(1), truncated exponential), covering
//! unbounded, positive, and doubly-bounded data, homogeneous or per-element.

pub mod error;
pub mod io;
pub mod linmap;
pub mod oracles;
pub mod priors;
pub mod solver;

pub use error::{Error, Result};
pub use linmap::{acf_map, dct2_map, dense_map, nullspace_basis, LinearMap, MapSource, NullBasis};
pub use priors::{entropy_measures, DataRange, ElementModel, EntropyReport, PriorKind};
pub use solver::{
    check_stationarity, residual, solve, solve_gaussian, InversionProblem, SolveOptions,
    SolveResult, StationarityReport,
};
