//! Crate-wide error type.

use std::fmt;

use crate::priors::PriorKind;
use crate::solver::SolveResult;

#[derive(Debug)]
pub enum Error {
    /// A natural parameter violates its prior's domain constraint
    /// (e.g. exponential with alpha >= 1).
    Domain {
        kind: PriorKind,
        alpha: f64,
        element: Option<usize>,
    },
    /// A value lies on or outside the data range of its model.
    Range(String),
    /// Dimension mismatch or malformed shape.
    Shape(String),
    /// Matrix is numerically rank-deficient.
    Rank { smallest: f64, largest: f64 },
    /// Factorization or conditioning failure.
    Numerical(String),
    /// Problem violates a structural invariant (e.g. the all-ones vector
    /// must lie in the column space of W for homogeneous exponential data).
    Invalid(String),
    /// Entropy requested for a prior that does not support it.
    UnsupportedModel(PriorKind),
    /// Newton iteration hit the iteration cap; carries the best iterate.
    MaxIterations(Box<SolveResult>),
    /// Residual stagnated while the natural coordinates diverged; the
    /// feature vector is likely outside the feasible set.
    InfeasibleSuspected { h_norm: f64, best: Box<SolveResult> },
    /// Levinson recursion produced a non-positive error variance.
    NotPositiveDefinite { order: usize, error_var: f64 },
    /// Too few Monte-Carlo samples landed in the constraint slab.
    DegenerateSlab { accepted: usize },
    /// Malformed numeric text at a specific location.
    Parse { row: usize, col: usize, msg: String },
    /// Wrong magic number or inconsistent header.
    Format(String),
    /// File ended before the declared payload.
    TruncatedFile(String),
    Io(std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { kind, alpha, element } => {
                write!(f, "alpha = {alpha} outside the domain of the {kind} prior")?;
                if let Some(i) = element {
                    write!(f, " at element {i}")?;
                }
                Ok(())
            }
            Error::Range(msg) => write!(f, "range violation: {msg}"),
            Error::Shape(msg) => write!(f, "shape mismatch: {msg}"),
            Error::Rank { smallest, largest } => write!(
                f,
                "matrix is numerically rank-deficient: smallest singular value {smallest:.3e} \
                 below 1e-10 of largest {largest:.3e}"
            ),
            Error::Numerical(msg) => write!(f, "numerical failure: {msg}"),
            Error::Invalid(msg) => write!(f, "invalid problem: {msg}"),
            Error::UnsupportedModel(kind) => {
                write!(f, "prior entropy is not defined for the {kind} prior")
            }
            Error::MaxIterations(best) => write!(
                f,
                "no convergence after {} iterations (residual_inf = {:.3e})",
                best.iterations, best.residual_inf
            ),
            Error::InfeasibleSuspected { h_norm, best } => write!(
                f,
                "feature vector appears infeasible: |h| = {:.3e} with residual_inf = {:.3e}",
                h_norm, best.residual_inf
            ),
            Error::NotPositiveDefinite { order, error_var } => write!(
                f,
                "autocorrelation sequence is not positive definite: error variance {error_var:.3e} \
                 at order {order}"
            ),
            Error::DegenerateSlab { accepted } => write!(
                f,
                "slab acceptance too low: {accepted} samples accepted, need at least 100"
            ),
            Error::Parse { row, col, msg } => {
                write!(f, "parse error at row {row}, column {col}: {msg}")
            }
            Error::Format(msg) => write!(f, "bad file format: {msg}"),
            Error::TruncatedFile(msg) => write!(f, "truncated file: {msg}"),
            Error::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io(e) => Some(e),
            _ => None,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e)
    }
}
