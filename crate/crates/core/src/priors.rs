//! Exponential-class priors and their activation functions.
//!
//! Every prior is a univariate density of the form
//! `p(x) ∝ x^γ · exp((α₀ + α)·x + β·x²)` on its data range, parameterized by
//! the natural parameter `α`. The activation `λ(α)` is the mean of this
//! density; it is strictly increasing in `α`, so means and natural
//! parameters are equivalent coordinates.

use serde::Serialize;

use crate::error::{Error, Result};

/// The five supported prior families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PriorKind {
    /// Standard normal on all of R; `λ(α) = α`.
    Gaussian,
    /// Standard normal truncated to `[0, ∞)`; `λ(α) = α + N(α)/Φ(α)`.
    TruncGauss,
    /// Unit-mean exponential on `[0, ∞)`; `λ(α) = 1/(1−α)`, `α < 1`.
    Exponential,
    /// Chi-squared with one degree of freedom on `[0, ∞)`;
    /// `λ(α) = 1/(1−2α)`, `α < 1/2`.
    ChiSq1,
    /// Truncated exponential on `[0, 1]` (uniform at `α = 0`);
    /// `λ(α) = e^α/(e^α−1) − 1/α`.
    Ted,
}

impl PriorKind {
    pub const ALL: [PriorKind; 5] = [
        PriorKind::Gaussian,
        PriorKind::TruncGauss,
        PriorKind::Exponential,
        PriorKind::ChiSq1,
        PriorKind::Ted,
    ];
}

impl std::fmt::Display for PriorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            PriorKind::Gaussian => "gaussian",
            PriorKind::TruncGauss => "truncated-gaussian",
            PriorKind::Exponential => "exponential",
            PriorKind::ChiSq1 => "chi-squared(1)",
            PriorKind::Ted => "truncated-exponential",
        };
        f.write_str(name)
    }
}

/// Data range an element is confined to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataRange {
    Unbounded,
    Positive,
    UnitInterval,
}

/// Per-element data model: a prior kind together with its fixed
/// exponential-class parameters (α₀, β, γ) and data range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementModel {
    pub kind: PriorKind,
    pub alpha0: f64,
    pub beta: f64,
    pub gamma: f64,
    pub range: DataRange,
}

impl ElementModel {
    pub fn new(kind: PriorKind) -> Self {
        let (alpha0, beta, gamma, range) = match kind {
            PriorKind::Gaussian => (0.0, -0.5, 0.0, DataRange::Unbounded),
            PriorKind::TruncGauss => (0.0, -0.5, 0.0, DataRange::Positive),
            PriorKind::Exponential => (-1.0, 0.0, 0.0, DataRange::Positive),
            PriorKind::ChiSq1 => (-0.5, 0.0, -0.5, DataRange::Positive),
            PriorKind::Ted => (0.0, 0.0, 0.0, DataRange::UnitInterval),
        };
        ElementModel { kind, alpha0, beta, gamma, range }
    }

    /// Upper limit of the natural-parameter domain (exclusive); `+∞` when
    /// the domain is all of R.
    pub fn domain_sup(&self) -> f64 {
        match self.kind {
            PriorKind::Exponential => 1.0,
            PriorKind::ChiSq1 => 0.5,
            _ => f64::INFINITY,
        }
    }

    pub fn alpha_in_domain(&self, alpha: f64) -> bool {
        alpha.is_finite() && alpha < self.domain_sup()
    }

    /// Mean of the prior at natural parameter `alpha`.
    pub fn activation(&self, alpha: f64) -> Result<f64> {
        self.check_domain(alpha)?;
        Ok(self.lambda_raw(alpha))
    }

    /// Derivative of the activation, which equals the variance of the
    /// prior at `alpha`; strictly positive everywhere in the domain.
    pub fn activation_deriv(&self, alpha: f64) -> Result<f64> {
        self.check_domain(alpha)?;
        Ok(self.lambda_deriv_raw(alpha))
    }

    /// Natural parameter producing a given mean. The mean must lie
    /// strictly inside the data range.
    pub fn activation_inverse(&self, mean: f64) -> Result<f64> {
        if !mean.is_finite() {
            return Err(Error::Range(format!("mean {mean} is not finite")));
        }
        match self.kind {
            PriorKind::Gaussian => Ok(mean),
            PriorKind::Exponential => {
                if mean <= 0.0 {
                    return Err(Error::Range(format!(
                        "mean {mean} not strictly positive for {} prior",
                        self.kind
                    )));
                }
                Ok(1.0 - 1.0 / mean)
            }
            PriorKind::ChiSq1 => {
                if mean <= 0.0 {
                    return Err(Error::Range(format!(
                        "mean {mean} not strictly positive for {} prior",
                        self.kind
                    )));
                }
                Ok(0.5 * (1.0 - 1.0 / mean))
            }
            PriorKind::TruncGauss => {
                if mean <= 0.0 {
                    return Err(Error::Range(format!(
                        "mean {mean} not strictly positive for {} prior",
                        self.kind
                    )));
                }
                // lambda ≈ alpha for large means, ≈ -1/alpha for small ones
                let guess = if mean > 1.0 { mean } else { -1.0 / mean };
                Ok(invert_monotone(tg_lambda, tg_lambda_deriv, mean, guess))
            }
            PriorKind::Ted => {
                if mean <= 0.0 || mean >= 1.0 {
                    return Err(Error::Range(format!(
                        "mean {mean} not strictly inside (0, 1) for {} prior",
                        self.kind
                    )));
                }
                let guess = if mean < 0.2 {
                    -1.0 / mean
                } else if mean > 0.8 {
                    1.0 / (1.0 - mean)
                } else {
                    12.0 * (mean - 0.5)
                };
                Ok(invert_monotone(ted_lambda, ted_lambda_deriv, mean, guess))
            }
        }
    }

    /// Differential entropy of the prior at `alpha`. Defined here only for
    /// the exponential and truncated-exponential priors.
    pub fn prior_entropy(&self, alpha: f64) -> Result<f64> {
        self.check_domain(alpha)?;
        match self.kind {
            PriorKind::Exponential => Ok(1.0 - (1.0 - alpha).ln()),
            PriorKind::Ted => Ok(ted_entropy(alpha)),
            kind => Err(Error::UnsupportedModel(kind)),
        }
    }

    fn check_domain(&self, alpha: f64) -> Result<()> {
        if self.alpha_in_domain(alpha) {
            Ok(())
        } else {
            Err(Error::Domain { kind: self.kind, alpha, element: None })
        }
    }

    /// Activation without the domain check; callers must validate first.
    #[inline]
    pub(crate) fn lambda_raw(&self, alpha: f64) -> f64 {
        match self.kind {
            PriorKind::Gaussian => alpha,
            PriorKind::TruncGauss => tg_lambda(alpha),
            PriorKind::Exponential => 1.0 / (1.0 - alpha),
            PriorKind::ChiSq1 => 1.0 / (1.0 - 2.0 * alpha),
            PriorKind::Ted => ted_lambda(alpha),
        }
    }

    #[inline]
    pub(crate) fn lambda_deriv_raw(&self, alpha: f64) -> f64 {
        match self.kind {
            PriorKind::Gaussian => 1.0,
            PriorKind::TruncGauss => tg_lambda_deriv(alpha),
            PriorKind::Exponential => {
                let r = 1.0 - alpha;
                1.0 / (r * r)
            }
            PriorKind::ChiSq1 => {
                let r = 1.0 - 2.0 * alpha;
                2.0 / (r * r)
            }
            PriorKind::Ted => ted_lambda_deriv(alpha),
        }
    }
}

/// The three entropy measures of a positive vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyReport {
    /// Discrete distribution entropy `−Σ xᵢ log xᵢ`. The input is used as
    /// given; callers wanting the probability-vector reading must normalize
    /// to Σxᵢ = 1 themselves.
    pub h_ds: f64,
    /// Spectral entropy `Σ log xᵢ`.
    pub h_s: f64,
    /// Exponential-prior entropy `Σ (1 + log xᵢ)`; equals `N + h_s`.
    pub h_e: f64,
}

/// Computes all three entropy measures; every element must be > 0.
pub fn entropy_measures(x: &[f64]) -> Result<EntropyReport> {
    let mut h_ds = 0.0;
    let mut h_s = 0.0;
    let mut h_e = 0.0;
    for (i, &v) in x.iter().enumerate() {
        if !(v > 0.0) {
            return Err(Error::Range(format!("x[{i}] = {v} is not strictly positive")));
        }
        let lg = v.ln();
        h_ds -= v * lg;
        h_s += lg;
        h_e += 1.0 + lg;
    }
    Ok(EntropyReport { h_ds, h_s, h_e })
}

// ---------------------------------------------------------------------------
// Truncated exponential on [0, 1].
//
// lambda(a) = e^a/(e^a - 1) - 1/a has a removable singularity at 0 where
// the closed form cancels catastrophically; a short Bernoulli-number series
// covers |a| < 1e-3. For |a| > 36 the exact form saturates to 1 - 1/a
// (resp. -1/a) within one ulp.

fn ted_lambda(a: f64) -> f64 {
    let aa = a.abs();
    if aa < 1e-3 {
        let a2 = a * a;
        0.5 + a / 12.0 - a * a2 / 720.0 + a * a2 * a2 / 30240.0
    } else if a > 36.0 {
        1.0 - 1.0 / a
    } else if a < -36.0 {
        -1.0 / a
    } else {
        // e^a/(e^a - 1) = 1/(1 - e^-a)
        1.0 / (-(-a).exp_m1()) - 1.0 / a
    }
}

fn ted_lambda_deriv(a: f64) -> f64 {
    let aa = a.abs();
    if aa <= 0.05 {
        let a2 = a * a;
        1.0 / 12.0 - a2 / 240.0 + a2 * a2 / 6048.0 - a2 * a2 * a2 / 172_800.0
    } else {
        // variance is symmetric in a; e^-t/(1 - e^-t)^2 avoids overflow
        let e = (-aa).exp_m1();
        1.0 / (a * a) - (-aa).exp() / (e * e)
    }
}

/// Differential entropy of the TED prior: log Z − α·λ(α) with
/// Z = (e^α − 1)/α; symmetric in α.
fn ted_entropy(a: f64) -> f64 {
    let aa = a.abs();
    if aa < 1e-3 {
        let a2 = a * a;
        -a2 / 24.0 + a2 * a2 / 960.0
    } else if aa > 36.0 {
        // Z ≈ e^|a|/|a|, λ(|a|) ≈ 1 − 1/|a|
        1.0 - aa.ln()
    } else {
        (aa.exp_m1() / aa).ln() - aa * ted_lambda(aa)
    }
}

// ---------------------------------------------------------------------------
// Truncated Gaussian on [0, ∞).
//
// lambda(a) = a + N(a)/Phi(a). For a >= -6 the ratio is evaluated directly
// through erfc. For a < -6 both N and Phi underflow long before the ratio
// does, so lambda is computed from the tail of the Laplace continued
// fraction for the Mills ratio, which yields lambda itself (not a + R) and
// therefore costs no cancellation.

const MILLS_CF_DEPTH: usize = 120;

fn tg_lambda(a: f64) -> f64 {
    if a < -6.0 {
        mills_cf_tail(-a)
    } else {
        a + tg_ratio_direct(a)
    }
}

fn tg_lambda_deriv(a: f64) -> f64 {
    // variance of the truncated normal: 1 - a*R - R^2 with R = lambda - a
    if a < -6.0 {
        let t = -a;
        let l = mills_cf_tail(t);
        (1.0 - t * l) - l * l
    } else {
        let r = tg_ratio_direct(a);
        1.0 - a * r - r * r
    }
}

/// `N(a)/Φ(a)` via `Φ(a) = erfc(−a/√2)/2`; safe for `a ≥ −6`.
fn tg_ratio_direct(a: f64) -> f64 {
    let phi = 0.5 * libm::erfc(-a / std::f64::consts::SQRT_2);
    let n = (-0.5 * a * a).exp() / (2.0 * std::f64::consts::PI).sqrt();
    n / phi
}

/// Evaluates `1/(t + 2/(t + 3/(t + ...)))`, the tail of the Mills-ratio
/// continued fraction; equals `λ(−t)` for the truncated Gaussian. Full
/// double precision for `t ≥ 6`.
fn mills_cf_tail(t: f64) -> f64 {
    let mut acc = 0.0;
    for k in (1..=MILLS_CF_DEPTH).rev() {
        acc = k as f64 / (t + acc);
    }
    acc
}

// ---------------------------------------------------------------------------
// Safeguarded Newton inverse for a strictly increasing activation.

fn invert_monotone(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    target: f64,
    guess: f64,
) -> f64 {
    // bracket the root by doubling outward from the guess
    let mut lo = guess - 1.0;
    let mut hi = guess + 1.0;
    let mut step = 1.0;
    while f(lo) >= target {
        step *= 2.0;
        lo -= step;
    }
    step = 1.0;
    while f(hi) <= target {
        step *= 2.0;
        hi += step;
    }

    let tol = 1e-15 * target.abs().max(1.0);
    let mut x = guess.clamp(lo, hi);
    for _ in 0..200 {
        let fx = f(x) - target;
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        if fx.abs() <= tol {
            break;
        }
        let d = df(x);
        let newton = x - fx / d;
        let next = if d > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if next == x {
            break;
        }
        x = next;
    }
    x
}
