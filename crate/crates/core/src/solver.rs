//! Damped-Newton solver for the moment-matching equations.
//!
//! The core problem: find `h` such that `Wᵀ λ(W h) = z`, then report the
//! reconstruction `x̄ = λ(W h)`. The Jacobian `Wᵀ diag(λ'(W h)) W` is
//! symmetric positive definite (λ' > 0, W full rank), so each step is a
//! Cholesky solve followed by a backtracking line search that keeps every
//! element inside its activation domain and decreases ‖F‖₂.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linmap::{LinearMap, NullBasis};
use crate::priors::{ElementModel, PriorKind};

/// Natural-coordinate norm beyond which a stagnating residual is taken as
/// evidence that `z` lies outside the feasible set.
const DIVERGENCE_H_NORM: f64 = 1e8;

/// A feature map, one data model per input element, and the observed
/// feature vector.
#[derive(Debug, Clone)]
pub struct InversionProblem {
    map: LinearMap,
    models: Vec<ElementModel>,
    z: DVector<f64>,
    homogeneous: Option<PriorKind>,
    ones_residual: Option<f64>,
}

impl InversionProblem {
    /// Validates shapes. For homogeneous exponential models the projection
    /// residual of the all-ones vector onto the column space of `W` is
    /// recorded (see [`ones_colspace_residual`](Self::ones_colspace_residual));
    /// the entropy of such problems is bounded only when that residual
    /// vanishes, but the moment-matching solve itself needs no such
    /// assumption, so construction does not reject.
    pub fn new(map: LinearMap, models: Vec<ElementModel>, z: DVector<f64>) -> Result<Self> {
        if models.len() != map.n() {
            return Err(Error::Shape(format!(
                "expected {} element models, got {}",
                map.n(),
                models.len()
            )));
        }
        if z.len() != map.m_feat() {
            return Err(Error::Shape(format!(
                "expected a feature vector of length {}, got {}",
                map.m_feat(),
                z.len()
            )));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("feature vector contains a non-finite entry".into()));
        }
        let first = models[0].kind;
        let homogeneous = models.iter().all(|m| m.kind == first).then_some(first);

        let ones_residual = if homogeneous == Some(PriorKind::Exponential) {
            let w = map.w();
            let n = map.n();
            let ones = DVector::from_element(n, 1.0);
            let gram = w.tr_mul(w);
            let chol = Cholesky::new(gram).ok_or_else(|| {
                Error::Numerical("Gram matrix of W is not positive definite".into())
            })?;
            let u = chol.solve(&w.tr_mul(&ones));
            Some((&ones - w * u).norm())
        } else {
            None
        };
        Ok(InversionProblem { map, models, z, homogeneous, ones_residual })
    }

    /// `‖(I − W(WᵀW)⁻¹Wᵀ)·1‖` for homogeneous exponential problems, `None`
    /// otherwise. The optimality condition on `1/x̄` and the entropy bound
    /// hold only when this is ≤ 1e−8·√N.
    pub fn ones_colspace_residual(&self) -> Option<f64> {
        self.ones_residual
    }

    pub fn map(&self) -> &LinearMap {
        &self.map
    }

    pub fn models(&self) -> &[ElementModel] {
        &self.models
    }

    pub fn z(&self) -> &DVector<f64> {
        &self.z
    }

    pub fn n(&self) -> usize {
        self.map.n()
    }

    /// The common prior kind, when every element shares one.
    pub fn homogeneous_kind(&self) -> Option<PriorKind> {
        self.homogeneous
    }

    fn all_in_domain(&self, alpha: &DVector<f64>) -> bool {
        if let Some(kind) = self.homogeneous {
            let model = ElementModel::new(kind);
            alpha.iter().all(|&a| model.alpha_in_domain(a))
        } else {
            self.models
                .iter()
                .zip(alpha.iter())
                .all(|(m, &a)| m.alpha_in_domain(a))
        }
    }

    fn first_domain_violation(&self, alpha: &DVector<f64>) -> Option<usize> {
        self.models
            .iter()
            .zip(alpha.iter())
            .position(|(m, &a)| !m.alpha_in_domain(a))
    }

    fn lambda_vec(&self, alpha: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(alpha.len());
        if let Some(kind) = self.homogeneous {
            let model = ElementModel::new(kind);
            for (o, &a) in out.iter_mut().zip(alpha.iter()) {
                *o = model.lambda_raw(a);
            }
        } else {
            for ((o, m), &a) in out.iter_mut().zip(&self.models).zip(alpha.iter()) {
                *o = m.lambda_raw(a);
            }
        }
        out
    }

    fn lambda_deriv_vec(&self, alpha: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(alpha.len());
        if let Some(kind) = self.homogeneous {
            let model = ElementModel::new(kind);
            for (o, &a) in out.iter_mut().zip(alpha.iter()) {
                *o = model.lambda_deriv_raw(a);
            }
        } else {
            for ((o, m), &a) in out.iter_mut().zip(&self.models).zip(alpha.iter()) {
                *o = m.lambda_deriv_raw(a);
            }
        }
        out
    }
}

/// Newton iteration controls.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Convergence threshold on `‖Wᵀx̄ − z‖∞ / max(1, ‖z‖∞)`.
    pub tol: f64,
    pub max_iter: usize,
    /// Line-search step shrink factor.
    pub backtrack: f64,
    /// Smallest step the line search may take before declaring a stall.
    pub min_step: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions { tol: 1e-10, max_iter: 200, backtrack: 0.5, min_step: 1e-12 }
    }
}

/// Outcome of a solve: natural coordinates, reconstruction, and trace.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub h: DVector<f64>,
    pub x_bar: DVector<f64>,
    /// `‖Wᵀx̄ − z‖∞` at the final iterate.
    pub residual_inf: f64,
    /// Accepted Newton steps.
    pub iterations: usize,
    /// `‖F‖∞` at the start and after each accepted step.
    pub trace: Vec<f64>,
    pub converged: bool,
}

/// Residuals of the null-space optimality conditions, when they apply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarityReport {
    /// `‖Bᵀ(1/x̄)‖∞ / ‖1/x̄‖₂` for homogeneous exponential problems.
    pub der0_residual: Option<f64>,
    /// `‖Bᵀα‖∞ / max(1, ‖α‖₂)` for homogeneous doubly-bounded problems,
    /// with `αᵢ = λ⁻¹(x̄ᵢ)`.
    pub der1um_residual: Option<f64>,
}

/// `Wᵀ λ(W h) − z`; errors with the first element whose natural parameter
/// leaves its domain.
pub fn residual(problem: &InversionProblem, h: &DVector<f64>) -> Result<DVector<f64>> {
    if h.len() != problem.map.m_feat() {
        return Err(Error::Shape(format!(
            "expected h of length {}, got {}",
            problem.map.m_feat(),
            h.len()
        )));
    }
    let alpha = problem.map.w() * h;
    if let Some(i) = problem.first_domain_violation(&alpha) {
        return Err(Error::Domain {
            kind: problem.models[i].kind,
            alpha: alpha[i],
            element: Some(i),
        });
    }
    Ok(problem.map.w().tr_mul(&problem.lambda_vec(&alpha)) - &problem.z)
}

/// Closed-form reconstruction for unbounded Gaussian data:
/// `x̄ = W (WᵀW)⁻¹ z`, the least-squares inverse of the feature map.
pub fn solve_gaussian(map: &LinearMap, z: &DVector<f64>) -> Result<SolveResult> {
    if z.len() != map.m_feat() {
        return Err(Error::Shape(format!(
            "expected a feature vector of length {}, got {}",
            map.m_feat(),
            z.len()
        )));
    }
    let w = map.w();
    let sv = w.clone().svd(false, false).singular_values;
    let smax = sv.iter().cloned().fold(0.0f64, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = (smax / smin) * (smax / smin);
    if !cond.is_finite() || cond > 1e12 {
        return Err(Error::Numerical(format!(
            "WᵀW too ill-conditioned for the closed form (condition estimate {cond:.3e})"
        )));
    }
    let gram = w.tr_mul(w);
    let chol = Cholesky::new(gram.clone())
        .ok_or_else(|| Error::Numerical("Gram matrix of W is not positive definite".into()))?;
    let mut h = chol.solve(z);
    // one step of iterative refinement on the normal equations
    let r = z - &gram * &h;
    h += chol.solve(&r);
    let x_bar = w * &h;
    let residual_inf = (w.tr_mul(&x_bar) - z).amax();
    Ok(SolveResult {
        h,
        x_bar,
        residual_inf,
        iterations: 0,
        trace: vec![residual_inf],
        converged: true,
    })
}

/// Damped Newton iteration on `F(h) = Wᵀλ(Wh) − z` starting from `h = 0`
/// (every prior's domain contains 0, where `x̄` is the vector of prior
/// means).
pub fn solve(problem: &InversionProblem, opts: &SolveOptions) -> Result<SolveResult> {
    if opts.tol <= 0.0 || opts.max_iter < 1 {
        return Err(Error::Invalid("solve options need tol > 0 and max_iter >= 1".into()));
    }
    let w = problem.map.w();
    let z = &problem.z;
    let zscale = z.amax().max(1.0);
    let m = problem.map.m_feat();

    let mut h = DVector::zeros(m);
    let mut alpha = DVector::zeros(problem.n());
    let mut x_bar = problem.lambda_vec(&alpha);
    let mut f = w.tr_mul(&x_bar) - z;
    let mut f2 = f.norm();
    let mut trace = vec![f.amax()];
    let mut iterations = 0usize;

    loop {
        let rinf = f.amax();
        if !rinf.is_finite() {
            let i = f.iter().position(|v| !v.is_finite()).unwrap_or(0);
            return Err(Error::Domain {
                kind: problem.models[i.min(problem.n() - 1)].kind,
                alpha: f64::NAN,
                element: Some(i),
            });
        }
        if rinf <= opts.tol * zscale {
            return Ok(SolveResult {
                h,
                x_bar,
                residual_inf: rinf,
                iterations,
                trace,
                converged: true,
            });
        }
        let h_norm = h.norm();
        if h_norm > DIVERGENCE_H_NORM {
            let best = Box::new(SolveResult {
                h,
                x_bar,
                residual_inf: rinf,
                iterations,
                trace,
                converged: false,
            });
            return Err(Error::InfeasibleSuspected { h_norm, best });
        }
        if iterations >= opts.max_iter {
            return Err(Error::MaxIterations(Box::new(SolveResult {
                h,
                x_bar,
                residual_inf: rinf,
                iterations,
                trace,
                converged: false,
            })));
        }

        let d = problem.lambda_deriv_vec(&alpha);
        let jac = weighted_gram(w, &d);
        let delta = spd_solve(jac, -&f)?;

        let mut step = 1.0;
        let mut accepted = false;
        while step >= opts.min_step {
            let ht = &h + &delta * step;
            let at = w * &ht;
            if problem.all_in_domain(&at) {
                let xt = problem.lambda_vec(&at);
                let ft = w.tr_mul(&xt) - z;
                let ft2 = ft.norm();
                if ft2.is_finite() && ft2 < f2 {
                    h = ht;
                    alpha = at;
                    x_bar = xt;
                    f = ft;
                    f2 = ft2;
                    accepted = true;
                    break;
                }
            }
            step *= opts.backtrack;
        }
        if !accepted {
            // SPD Jacobian makes the Newton direction a descent direction for
            // the residual norm, so a stalled line search means either
            // machine-precision limits or an infeasible z
            let h_norm = h.norm();
            let best = Box::new(SolveResult {
                h,
                x_bar,
                residual_inf: rinf,
                iterations,
                trace,
                converged: false,
            });
            return Err(if h_norm > DIVERGENCE_H_NORM {
                Error::InfeasibleSuspected { h_norm, best }
            } else {
                Error::MaxIterations(best)
            });
        }
        iterations += 1;
        trace.push(f.amax());
    }
}

/// Optimality-condition residuals at a solution. Both conditions live in
/// the null space of `Wᵀ`: for homogeneous exponential data the element-wise
/// reciprocal of `x̄` must be orthogonal to the basis `B`; for homogeneous
/// doubly-bounded data the recovered natural parameters must be.
pub fn check_stationarity(
    problem: &InversionProblem,
    result: &SolveResult,
    basis: &NullBasis,
) -> Result<StationarityReport> {
    let n = problem.n();
    if basis.b().nrows() != n || result.x_bar.len() != n {
        return Err(Error::Shape(format!(
            "basis rows ({}) and reconstruction length ({}) must equal N = {n}",
            basis.b().nrows(),
            result.x_bar.len()
        )));
    }
    let mut report = StationarityReport { der0_residual: None, der1um_residual: None };
    match problem.homogeneous {
        Some(PriorKind::Exponential) => {
            let mut recip = DVector::zeros(n);
            for (o, &x) in recip.iter_mut().zip(result.x_bar.iter()) {
                if !(x > 0.0) {
                    return Err(Error::Range(format!(
                        "reconstruction element {x} is on the boundary of the positive range"
                    )));
                }
                *o = 1.0 / x;
            }
            let proj = basis.b().tr_mul(&recip);
            report.der0_residual = Some(proj.amax() / recip.norm());
        }
        Some(PriorKind::Ted) => {
            let model = ElementModel::new(PriorKind::Ted);
            let mut alpha = DVector::zeros(n);
            for (o, &x) in alpha.iter_mut().zip(result.x_bar.iter()) {
                *o = model.activation_inverse(x)?;
            }
            let proj = basis.b().tr_mul(&alpha);
            report.der1um_residual = Some(proj.amax() / alpha.norm().max(1.0));
        }
        _ => {}
    }
    Ok(report)
}

/// `Wᵀ diag(d) W`.
fn weighted_gram(w: &DMatrix<f64>, d: &DVector<f64>) -> DMatrix<f64> {
    let mut wd = w.clone();
    for (i, mut row) in wd.row_iter_mut().enumerate() {
        row *= d[i];
    }
    w.tr_mul(&wd)
}

/// Cholesky solve with an escalating ridge for the rare case where extreme
/// activation derivatives push the Gram matrix to numerical semi-definiteness.
fn spd_solve(jac: DMatrix<f64>, rhs: DVector<f64>) -> Result<DVector<f64>> {
    let scale = jac.diagonal().amax().max(f64::MIN_POSITIVE);
    let mut ridge = 0.0f64;
    for _ in 0..8 {
        let trial = if ridge == 0.0 {
            jac.clone()
        } else {
            let mut t = jac.clone();
            for i in 0..t.nrows() {
                t[(i, i)] += ridge;
            }
            t
        };
        if let Some(chol) = Cholesky::new(trial) {
            return Ok(chol.solve(&rhs));
        }
        ridge = if ridge == 0.0 { 1e-14 * scale } else { ridge * 100.0 };
    }
    Err(Error::Numerical("Newton system is not positive definite".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linmap::dense_map;
    use crate::priors::entropy_measures;
    use approx::assert_relative_eq;

    fn homog(kind: PriorKind, n: usize) -> Vec<ElementModel> {
        vec![ElementModel::new(kind); n]
    }

    #[test]
    fn ted_symmetric_average() {
        let map = dense_map(DMatrix::from_column_slice(2, 1, &[1.0, 1.0])).unwrap();
        let p = InversionProblem::new(map, homog(PriorKind::Ted, 2), DVector::from_vec(vec![1.0]))
            .unwrap();
        let r = solve(&p, &SolveOptions::default()).unwrap();
        assert!(r.converged);
        assert_relative_eq!(r.x_bar[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(r.x_bar[1], 0.5, epsilon = 1e-12);
        assert!(r.h[0].abs() < 1e-10);
    }

    #[test]
    fn residual_at_zero_is_prior_means() {
        // homogeneous exponential: unit prior means make h = 0 exact for z = 3
        let map = dense_map(DMatrix::from_column_slice(2, 1, &[1.0, 2.0])).unwrap();
        let p = InversionProblem::new(
            map,
            homog(PriorKind::Exponential, 2),
            DVector::from_vec(vec![3.0]),
        )
        .unwrap();
        let f = residual(&p, &DVector::zeros(1)).unwrap();
        assert!(f[0].abs() < 1e-15);
        // ones do not lie in colspace of (1,2); the residual is recorded
        assert!(p.ones_colspace_residual().unwrap() > 0.1);

        // mixed models: prior means are exp -> 1 and ted -> 0.5
        let map = dense_map(DMatrix::from_column_slice(2, 1, &[1.0, 2.0])).unwrap();
        let models = vec![
            ElementModel::new(PriorKind::Exponential),
            ElementModel::new(PriorKind::Ted),
        ];
        let p = InversionProblem::new(map, models, DVector::from_vec(vec![3.0])).unwrap();
        let f = residual(&p, &DVector::zeros(1)).unwrap();
        assert_relative_eq!(f[0], 1.0 * 1.0 + 2.0 * 0.5 - 3.0, epsilon = 1e-14);
        assert!(p.ones_colspace_residual().is_none());
    }

    #[test]
    fn exponential_exact_at_zero() {
        // W = (1,1)^T so ones lie in the column space; z = 2 is met exactly
        // by the prior means, h = 0
        let map = dense_map(DMatrix::from_column_slice(2, 1, &[1.0, 1.0])).unwrap();
        let p = InversionProblem::new(
            map,
            homog(PriorKind::Exponential, 2),
            DVector::from_vec(vec![2.0]),
        )
        .unwrap();
        let r = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.converged);
    }

    #[test]
    fn residual_domain_error_names_element() {
        let map = dense_map(DMatrix::from_column_slice(2, 1, &[0.1, 2.0])).unwrap();
        let models = vec![
            ElementModel::new(PriorKind::Ted),
            ElementModel::new(PriorKind::Exponential),
        ];
        let p = InversionProblem::new(map, models, DVector::from_vec(vec![1.0])).unwrap();
        // h = 1 puts alpha_1 = 2 >= 1 out of the exponential domain
        let err = residual(&p, &DVector::from_vec(vec![1.0])).unwrap_err();
        match err {
            Error::Domain { element: Some(1), kind: PriorKind::Exponential, .. } => {}
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn gaussian_matches_closed_form() {
        let mut vals = Vec::new();
        let mut state = 1u64;
        for _ in 0..30 {
            // small deterministic LCG keeps this test self-contained
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            vals.push(((state >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0);
        }
        let w = DMatrix::from_vec(10, 3, vals);
        let map = dense_map(w).unwrap();
        let z = DVector::from_vec(vec![0.3, -1.2, 0.7]);
        let closed = solve_gaussian(&map, &z).unwrap();
        assert_eq!(closed.iterations, 0);
        assert!(closed.residual_inf <= 1e-10 * z.amax().max(1.0));

        let map2 = map.clone();
        let p = InversionProblem::new(map2, homog(PriorKind::Gaussian, 10), z).unwrap();
        let r = solve(&p, &SolveOptions::default()).unwrap();
        assert_eq!(r.iterations, 1);
        for i in 0..10 {
            assert_relative_eq!(r.x_bar[i], closed.x_bar[i], epsilon = 1e-10);
        }
    }

    #[test]
    fn infeasible_ted_reports_divergence() {
        // z exceeds the largest feature value reachable from [0,1]^2
        let map = dense_map(DMatrix::from_column_slice(2, 1, &[1.0, 2.0])).unwrap();
        let p =
            InversionProblem::new(map, homog(PriorKind::Ted, 2), DVector::from_vec(vec![3.5]))
                .unwrap();
        match solve(&p, &SolveOptions::default()) {
            Err(Error::InfeasibleSuspected { h_norm, .. }) => assert!(h_norm > 1e8),
            other => panic!("expected infeasibility, got {other:?}"),
        }
    }

    #[test]
    fn entropy_of_converged_reconstruction() {
        let map = dense_map(DMatrix::from_column_slice(3, 1, &[1.0, 1.0, 1.0])).unwrap();
        let p = InversionProblem::new(
            map,
            homog(PriorKind::Exponential, 3),
            DVector::from_vec(vec![4.5]),
        )
        .unwrap();
        let r = solve(&p, &SolveOptions::default()).unwrap();
        let e = entropy_measures(r.x_bar.as_slice()).unwrap();
        assert_relative_eq!(e.h_e, 3.0 + e.h_s, epsilon = 1e-12);
    }
}
