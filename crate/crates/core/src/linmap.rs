//! Construction and validation of the feature maps `W`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// How a [`LinearMap`] was constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MapSource {
    Dense,
    Dct2 { side: usize, keep: usize },
    Acf { nfft: usize, order: usize },
}

/// A validated full-rank N×M feature map with M < N.
#[derive(Debug, Clone)]
pub struct LinearMap {
    w: DMatrix<f64>,
    source: MapSource,
}

impl LinearMap {
    pub fn w(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// Number of input dimensions N.
    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    /// Number of features M.
    pub fn m_feat(&self) -> usize {
        self.w.ncols()
    }

    pub fn source(&self) -> MapSource {
        self.source
    }

    /// `z = Wᵀ x`.
    pub fn features(&self, x: &DVector<f64>) -> DVector<f64> {
        self.w.tr_mul(x)
    }
}

/// Orthonormal basis of the orthogonal complement of the columns of `W`.
#[derive(Debug, Clone)]
pub struct NullBasis {
    b: DMatrix<f64>,
}

impl NullBasis {
    /// The N×(N−M) basis matrix.
    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }
}

/// Wraps a user-supplied dense matrix after shape, finiteness, and rank
/// validation.
pub fn dense_map(w: DMatrix<f64>) -> Result<LinearMap> {
    validate(&w)?;
    Ok(LinearMap { w, source: MapSource::Dense })
}

/// Feature map whose columns are the orthonormal 2-D DCT-II basis images for
/// the lowest `keep`×`keep` frequency pairs of a `side`×`side` image, so
/// `Wᵀx` is the retained block of DCT coefficients and `WᵀW = I`.
///
/// Pixels are indexed row-major (`i = row·side + col`); features are indexed
/// `j = p·keep + q` over frequency pairs `(p, q)`.
pub fn dct2_map(side: usize, keep: usize) -> Result<LinearMap> {
    if side < 2 || keep < 1 || keep >= side {
        return Err(Error::Shape(format!(
            "dct2 map needs 1 <= keep < side, got side = {side}, keep = {keep}"
        )));
    }
    // 1-D orthonormal DCT-II rows: c[p][r] = s_p cos(pi (2r+1) p / (2 side))
    let mut c = vec![vec![0.0f64; side]; keep];
    for (p, row) in c.iter_mut().enumerate() {
        let scale = if p == 0 {
            (1.0 / side as f64).sqrt()
        } else {
            (2.0 / side as f64).sqrt()
        };
        for (r, v) in row.iter_mut().enumerate() {
            *v = scale
                * (std::f64::consts::PI * (2.0 * r as f64 + 1.0) * p as f64 / (2.0 * side as f64))
                    .cos();
        }
    }
    let n = side * side;
    let m = keep * keep;
    let mut w = DMatrix::zeros(n, m);
    for p in 0..keep {
        for q in 0..keep {
            let j = p * keep + q;
            for r in 0..side {
                for col in 0..side {
                    w[(r * side + col, j)] = c[p][r] * c[q][col];
                }
            }
        }
    }
    validate(&w)?;
    Ok(LinearMap { w, source: MapSource::Dct2 { side, keep } })
}

/// Feature map turning the one-sided magnitude-squared DFT bins of a
/// length-`nfft` real signal into its circular autocorrelation lags
/// `0..=order`:
///
/// `W[i][k] = f(i)/nfft² · cos(2π i k / nfft)`
///
/// with `f = 1` at the DC and Nyquist bins (i = 0 and i = N−1) and `f = 2`
/// at interior bins, which fold the two-sided spectrum correctly. N is
/// `nfft/2 + 1`.
pub fn acf_map(nfft: usize, order: usize) -> Result<LinearMap> {
    if nfft < 4 || nfft % 2 != 0 {
        return Err(Error::Shape(format!("acf map needs an even nfft >= 4, got {nfft}")));
    }
    let n = nfft / 2 + 1;
    if order + 1 >= n {
        return Err(Error::Shape(format!(
            "acf map needs order + 1 < nfft/2 + 1, got order = {order}, nfft = {nfft}"
        )));
    }
    let norm = (nfft * nfft) as f64;
    let mut w = DMatrix::zeros(n, order + 1);
    for i in 0..n {
        let f = if i == 0 || i == n - 1 { 1.0 } else { 2.0 };
        for k in 0..=order {
            let ang = 2.0 * std::f64::consts::PI * (i * k) as f64 / nfft as f64;
            w[(i, k)] = f / norm * ang.cos();
        }
    }
    validate(&w)?;
    Ok(LinearMap { w, source: MapSource::Acf { nfft, order } })
}

/// Orthonormal basis of the complement of the column space of `W`, built by
/// completing the thin-QR factor with pivoted Gram-Schmidt over the identity
/// (re-orthogonalized, so `BᵀB = I` and `WᵀB = 0` hold to rounding).
pub fn nullspace_basis(map: &LinearMap) -> Result<NullBasis> {
    let n = map.n();
    let m = map.m_feat();
    let q = map.w().clone().qr().q();

    // residuals of the identity columns after projecting off colspace(Q)
    let mut cand: Vec<DVector<f64>> = (0..n)
        .map(|j| {
            let mut r = DVector::zeros(n);
            r[j] = 1.0;
            for c in 0..m {
                let qc = q.column(c);
                let d = qc.dot(&r);
                r.axpy(-d, &qc, 1.0);
            }
            r
        })
        .collect();

    let mut used = vec![false; n];
    let mut b = DMatrix::zeros(n, n - m);
    let mut accepted: Vec<DVector<f64>> = Vec::with_capacity(n - m);
    for col in 0..(n - m) {
        let (jbest, _) = cand
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, r)| (j, r.norm()))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("candidates remain while col < n - m");
        let mut v = cand[jbest].clone();
        // second orthogonalization pass against everything accepted so far
        for c in 0..m {
            let qc = q.column(c);
            let d = qc.dot(&v);
            v.axpy(-d, &qc, 1.0);
        }
        for a in &accepted {
            let d = a.dot(&v);
            v.axpy(-d, a, 1.0);
        }
        let nv = v.norm();
        if nv < 1e-8 {
            return Err(Error::Numerical(
                "null-space completion lost rank; W may be ill-conditioned".into(),
            ));
        }
        v /= nv;
        b.set_column(col, &v);
        used[jbest] = true;
        for (j, r) in cand.iter_mut().enumerate() {
            if !used[j] {
                let d = v.dot(r);
                r.axpy(-d, &v, 1.0);
            }
        }
        accepted.push(v);
    }
    Ok(NullBasis { b })
}

/// Shared constructor validation: N > M >= 1, finite entries, and numerical
/// rank M (smallest singular value at least 1e-10 of the largest).
fn validate(w: &DMatrix<f64>) -> Result<()> {
    let (n, m) = w.shape();
    if m < 1 || n <= m {
        return Err(Error::Shape(format!(
            "feature map must be N x M with N > M >= 1, got {n} x {m}"
        )));
    }
    if w.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("feature map contains a non-finite entry".into()));
    }
    let sv = w.clone().svd(false, false).singular_values;
    let largest = sv.iter().cloned().fold(0.0f64, f64::max);
    let smallest = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    // negated comparison so NaN singular values also fail validation
    if !(smallest >= 1e-10 * largest) {
        return Err(Error::Rank { smallest, largest });
    }
    Ok(())
}
