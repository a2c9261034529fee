use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[allow(dead_code)]
pub fn randn_matrix(rng: &mut ChaCha8Rng, n: usize, m: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, m, |_, _| rng.sample(StandardNormal))
}

#[allow(dead_code)]
pub fn randn_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Circular biased autocorrelation `r_k = (1/n) Σ_t s_t s_{(t+k) mod n}`.
#[allow(dead_code)]
pub fn circular_acf(s: &[f64], lags: usize) -> Vec<f64> {
    let n = s.len();
    (0..=lags)
        .map(|k| (0..n).map(|t| s[t] * s[(t + k) % n]).sum::<f64>() / n as f64)
        .collect()
}
