//! Seeded generation for randomized problem instances.
//!
//! Every random instance is drawn from `ChaCha8Rng::seed_from_u64(seed)`, so a
//! seed recorded in a config or report reproduces the instance bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{dot, Matrix};
use crate::Scalar;

pub type ProblemRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> ProblemRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_vec(rng: &mut ProblemRng, len: usize) -> Vec<f64> {
    (0..len).map(|_| StandardNormal.sample(rng)).collect()
}

/// `count` orthonormal vectors of length `len` (Gram–Schmidt on Gaussian draws).
pub fn orthonormal_columns(rng: &mut ProblemRng, len: usize, count: usize) -> Vec<Vec<f64>> {
    assert!(
        count <= len,
        "cannot draw {count} orthonormal vectors in dimension {len}"
    );
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(count);
    while basis.len() < count {
        let mut v = gaussian_vec(rng, len);
        // two passes of classical Gram–Schmidt keep orthogonality near machine precision
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&v, b);
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= c * bi;
                }
            }
        }
        let n = dot(&v, &v).sqrt();
        if n > 1e-8 {
            basis.push(v.into_iter().map(|x| x / n).collect());
        }
    }
    basis
}

/// `Q diag(eigs) Qᵀ` for a random orthogonal `Q`.
pub fn random_symmetric_with_spectrum<T: Scalar>(rng: &mut ProblemRng, eigs: &[f64]) -> Matrix<T> {
    let n = eigs.len();
    let q = orthonormal_columns(rng, n, n);
    let mut m = Matrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let v: f64 = (0..n).map(|c| q[c][i] * eigs[c] * q[c][j]).sum();
            m[(i, j)] = T::lit(v);
            m[(j, i)] = T::lit(v);
        }
    }
    m
}

/// `count` points log-spaced from `hi` down to `lo` (inclusive).
pub fn log_spaced(hi: f64, lo: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![hi];
    }
    let (a, b) = (hi.ln(), lo.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orthonormal_columns_are_orthonormal() {
        let mut rng = seeded(3);
        let q = orthonormal_columns(&mut rng, 6, 4);
        for i in 0..4 {
            for j in 0..4 {
                let d = dot(&q[i], &q[j]);
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((d - e).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn same_seed_same_draws() {
        let a = gaussian_vec(&mut seeded(11), 5);
        let b = gaussian_vec(&mut seeded(11), 5);
        assert_eq!(a, b);
    }

    #[test]
    fn log_spaced_endpoints() {
        let v = log_spaced(1.0, 1e-4, 5);
        assert!((v[0] - 1.0).abs() < 1e-15);
        assert!((v[4] - 1e-4).abs() < 1e-18);
        assert!((v[2] - 1e-2).abs() < 1e-15);
    }
}
