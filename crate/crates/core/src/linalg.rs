//! Small dense linear-algebra helpers.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::oracle::Point;

pub fn random_gaussian_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Point {
    Point::from_iterator(dim, (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Estimates the operator norm `max |λ|` of a symmetric linear map by power iteration.
///
/// Returns the last `||A v||` with `||v|| = 1`, which never exceeds the true norm.
pub fn power_iteration<F, R>(apply: F, dim: usize, max_iters: usize, tol: f64, rng: &mut R) -> f64
where
    F: Fn(&Point) -> Point,
    R: Rng + ?Sized,
{
    let mut v = random_gaussian_vector(dim, rng);
    let n = v.norm();
    if n == 0.0 {
        return 0.0;
    }
    v /= n;
    let mut estimate = 0.0_f64;
    for _ in 0..max_iters {
        let av = apply(&v);
        let norm = av.norm();
        if norm == 0.0 || !norm.is_finite() {
            return if norm.is_finite() { 0.0 } else { f64::INFINITY };
        }
        let converged = (norm - estimate).abs() <= tol * norm.max(1e-300);
        estimate = estimate.max(norm);
        v = av / norm;
        if converged {
            break;
        }
    }
    estimate
}

/// Eigenvalues of a symmetric matrix in ascending order.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    let mut ev: Vec<f64> = SymmetricEigen::new(m.clone()).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

/// Random orthogonal matrix from the QR factorization of a Gaussian matrix.
pub fn random_orthogonal<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(dim, dim, |_, _| rng.sample::<f64, _>(StandardNormal));
    g.qr().q()
}

/// `Q diag(eigs) Qᵀ`, symmetrized to remove rounding asymmetry.
pub fn symmetric_from_spectrum(q: &DMatrix<f64>, eigs: &[f64]) -> DMatrix<f64> {
    let d = DMatrix::from_diagonal(&Point::from_vec(eigs.to_vec()));
    let m = q * d * q.transpose();
    (&m + m.transpose()) * 0.5
}

/// `count` values geometrically spaced from `lo` to `hi` inclusive.
pub fn geometric_spectrum(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let ratio = (hi / lo).ln() / (count - 1) as f64;
    (0..count)
        .map(|i| {
            if i == count - 1 {
                hi
            } else {
                lo * (ratio * i as f64).exp()
            }
        })
        .collect()
}
