use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data_io::{Dataset, SparseMatrix};
use crate::error::{check_dims, Error, Result};
use crate::linalg::{geometric_spectrum, random_gaussian_vector, random_orthogonal, symmetric_eigenvalues};
use crate::oracle::{FunctionOracle, NoiseModel, Point, ProblemInstance, ReferenceSolution};

use super::Quadratic;

/// `(1/2n) Σ (x_iᵀw - y_i)² + (reg/2) ||w||²`.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    features: Arc<SparseMatrix>,
    targets: Vec<f64>,
    reg: f64,
}

impl LeastSquares {
    pub fn new(features: Arc<SparseMatrix>, targets: Vec<f64>, reg: f64) -> Result<Self> {
        check_dims(features.nrows(), targets.len())?;
        if features.nrows() == 0 {
            return Err(Error::Contract("least squares needs at least one sample".into()));
        }
        Ok(Self { features, targets, reg })
    }

    fn residual(&self, i: usize, w: &Point) -> f64 {
        self.features.row_dot(i, w) - self.targets[i]
    }
}

impl FunctionOracle for LeastSquares {
    fn dim(&self) -> usize {
        self.features.ncols()
    }
    fn value(&self, w: &Point) -> f64 {
        let n = self.features.nrows();
        let sq: f64 = (0..n).map(|i| self.residual(i, w).powi(2)).sum();
        sq / (2.0 * n as f64) + 0.5 * self.reg * w.norm_squared()
    }
    fn gradient(&self, w: &Point) -> Point {
        let n = self.features.nrows();
        let r: Vec<f64> = (0..n).map(|i| self.residual(i, w) / n as f64).collect();
        self.features.tmatvec(&r) + w * self.reg
    }
    fn hvp(&self, _w: &Point, v: &Point) -> Option<Point> {
        let n = self.features.nrows() as f64;
        let xv: Vec<f64> = self.features.matvec(v).into_iter().map(|z| z / n).collect();
        Some(self.features.tmatvec(&xv) + v * self.reg)
    }
    fn num_terms(&self) -> Option<usize> {
        Some(self.features.nrows())
    }
    fn batch_gradient(&self, w: &Point, indices: &[usize]) -> Option<Point> {
        let mut g = w * self.reg;
        let scale = 1.0 / indices.len() as f64;
        for &i in indices {
            self.features.add_row_scaled(i, scale * self.residual(i, w), &mut g);
        }
        Some(g)
    }
}

/// Least squares with the label-free covariance proxy `½ wᵀ(XᵀX/n)w + (reg/2)||w||²`.
///
/// Noise defaults to single-sample minibatches with σ² estimated at `w = 0`; the
/// reference minimizer comes from the normal equations.
pub fn least_squares_pair(data: &Dataset, reg_mu: f64) -> Result<ProblemInstance> {
    if !(reg_mu >= 0.0 && reg_mu.is_finite()) {
        return Err(Error::Config(format!("reg_mu must be finite and >= 0, got {reg_mu}")));
    }
    let n = data.n() as f64;
    let d = data.d();
    let objective = Arc::new(LeastSquares::new(data.features.clone(), data.labels.clone(), reg_mu)?);
    let p = data.features.gram() / n + DMatrix::identity(d, d) * reg_mu;
    let ev = symmetric_eigenvalues(&p);
    let (lmin, lmax) = (ev[0].max(0.0), ev[d - 1]);
    let proxy = Arc::new(Quadratic::new(p.clone(), Point::zeros(d), 0.0)?);
    let w0 = Point::zeros(d);
    let sigma2 = crate::oracle::estimate_minibatch_variance(objective.as_ref(), &w0, 1, 2000, 0)?;
    let mut inst = ProblemInstance::new(
        objective.clone(),
        proxy,
        NoiseModel::Minibatch { batch_size: 1 },
        sigma2,
        0.0,
        lmin,
        lmax,
    )?
    .with_proxy_hessian(p.clone());
    if lmin > 0.0 {
        let rhs = data.features.tmatvec(&data.labels) / n;
        if let Some(chol) = p.cholesky() {
            let w_star = chol.solve(&rhs);
            match ReferenceSolution::certify(objective.as_ref(), &w_star) {
                Ok(r) => inst = inst.with_reference(r),
                Err(e) => log::debug!("normal-equation solution not certified: {e}"),
            }
        }
    }
    Ok(inst)
}

/// Noiseless regression data with `XᵀX/n` having a geometric spectrum on
/// `[1/condition, 1]`, so `L* = 0` when `reg = 0`. Requires `n >= d`.
pub fn synthetic_regression(n: usize, d: usize, condition: f64, seed: u64) -> Result<Dataset> {
    if n < d || d == 0 || !(condition >= 1.0) {
        return Err(Error::Config(format!(
            "synthetic regression needs n >= d >= 1 and condition >= 1 (n={n}, d={d}, condition={condition})"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let u = random_orthogonal(n, &mut rng).columns(0, d).into_owned();
    let v = random_orthogonal(d, &mut rng);
    let eigs = geometric_spectrum(1.0 / condition, 1.0, d);
    let s = DMatrix::from_diagonal(&Point::from_iterator(d, eigs.iter().map(|e| (e * n as f64).sqrt())));
    let x = u * s * v.transpose();
    let w_true = random_gaussian_vector(d, &mut rng);
    let y: Vec<f64> = (&x * &w_true).iter().copied().collect();
    Dataset::new(SparseMatrix::from_dense(&x), y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::finite_diff_gradient;

    #[test]
    fn one_sample_hand_case() {
        let data = Dataset::new(SparseMatrix::from_dense(&DMatrix::from_element(1, 1, 2.0)), vec![4.0]).unwrap();
        let inst = least_squares_pair(&data, 0.0).unwrap();
        let w = Point::from_vec(vec![0.5]);
        assert_eq!(inst.objective.value(&w), 0.5 * (1.0f64 - 4.0).powi(2));
        assert_eq!(inst.proxy.value(&w), 2.0 * 0.25);
        assert_eq!(inst.delta, 0.0);
        assert_eq!(inst.h_proxy, 4.0);
        assert_eq!(inst.reference.as_ref().unwrap().w_star, vec![2.0]);
    }

    #[test]
    fn synthetic_spectrum_and_gradient() {
        let data = synthetic_regression(60, 20, 1e4, 3).unwrap();
        let inst = least_squares_pair(&data, 0.0).unwrap();
        assert!((inst.mu - 1e-4).abs() < 1e-10, "{}", inst.mu);
        assert!((inst.h_proxy - 1.0).abs() < 1e-10);
        assert!(inst.f_star().unwrap().abs() < 1e-20);
        let w = Point::from_fn(20, |i, _| (i as f64).sin());
        let fd = finite_diff_gradient(inst.objective.as_ref(), &w, 1e-5).unwrap();
        let g = inst.objective.gradient(&w);
        assert!((fd - &g).norm() <= 1e-5 * g.norm());
    }

    #[test]
    fn per_sample_gradients_average_to_the_full_gradient() {
        let data = synthetic_regression(30, 5, 10.0, 1).unwrap();
        let ls = LeastSquares::new(data.features.clone(), data.labels.clone(), 0.1).unwrap();
        let w = Point::from_vec(vec![0.3, -0.1, 2.0, 0.0, 1.0]);
        let mut mean = Point::zeros(5);
        for i in 0..30 {
            mean += ls.batch_gradient(&w, &[i]).unwrap() / 30.0;
        }
        assert!((mean - ls.gradient(&w)).amax() < 1e-12);
    }
}
