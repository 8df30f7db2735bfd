//! Oracle abstractions shared by every solver in the crate.
//!
//! A [`FunctionOracle`] gives deterministic value / gradient access to a
//! differentiable function on `R^d`, optionally Hessian-vector products and
//! finite-sum (minibatch) gradients. The objective `L` is only ever queried
//! through a [`StochasticGradientSource`], which owns the gradient budget.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};

/// A dense parameter vector `w`.
pub type Point = DVector<f64>;

/// Deterministic first-order (and optionally second-order) access to a function.
pub trait FunctionOracle: Send + Sync + fmt::Debug {
    fn dim(&self) -> usize;

    fn value(&self, w: &Point) -> f64;

    fn gradient(&self, w: &Point) -> Point;

    /// Hessian-vector product `∇²f(w) v`, when the oracle supports it.
    fn hvp(&self, _w: &Point, _v: &Point) -> Option<Point> {
        None
    }

    /// Number of components when `f = (1/n) Σ f_i`.
    fn num_terms(&self) -> Option<usize> {
        None
    }

    /// Average gradient of the components listed in `indices` (repeats allowed).
    fn batch_gradient(&self, _w: &Point, _indices: &[usize]) -> Option<Point> {
        None
    }
}

pub type SharedOracle = Arc<dyn FunctionOracle>;

/// `f ≡ 0`.
#[derive(Debug, Clone)]
pub struct ZeroFunction {
    dim: usize,
}

impl ZeroFunction {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }
}

impl FunctionOracle for ZeroFunction {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _w: &Point) -> f64 {
        0.0
    }
    fn gradient(&self, _w: &Point) -> Point {
        Point::zeros(self.dim)
    }
    fn hvp(&self, _w: &Point, _v: &Point) -> Option<Point> {
        Some(Point::zeros(self.dim))
    }
}

/// `f - g`; used for the similarity gap `h = L - F̂`.
#[derive(Debug, Clone)]
pub struct Difference {
    pub minuend: SharedOracle,
    pub subtrahend: SharedOracle,
}

impl Difference {
    pub fn new(minuend: SharedOracle, subtrahend: SharedOracle) -> Result<Self> {
        check_dims(minuend.dim(), subtrahend.dim())?;
        Ok(Self { minuend, subtrahend })
    }
}

impl FunctionOracle for Difference {
    fn dim(&self) -> usize {
        self.minuend.dim()
    }
    fn value(&self, w: &Point) -> f64 {
        self.minuend.value(w) - self.subtrahend.value(w)
    }
    fn gradient(&self, w: &Point) -> Point {
        self.minuend.gradient(w) - self.subtrahend.gradient(w)
    }
    fn hvp(&self, w: &Point, v: &Point) -> Option<Point> {
        Some(self.minuend.hvp(w, v)? - self.subtrahend.hvp(w, v)?)
    }
}

/// `f(w) + (mu/2) ||w - center||²`.
///
/// The proximal term is added to every component so minibatch gradients stay
/// unbiased for the regularized function.
#[derive(Debug, Clone)]
pub struct ProximallyRegularized {
    pub inner: SharedOracle,
    pub mu: f64,
    pub center: Point,
}

impl FunctionOracle for ProximallyRegularized {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, w: &Point) -> f64 {
        self.inner.value(w) + 0.5 * self.mu * (w - &self.center).norm_squared()
    }
    fn gradient(&self, w: &Point) -> Point {
        self.inner.gradient(w) + (w - &self.center) * self.mu
    }
    fn hvp(&self, w: &Point, v: &Point) -> Option<Point> {
        Some(self.inner.hvp(w, v)? + v * self.mu)
    }
    fn num_terms(&self) -> Option<usize> {
        self.inner.num_terms()
    }
    fn batch_gradient(&self, w: &Point, indices: &[usize]) -> Option<Point> {
        Some(self.inner.batch_gradient(w, indices)? + (w - &self.center) * self.mu)
    }
}

/// `Σ_i (u_i - v_i)²`.
pub fn squared_distance(u: &Point, v: &Point) -> Result<f64> {
    check_dims(u.len(), v.len())?;
    Ok(u.iter().zip(v.iter()).map(|(a, b)| (a - b) * (a - b)).sum())
}

pub(crate) fn ensure_finite(w: &Point, context: &'static str) -> Result<()> {
    match w.iter().position(|x| !x.is_finite()) {
        None => Ok(()),
        Some(i) => Err(Error::NonFinite {
            context,
            coordinate: Some(i),
        }),
    }
}

/// Central-difference gradient of `oracle` at `w`.
pub fn finite_diff_gradient(oracle: &dyn FunctionOracle, w: &Point, step: f64) -> Result<Point> {
    if !(step > 0.0) {
        return Err(Error::Contract(format!("finite-difference step must be > 0, got {step}")));
    }
    check_dims(oracle.dim(), w.len())?;
    ensure_finite(w, "finite-difference base point")?;
    let mut probe = w.clone();
    let mut out = Point::zeros(w.len());
    for i in 0..w.len() {
        let orig = probe[i];
        probe[i] = orig + step;
        let plus = oracle.value(&probe);
        probe[i] = orig - step;
        let minus = oracle.value(&probe);
        probe[i] = orig;
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite {
                context: "finite-difference gradient",
                coordinate: Some(i),
            });
        }
        out[i] = (plus - minus) / (2.0 * step);
    }
    Ok(out)
}

/// Central difference of the gradient along `v`, approximating `∇²f(w) v`.
pub fn finite_diff_hvp(oracle: &dyn FunctionOracle, w: &Point, v: &Point, step: f64) -> Result<Point> {
    if !(step > 0.0) {
        return Err(Error::Contract(format!("finite-difference step must be > 0, got {step}")));
    }
    check_dims(w.len(), v.len())?;
    let plus = oracle.gradient(&(w + v * step));
    let minus = oracle.gradient(&(w - v * step));
    let out = (plus - minus) / (2.0 * step);
    ensure_finite(&out, "finite-difference Hessian-vector product")?;
    Ok(out)
}

/// How a stochastic gradient of the objective is produced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseModel {
    /// The exact gradient.
    Exact,
    /// Exact gradient plus isotropic Gaussian noise with `E||ξ||² = sigma²`.
    AdditiveGaussian { sigma: f64 },
    /// Mean gradient of `batch_size` components drawn uniformly with replacement.
    Minibatch { batch_size: usize },
}

impl NoiseModel {
    /// Component gradients consumed by one draw.
    pub fn samples_per_draw(&self) -> usize {
        match self {
            NoiseModel::Minibatch { batch_size } => *batch_size,
            _ => 1,
        }
    }
}

/// Seeded source of unbiased stochastic gradients of the objective.
#[derive(Debug, Clone)]
pub struct StochasticGradientSource {
    oracle: SharedOracle,
    noise: NoiseModel,
    seed: u64,
    sigma2: f64,
    rng: ChaCha8Rng,
    draws_used: u64,
}

impl StochasticGradientSource {
    pub fn new(oracle: SharedOracle, noise: NoiseModel, sigma2: f64, seed: u64) -> Result<Self> {
        let sigma2 = match noise {
            NoiseModel::Exact => 0.0,
            NoiseModel::AdditiveGaussian { sigma } => {
                if !(sigma >= 0.0 && sigma.is_finite()) {
                    return Err(Error::Config(format!("noise sigma must be finite and >= 0, got {sigma}")));
                }
                sigma * sigma
            }
            NoiseModel::Minibatch { batch_size } => {
                if batch_size == 0 {
                    return Err(Error::Config("minibatch size must be positive".into()));
                }
                if oracle.num_terms().is_none() {
                    return Err(Error::Capability("minibatch gradients"));
                }
                if !(sigma2 >= 0.0 && sigma2.is_finite()) {
                    return Err(Error::Config(format!("declared variance must be finite and >= 0, got {sigma2}")));
                }
                sigma2
            }
        };
        Ok(Self {
            oracle,
            noise,
            seed,
            sigma2,
            rng: ChaCha8Rng::seed_from_u64(seed),
            draws_used: 0,
        })
    }

    /// Draw one stochastic gradient `g` with `E[g] = ∇L(w)`.
    pub fn sample(&mut self, w: &Point) -> Point {
        self.draws_used += 1;
        match self.noise {
            NoiseModel::Exact => self.oracle.gradient(w),
            NoiseModel::AdditiveGaussian { sigma } => {
                let d = w.len();
                let scale = sigma / (d as f64).sqrt();
                let mut g = self.oracle.gradient(w);
                for gi in g.iter_mut() {
                    let z: f64 = self.rng.sample(StandardNormal);
                    *gi += scale * z;
                }
                g
            }
            NoiseModel::Minibatch { batch_size } => {
                let n = self.oracle.num_terms().expect("checked at construction");
                let idx: Vec<usize> = (0..batch_size).map(|_| self.rng.random_range(0..n)).collect();
                self.oracle
                    .batch_gradient(w, &idx)
                    .expect("finite-sum oracle must provide batch gradients")
            }
        }
    }

    pub fn oracle(&self) -> &SharedOracle {
        &self.oracle
    }
    pub fn noise(&self) -> NoiseModel {
        self.noise
    }
    pub fn seed(&self) -> u64 {
        self.seed
    }
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }
    /// Number of `sample` calls so far.
    pub fn draws_used(&self) -> u64 {
        self.draws_used
    }
    /// Component gradients of `L` consumed so far (`draws × batch size`).
    pub fn samples_used(&self) -> u64 {
        self.draws_used * self.noise.samples_per_draw() as u64
    }
}

/// Monte Carlo estimate of `E||g - ∇L(w)||²` for a minibatch of the given size.
pub fn estimate_minibatch_variance(
    oracle: &dyn FunctionOracle,
    w: &Point,
    batch_size: usize,
    draws: usize,
    seed: u64,
) -> Result<f64> {
    let n = oracle.num_terms().ok_or(Error::Capability("minibatch gradients"))?;
    if batch_size == 0 || draws == 0 {
        return Err(Error::Contract("batch size and draw count must be positive".into()));
    }
    let full = oracle.gradient(w);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut acc = 0.0;
    for _ in 0..draws {
        let idx: Vec<usize> = (0..batch_size).map(|_| rng.random_range(0..n)).collect();
        let g = oracle.batch_gradient(w, &idx).ok_or(Error::Capability("minibatch gradients"))?;
        acc += (g - &full).norm_squared();
    }
    Ok(acc / draws as f64)
}

/// Certified minimizer of the objective.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReferenceSolution {
    pub w_star: Vec<f64>,
    pub f_star: f64,
    pub grad_norm_at_w_star: f64,
}

impl ReferenceSolution {
    /// Evaluates `oracle` at `w_star` and checks the stationarity certificate.
    pub fn certify(oracle: &dyn FunctionOracle, w_star: &Point) -> Result<Self> {
        check_dims(oracle.dim(), w_star.len())?;
        let f_star = oracle.value(w_star);
        let grad_norm = oracle.gradient(w_star).norm();
        if !f_star.is_finite() || !grad_norm.is_finite() {
            return Err(Error::NonFinite {
                context: "reference solution",
                coordinate: None,
            });
        }
        let slack = 1e-9 * f_star.abs().max(1.0);
        if grad_norm > slack {
            return Err(Error::Contract(format!(
                "reference certificate failed: ||∇L(w*)|| = {grad_norm:e} > {slack:e}"
            )));
        }
        Ok(Self {
            w_star: w_star.iter().copied().collect(),
            f_star,
            grad_norm_at_w_star: grad_norm,
        })
    }

    pub fn point(&self) -> Point {
        Point::from_vec(self.w_star.clone())
    }
}

/// Objective, proxy, noise model and the constants the theory needs.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub objective: SharedOracle,
    pub proxy: SharedOracle,
    pub noise: NoiseModel,
    /// Declared variance bound σ² of one stochastic gradient draw.
    pub sigma2: f64,
    /// Lipschitz constant of `∇(L - F̂)`.
    pub delta: f64,
    /// Strong-convexity constant of `L` (0 when merely convex or non-convex).
    pub mu: f64,
    /// Smoothness constant of the proxy.
    pub h_proxy: f64,
    pub reference: Option<ReferenceSolution>,
    /// Hessian `P` when the proxy is the quadratic `½wᵀPw + bᵀw + c`.
    pub proxy_hessian: Option<DMatrix<f64>>,
    /// Known lower bound on `L*` for problems without a certified minimizer.
    pub f_star_lower: Option<f64>,
}

impl ProblemInstance {
    pub fn new(
        objective: SharedOracle,
        proxy: SharedOracle,
        noise: NoiseModel,
        sigma2: f64,
        delta: f64,
        mu: f64,
        h_proxy: f64,
    ) -> Result<Self> {
        check_dims(objective.dim(), proxy.dim())?;
        for (name, v) in [("delta", delta), ("mu", mu), ("sigma2", sigma2)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if !(h_proxy.is_finite() && h_proxy >= 0.0) {
            return Err(Error::Config(format!("proxy smoothness must be finite and >= 0, got {h_proxy}")));
        }
        // L is (H + δ)-smooth, so its strong convexity cannot exceed that.
        if mu > (h_proxy + delta) * (1.0 + 1e-9) {
            return Err(Error::Config(format!(
                "mu = {mu} exceeds the smoothness bound H + delta = {}",
                h_proxy + delta
            )));
        }
        let sigma2 = match noise {
            NoiseModel::Exact => 0.0,
            NoiseModel::AdditiveGaussian { sigma } => sigma * sigma,
            NoiseModel::Minibatch { .. } => sigma2,
        };
        Ok(Self {
            objective,
            proxy,
            noise,
            sigma2,
            delta,
            mu,
            h_proxy,
            reference: None,
            proxy_hessian: None,
            f_star_lower: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn with_reference(mut self, reference: ReferenceSolution) -> Self {
        self.reference = Some(reference);
        self
    }

    pub fn with_proxy_hessian(mut self, p: DMatrix<f64>) -> Self {
        self.proxy_hessian = Some(p);
        self
    }

    /// Replace the noise model. For minibatch noise `sigma2` is the declared bound.
    pub fn with_noise(mut self, noise: NoiseModel, sigma2: f64) -> Self {
        self.sigma2 = match noise {
            NoiseModel::Exact => 0.0,
            NoiseModel::AdditiveGaussian { sigma } => sigma * sigma,
            NoiseModel::Minibatch { .. } => sigma2,
        };
        self.noise = noise;
        self
    }

    /// Minimum value of `L` when known, else the recorded lower bound.
    pub fn f_star(&self) -> Option<f64> {
        self.reference.as_ref().map(|r| r.f_star).or(self.f_star_lower)
    }

    /// A fresh gradient source for one run.
    pub fn gradient_source(&self, seed: u64) -> Result<StochasticGradientSource> {
        StochasticGradientSource::new(self.objective.clone(), self.noise, self.sigma2, seed)
    }

    /// `h = L - F̂`.
    pub fn similarity_gap(&self) -> Difference {
        Difference {
            minuend: self.objective.clone(),
            subtrahend: self.proxy.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug)]
    struct HalfNormSquared(usize);

    impl FunctionOracle for HalfNormSquared {
        fn dim(&self) -> usize {
            self.0
        }
        fn value(&self, w: &Point) -> f64 {
            0.5 * w.norm_squared()
        }
        fn gradient(&self, w: &Point) -> Point {
            w.clone()
        }
    }

    #[derive(Debug)]
    struct Blowup;

    impl FunctionOracle for Blowup {
        fn dim(&self) -> usize {
            2
        }
        fn value(&self, w: &Point) -> f64 {
            if w[1] > 0.5 {
                f64::NAN
            } else {
                w[0]
            }
        }
        fn gradient(&self, _w: &Point) -> Point {
            Point::from_vec(vec![1.0, 0.0])
        }
    }

    #[test]
    fn finite_diff_of_half_norm_squared_is_identity() {
        let w = Point::from_vec(vec![1.0, 2.0]);
        let g = finite_diff_gradient(&HalfNormSquared(2), &w, 1e-5).unwrap();
        assert!((g - &w).amax() < 1e-8);
    }

    #[test]
    fn finite_diff_of_zero_function_vanishes() {
        let w = Point::from_vec(vec![3.0, -1.0, 0.25]);
        let g = finite_diff_gradient(&ZeroFunction::new(3), &w, 1e-5).unwrap();
        assert_eq!(g, Point::zeros(3));
    }

    #[test]
    fn finite_diff_names_the_bad_coordinate() {
        let w = Point::from_vec(vec![0.0, 0.5]);
        match finite_diff_gradient(&Blowup, &w, 1e-3) {
            Err(Error::NonFinite { coordinate, .. }) => assert_eq!(coordinate, Some(1)),
            other => panic!("expected a non-finite error, got {other:?}"),
        }
        assert!(finite_diff_gradient(&Blowup, &w, 0.0).is_err());
    }

    #[test]
    fn squared_distance_cases() {
        let p = |v: &[f64]| Point::from_vec(v.to_vec());
        assert_eq!(squared_distance(&p(&[1.5, 2.0]), &p(&[1.5, 2.0])).unwrap(), 0.0);
        assert_eq!(squared_distance(&p(&[1.0, 0.0]), &p(&[0.0, 1.0])).unwrap(), 2.0);
        assert_eq!(squared_distance(&p(&[3.0, 4.0]), &p(&[0.0, 0.0])).unwrap(), 25.0);
        assert!(matches!(
            squared_distance(&p(&[1.0]), &p(&[1.0, 2.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn exact_source_returns_the_gradient_and_counts_draws() {
        let oracle: SharedOracle = Arc::new(HalfNormSquared(3));
        let mut src = StochasticGradientSource::new(oracle, NoiseModel::Exact, 5.0, 1).unwrap();
        assert_eq!(src.sigma2(), 0.0);
        let w = Point::from_vec(vec![1.0, -2.0, 3.0]);
        for i in 1..=4 {
            assert_eq!(src.sample(&w), w);
            assert_eq!(src.draws_used(), i);
        }
    }

    #[test]
    fn equal_seeds_give_identical_draws() {
        let oracle: SharedOracle = Arc::new(HalfNormSquared(4));
        let noise = NoiseModel::AdditiveGaussian { sigma: 1.0 };
        let mut a = StochasticGradientSource::new(oracle.clone(), noise, 0.0, 99).unwrap();
        let mut b = StochasticGradientSource::new(oracle, noise, 0.0, 99).unwrap();
        let w = Point::from_vec(vec![0.1, 0.2, 0.3, 0.4]);
        for _ in 0..50 {
            let (ga, gb) = (a.sample(&w), b.sample(&w));
            assert!(ga.iter().zip(gb.iter()).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn gaussian_source_is_unbiased_with_declared_variance() {
        let oracle: SharedOracle = Arc::new(HalfNormSquared(5));
        let sigma = 0.7;
        let mut src =
            StochasticGradientSource::new(oracle, NoiseModel::AdditiveGaussian { sigma }, 0.0, 3).unwrap();
        let w = Point::from_vec(vec![1.0, 0.0, -1.0, 2.0, 0.5]);
        let n = 20_000;
        let mut mean = Point::zeros(5);
        let mut sq = 0.0;
        for _ in 0..n {
            let g = src.sample(&w);
            sq += (&g - &w).norm_squared();
            mean += g;
        }
        mean /= n as f64;
        // O(σ/√n) deviation of the mean, 5-sigma slack
        assert!((mean - &w).norm() < 5.0 * sigma / (n as f64).sqrt());
        let var = sq / n as f64;
        assert!((var - sigma * sigma).abs() < 0.05 * sigma * sigma);
        assert!(var <= src.sigma2() * 1.05);
    }

    #[test]
    fn minibatch_requires_a_finite_sum() {
        let oracle: SharedOracle = Arc::new(HalfNormSquared(2));
        let err = StochasticGradientSource::new(oracle, NoiseModel::Minibatch { batch_size: 4 }, 1.0, 0);
        assert!(matches!(err, Err(Error::Capability(_))));
    }

    #[test]
    fn instance_rejects_inconsistent_constants() {
        let a: SharedOracle = Arc::new(HalfNormSquared(2));
        let b: SharedOracle = Arc::new(HalfNormSquared(3));
        assert!(ProblemInstance::new(a.clone(), b, NoiseModel::Exact, 0.0, 0.0, 1.0, 1.0).is_err());
        assert!(ProblemInstance::new(a.clone(), a.clone(), NoiseModel::Exact, 0.0, 0.0, 5.0, 1.0).is_err());
        assert!(ProblemInstance::new(a.clone(), a.clone(), NoiseModel::Exact, 0.0, -1.0, 0.5, 1.0).is_err());
        assert!(ProblemInstance::new(a.clone(), a, NoiseModel::Exact, 0.0, 0.0, 1.0, 1.0).is_ok());
    }
}
