use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

use crate::error::{check_dims, Error, Result};
use crate::linalg::{geometric_spectrum, random_gaussian_vector, random_orthogonal, symmetric_from_spectrum};
use crate::oracle::{FunctionOracle, NoiseModel, Point, ProblemInstance, ReferenceSolution, SharedOracle};

/// `½ wᵀPw + bᵀw + c`, or `½ (w - z)ᵀP(w - z) + c` when built with [`Quadratic::centered`].
#[derive(Debug, Clone)]
pub struct Quadratic {
    p: DMatrix<f64>,
    b: Point,
    c: f64,
    center: Option<Point>,
}

impl Quadratic {
    pub fn new(p: DMatrix<f64>, b: Point, c: f64) -> Result<Self> {
        check_symmetric(&p)?;
        check_dims(p.nrows(), b.len())?;
        Ok(Self { p, b, c, center: None })
    }

    /// `½ (w - center)ᵀP(w - center) + c`; evaluated in centered form so values near
    /// the minimizer keep full relative precision.
    pub fn centered(p: DMatrix<f64>, center: Point, c: f64) -> Result<Self> {
        check_symmetric(&p)?;
        check_dims(p.nrows(), center.len())?;
        let b = -(&p * &center);
        Ok(Self {
            p,
            b,
            c,
            center: Some(center),
        })
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }
    pub fn b(&self) -> &Point {
        &self.b
    }
}

fn check_symmetric(p: &DMatrix<f64>) -> Result<()> {
    if !p.is_square() {
        return Err(Error::DimensionMismatch {
            expected: p.nrows(),
            got: p.ncols(),
        });
    }
    let scale = p.amax().max(1e-300);
    if (p - p.transpose()).amax() > 1e-10 * scale {
        return Err(Error::Contract("quadratic Hessian must be symmetric".into()));
    }
    Ok(())
}

impl FunctionOracle for Quadratic {
    fn dim(&self) -> usize {
        self.b.len()
    }
    fn value(&self, w: &Point) -> f64 {
        match &self.center {
            Some(z) => {
                let r = w - z;
                0.5 * r.dot(&(&self.p * &r)) + self.c
            }
            None => 0.5 * w.dot(&(&self.p * w)) + self.b.dot(w) + self.c,
        }
    }
    fn gradient(&self, w: &Point) -> Point {
        match &self.center {
            Some(z) => &self.p * (w - z),
            None => &self.p * w + &self.b,
        }
    }
    fn hvp(&self, _w: &Point, v: &Point) -> Option<Point> {
        Some(&self.p * v)
    }
}

/// Parameters of the strongly convex quadratic testbed
/// `L(w) = ½ (w - w*)ᵀA(w - w*)` with proxy `F̂(w) = ½ wᵀ(1 - α)A w`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadraticTestbed {
    pub dim: usize,
    /// Smallest eigenvalue of `A`.
    pub mu: f64,
    /// `λ_max / λ_min` of `A`.
    pub condition: f64,
    /// Dissimilarity `α ∈ [0, 1]`; `δ = α λ_max`.
    pub alpha: f64,
    /// Additive Gaussian gradient noise with `E||ξ||² = σ²`.
    pub sigma: f64,
    pub seed: u64,
}

impl Default for QuadraticTestbed {
    fn default() -> Self {
        Self {
            dim: 20,
            mu: 1.0,
            condition: 1e3,
            alpha: 0.01,
            sigma: 1.0,
            seed: 0,
        }
    }
}

/// Builds the testbed instance: spectrum geometric in `[μ, μ·condition]`, random
/// eigenbasis and minimizer, `L* = 0`.
pub fn quadratic_testbed(cfg: &QuadraticTestbed) -> Result<ProblemInstance> {
    if cfg.dim == 0 || !(cfg.mu > 0.0) || !(cfg.condition >= 1.0) || !(0.0..=1.0).contains(&cfg.alpha) {
        return Err(Error::Config(format!("invalid quadratic testbed {cfg:?}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let q = random_orthogonal(cfg.dim, &mut rng);
    let eigs = geometric_spectrum(cfg.mu, cfg.mu * cfg.condition, cfg.dim);
    let a = symmetric_from_spectrum(&q, &eigs);
    let w_star = random_gaussian_vector(cfg.dim, &mut rng);
    let lmax = eigs[cfg.dim - 1];
    let objective = Arc::new(Quadratic::centered(a.clone(), w_star.clone(), 0.0)?);
    let p = &a * (1.0 - cfg.alpha);
    let proxy: SharedOracle = Arc::new(Quadratic::new(p.clone(), Point::zeros(cfg.dim), 0.0)?);
    let noise = if cfg.sigma > 0.0 {
        NoiseModel::AdditiveGaussian { sigma: cfg.sigma }
    } else {
        NoiseModel::Exact
    };
    let reference = ReferenceSolution::certify(objective.as_ref(), &w_star)?;
    Ok(ProblemInstance::new(
        objective,
        proxy,
        noise,
        cfg.sigma * cfg.sigma,
        cfg.alpha * lmax,
        cfg.mu,
        (1.0 - cfg.alpha) * lmax,
    )?
    .with_reference(reference)
    .with_proxy_hessian(p))
}
