//! Objective/proxy pairs: quadratics, least squares with a covariance proxy,
//! logistic regression with label-free, random-label and subsampled proxies,
//! and a cosine-perturbed non-convex function.

mod least_squares;
mod logistic;
mod nonconvex;
mod quadratic;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use least_squares::{least_squares_pair, synthetic_regression, LeastSquares};
pub use logistic::{logistic_pair, logistic_smoothness, neg_log_sigmoid, sigmoid_stable, Logistic, ProxyKind};
pub use nonconvex::{nonconvex_testfn, nonconvex_testfn_seeded, CosinePerturbed, NONCONVEX_DATA_SEED};
pub use quadratic::{quadratic_testbed, Quadratic, QuadraticTestbed};

use crate::error::{check_dims, Error, Result};
use crate::linalg::{power_iteration, random_gaussian_vector};
use crate::oracle::{estimate_minibatch_variance, FunctionOracle, NoiseModel, Point, ProblemInstance};

/// Power-iteration budget per probe in [`estimate_delta`].
pub const DELTA_POWER_ITERS: usize = 30;
pub const DELTA_POWER_TOL: f64 = 1e-6;

/// Lower estimate of `δ = sup_w ||∇²L(w) - ∇²F̂(w)||` from `probes` standard normal points.
pub fn estimate_delta(l: &dyn FunctionOracle, f: &dyn FunctionOracle, probes: usize, seed: u64) -> Result<f64> {
    check_dims(l.dim(), f.dim())?;
    if probes == 0 {
        return Err(Error::Config("estimate_delta needs at least one probe".into()));
    }
    let d = l.dim();
    let zero = Point::zeros(d);
    if l.hvp(&zero, &zero).is_none() || f.hvp(&zero, &zero).is_none() {
        return Err(Error::Capability("Hessian-vector products"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0_f64;
    for _ in 0..probes {
        let w = random_gaussian_vector(d, &mut rng);
        let apply = |v: &Point| l.hvp(&w, v).expect("checked above") - f.hvp(&w, v).expect("checked above");
        best = best.max(power_iteration(apply, d, DELTA_POWER_ITERS, DELTA_POWER_TOL, &mut rng));
    }
    Ok(best)
}

/// Switches a finite-sum problem to minibatch noise and re-estimates σ² at `w`.
pub fn with_minibatch_noise(problem: ProblemInstance, batch_size: usize, w: &Point, seed: u64) -> Result<ProblemInstance> {
    let sigma2 = estimate_minibatch_variance(problem.objective.as_ref(), w, batch_size, 500, seed)?;
    Ok(problem.with_noise(NoiseModel::Minibatch { batch_size }, sigma2))
}
