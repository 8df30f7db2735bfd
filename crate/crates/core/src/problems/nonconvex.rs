use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::{random_gaussian_vector, symmetric_eigenvalues};
use crate::oracle::{FunctionOracle, NoiseModel, Point, ProblemInstance, SharedOracle};

use super::Quadratic;

/// `q(w) + a Σ_i cos(b w_i)` for a convex quadratic `q`.
#[derive(Debug, Clone)]
pub struct CosinePerturbed {
    pub quadratic: Quadratic,
    pub amplitude: f64,
    pub frequency: f64,
}

impl FunctionOracle for CosinePerturbed {
    fn dim(&self) -> usize {
        self.quadratic.dim()
    }
    fn value(&self, w: &Point) -> f64 {
        let b = self.frequency;
        self.quadratic.value(w) + self.amplitude * w.iter().map(|x| (b * x).cos()).sum::<f64>()
    }
    fn gradient(&self, w: &Point) -> Point {
        let (a, b) = (self.amplitude, self.frequency);
        self.quadratic.gradient(w) - w.map(|x| a * b * (b * x).sin())
    }
    fn hvp(&self, w: &Point, v: &Point) -> Option<Point> {
        let (a, b) = (self.amplitude, self.frequency);
        let diag = w.map(|x| a * b * b * (b * x).cos());
        Some(self.quadratic.hvp(w, v)? - diag.component_mul(v))
    }
}

/// Seed of the fixed `(A, y)` behind [`nonconvex_testfn`].
pub const NONCONVEX_DATA_SEED: u64 = 7;

/// `L(w) = ||Aw - y||²/(2n) + a Σ cos(b w_i)` with the quadratic part as proxy, so
/// `h = a Σ cos(b w_i)` and `δ = a b²`. Gradients are exact; use
/// [`ProblemInstance::with_noise`] to add noise.
pub fn nonconvex_testfn(d: usize, amplitude: f64, frequency: f64) -> Result<ProblemInstance> {
    nonconvex_testfn_seeded(d, amplitude, frequency, NONCONVEX_DATA_SEED)
}

pub fn nonconvex_testfn_seeded(d: usize, amplitude: f64, frequency: f64, seed: u64) -> Result<ProblemInstance> {
    if d == 0 || !(amplitude >= 0.0) || !(frequency > 0.0) {
        return Err(Error::Config(format!(
            "need d >= 1, a >= 0, b > 0 (d={d}, a={amplitude}, b={frequency})"
        )));
    }
    let n = 2 * d;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a_mat = DMatrix::from_fn(n, d, |_, _| rand::Rng::sample::<f64, _>(&mut rng, rand_distr::StandardNormal));
    let w_true = random_gaussian_vector(d, &mut rng);
    let y = &a_mat * &w_true + random_gaussian_vector(n, &mut rng) * 0.5;
    let nf = n as f64;
    let p = a_mat.transpose() * &a_mat / nf;
    let p = (&p + p.transpose()) * 0.5;
    let bvec = -(a_mat.transpose() * &y) / nf;
    let quadratic = Quadratic::new(p.clone(), bvec.clone(), y.norm_squared() / (2.0 * nf))?;
    let w_min = p
        .clone()
        .cholesky()
        .ok_or_else(|| Error::LinAlg("quadratic part is not positive definite".into()))?
        .solve(&(-&bvec));
    let q_min = quadratic.value(&w_min);
    let ev = symmetric_eigenvalues(&p);
    let objective: SharedOracle = Arc::new(CosinePerturbed {
        quadratic: quadratic.clone(),
        amplitude,
        frequency,
    });
    let mut inst = ProblemInstance::new(
        objective,
        Arc::new(quadratic),
        NoiseModel::Exact,
        0.0,
        amplitude * frequency * frequency,
        0.0,
        ev[d - 1],
    )?
    .with_proxy_hessian(p);
    inst.f_star_lower = Some(q_min - amplitude * d as f64);
    Ok(inst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::finite_diff_gradient;

    #[test]
    fn declared_delta_is_a_b_squared() {
        let inst = nonconvex_testfn(10, 0.5, 2.0).unwrap();
        assert_eq!(inst.delta, 2.0);
        assert_eq!(inst.mu, 0.0);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let inst = nonconvex_testfn(6, 0.5, 2.0).unwrap();
        let w = Point::from_fn(6, |i, _| 0.3 * i as f64 - 0.7);
        let g = inst.objective.gradient(&w);
        let fd = finite_diff_gradient(inst.objective.as_ref(), &w, 1e-5).unwrap();
        assert!((fd - &g).norm() <= 1e-5 * g.norm().max(1.0));
    }

    #[test]
    fn lower_bound_holds() {
        let inst = nonconvex_testfn(4, 0.5, 2.0).unwrap();
        let lo = inst.f_star_lower.unwrap();
        for k in 0..50 {
            let w = Point::from_fn(4, |i, _| ((k * 4 + i) as f64).sin() * 3.0);
            assert!(inst.objective.value(&w) >= lo);
        }
    }
}
