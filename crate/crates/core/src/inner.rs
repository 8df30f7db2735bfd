//! Inner solvers producing `w_{k+1} ≈ argmin φ_k`.
//!
//! The criterion is checked directly every `check_every` steps with the exact
//! `∇φ_k`, so `max_steps` is only a safety cap.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::Point;
use crate::subproblem::{criterion_from_gradient, CriterionCheck, CriterionSpec, ProxSubproblem};
use nalgebra::DMatrix;

/// Source of the proxy gradients used for inner steps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerNoise {
    #[default]
    Exact,
    /// Minibatches of proxy components drawn uniformly with replacement.
    Minibatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepSchedule {
    #[default]
    Constant,
    /// `γ_t = 2η / (t + 2η/γ_0)`, the usual `O(1/t)` decay for the `1/η`-strongly convex `φ_k`.
    StronglyConvexDecay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InnerConfig {
    pub max_steps: usize,
    /// Defaults to `1/(H + 1/η)`.
    pub step_size: Option<f64>,
    /// Smoothness `H` of the proxy; filled in from the problem by the outer loop.
    pub smoothness: Option<f64>,
    pub batch_size: usize,
    /// Declared variance `ρ²` of inner stochastic gradients (diagnostic only).
    pub rho2: f64,
    pub check_every: usize,
    pub noise: InnerNoise,
    pub schedule: StepSchedule,
}

impl Default for InnerConfig {
    fn default() -> Self {
        Self {
            max_steps: 1000,
            step_size: None,
            smoothness: None,
            batch_size: 1,
            rho2: 0.0,
            check_every: 1,
            noise: InnerNoise::Exact,
            schedule: StepSchedule::Constant,
        }
    }
}

impl InnerConfig {
    /// Resolved initial step for stepsize `eta`, validated against `1/(H + 1/η)`.
    pub fn step_for(&self, eta: f64) -> Result<f64> {
        if self.max_steps == 0 || self.check_every == 0 || self.batch_size == 0 {
            return Err(Error::Config("max_steps, check_every and batch_size must be positive".into()));
        }
        let bound = self.smoothness.map(|h| 1.0 / (h + 1.0 / eta));
        let step = match (self.step_size, bound) {
            (Some(s), Some(b)) if s > b + 1e-12 => {
                return Err(Error::Config(format!("inner step {s} exceeds 1/(H + 1/eta) = {b}")));
            }
            (Some(s), _) => s,
            (None, Some(b)) => b,
            (None, None) => {
                return Err(Error::Config("inner step size needs either step_size or smoothness".into()));
            }
        };
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::Config(format!("inner step must be finite and > 0, got {step}")));
        }
        Ok(step)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnerResult {
    pub w_next: Point,
    pub steps_taken: usize,
    pub criterion_ok: bool,
    pub lhs: f64,
    pub rhs: f64,
    /// Proxy oracle calls (full or minibatch gradients).
    pub proxy_grads_used: u64,
}

/// SGD on `φ_k` from the anchor. Returns the first iterate passing the criterion,
/// otherwise the checked iterate with the smallest `||∇φ_k||²`.
pub fn inner_sgd<R: Rng + ?Sized>(
    sp: &ProxSubproblem,
    spec: &CriterionSpec,
    cfg: &InnerConfig,
    rng: &mut R,
) -> Result<InnerResult> {
    let step0 = cfg.step_for(sp.eta())?;
    let n_terms = match cfg.noise {
        InnerNoise::Exact => 0,
        InnerNoise::Minibatch => sp.proxy().num_terms().ok_or(Error::Capability("minibatch proxy gradients"))?,
    };
    let mut v = sp.anchor().clone();
    let mut calls = 0u64;
    let mut best: Option<(Point, CriterionCheck)> = None;
    let mut idx = vec![0usize; cfg.batch_size];
    for t in 0..=cfg.max_steps {
        let checked = t % cfg.check_every == 0 || t == cfg.max_steps;
        let mut full = None;
        if checked {
            let grad = sp.gradient(&v);
            calls += 1;
            let check = criterion_from_gradient(spec, sp, &v, &grad, None)?;
            if check.satisfied {
                return Ok(InnerResult {
                    w_next: v,
                    steps_taken: t,
                    criterion_ok: true,
                    lhs: check.lhs,
                    rhs: check.rhs,
                    proxy_grads_used: calls,
                });
            }
            if best.as_ref().is_none_or(|(_, b)| check.lhs < b.lhs) {
                best = Some((v.clone(), check));
            }
            full = Some(grad);
        }
        if t == cfg.max_steps {
            break;
        }
        let dir = match cfg.noise {
            InnerNoise::Exact => match full {
                Some(g) => g,
                None => {
                    calls += 1;
                    sp.gradient(&v)
                }
            },
            InnerNoise::Minibatch => {
                for i in idx.iter_mut() {
                    *i = rng.random_range(0..n_terms);
                }
                calls += 1;
                sp.minibatch_gradient(&v, &idx).ok_or(Error::Capability("minibatch proxy gradients"))?
            }
        };
        let step = match cfg.schedule {
            StepSchedule::Constant => step0,
            StepSchedule::StronglyConvexDecay => {
                let two_eta = 2.0 * sp.eta();
                two_eta / (t as f64 + two_eta / step0)
            }
        };
        v.axpy(-step, &dir, 1.0);
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence { step: t + 1, step_size: step });
        }
    }
    let (w, check) = best.expect("the final step is always checked");
    Ok(InnerResult {
        w_next: w,
        steps_taken: cfg.max_steps,
        criterion_ok: false,
        lhs: check.lhs,
        rhs: check.rhs,
        proxy_grads_used: calls,
    })
}

/// Gradient descent on `φ_k` with exact proxy gradients; deterministic.
pub fn inner_gd(sp: &ProxSubproblem, spec: &CriterionSpec, cfg: &InnerConfig) -> Result<InnerResult> {
    let cfg = InnerConfig {
        noise: InnerNoise::Exact,
        ..cfg.clone()
    };
    // exact steps never touch the generator
    inner_sgd(sp, spec, &cfg, &mut <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(0))
}

/// Exact minimizer `anchor - η (I + ηP)⁻¹ g` for the quadratic proxy `½wᵀPw + bᵀw`.
pub fn quadratic_exact(sp: &ProxSubproblem, p: &DMatrix<f64>) -> Result<Point> {
    let d = sp.dim();
    if p.nrows() != d || p.ncols() != d {
        return Err(Error::DimensionMismatch { expected: d, got: p.nrows() });
    }
    let eta = sp.eta();
    let m = DMatrix::identity(d, d) + p * eta;
    let x = match m.clone().cholesky() {
        Some(c) => c.solve(sp.g()),
        None => m
            .lu()
            .solve(sp.g())
            .ok_or_else(|| Error::LinAlg("I + eta P is singular".into()))?,
    };
    let out = sp.anchor() - x * eta;
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::LinAlg("non-finite solution of I + eta P".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{SharedOracle, ZeroFunction};
    use crate::problems::Quadratic;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn p(v: &[f64]) -> Point {
        Point::from_vec(v.to_vec())
    }

    fn diag_proxy(d: &[f64]) -> (SharedOracle, DMatrix<f64>) {
        let m = DMatrix::from_diagonal(&p(d));
        (Arc::new(Quadratic::new(m.clone(), Point::zeros(d.len()), 0.0).unwrap()), m)
    }

    #[test]
    fn zero_proxy_one_step_lands_on_sgd_point() {
        let eta = 0.1;
        let sp = ProxSubproblem::new(Arc::new(ZeroFunction::new(2)), p(&[1.0, 2.0]), p(&[0.5, -1.0]), eta).unwrap();
        let spec = CriterionSpec::strongly_convex(1.0, 0.0, eta);
        let cfg = InnerConfig {
            step_size: Some(eta),
            smoothness: Some(0.0),
            ..Default::default()
        };
        let r = inner_gd(&sp, &spec, &cfg).unwrap();
        assert!(r.criterion_ok);
        assert_eq!(r.steps_taken, 1);
        assert_eq!(r.w_next, p(&[1.0 - 0.05, 2.0 + 0.1]));
    }

    #[test]
    fn optimal_anchor_returns_immediately() {
        let (proxy, _) = diag_proxy(&[1.0, 2.0]);
        let sp = ProxSubproblem::new(proxy, p(&[0.0, 0.0]), p(&[0.0, 0.0]), 0.5).unwrap();
        let cfg = InnerConfig {
            smoothness: Some(2.0),
            ..Default::default()
        };
        let r = inner_gd(&sp, &CriterionSpec::strongly_convex(1.0, 0.0, 0.5), &cfg).unwrap();
        assert!(r.criterion_ok);
        assert_eq!(r.steps_taken, 0);
        assert_eq!(r.w_next, p(&[0.0, 0.0]));
    }

    #[test]
    fn quadratic_exact_hand_cases() {
        let (proxy, m) = diag_proxy(&[2.0, 8.0]);
        let sp = ProxSubproblem::new(proxy, p(&[0.0, 0.0]), p(&[1.0, 1.0]), 0.25).unwrap();
        let w = quadratic_exact(&sp, &m).unwrap();
        assert!((w - p(&[-1.0 / 6.0, -1.0 / 12.0])).amax() < 1e-15);

        let (proxy, m) = diag_proxy(&[1.0, 1.0]);
        let sp = ProxSubproblem::new(proxy, p(&[1.0, 1.0]), p(&[2.0, -4.0]), 1.0).unwrap();
        assert!((quadratic_exact(&sp, &m).unwrap() - p(&[0.0, 3.0])).amax() < 1e-15);

        let z = DMatrix::zeros(2, 2);
        let sp = ProxSubproblem::new(Arc::new(ZeroFunction::new(2)), p(&[1.0, 1.0]), p(&[2.0, -4.0]), 0.5).unwrap();
        assert_eq!(quadratic_exact(&sp, &z).unwrap(), p(&[0.0, 3.0]));
    }

    #[test]
    fn step_above_smoothness_bound_is_rejected() {
        let cfg = InnerConfig {
            step_size: Some(1.0),
            smoothness: Some(1.0),
            ..Default::default()
        };
        assert!(cfg.step_for(1.0).is_err());
        assert_eq!(
            InnerConfig {
                smoothness: Some(1.0),
                ..Default::default()
            }
            .step_for(1.0)
            .unwrap(),
            0.5
        );
    }

    #[test]
    fn exhausted_budget_returns_best_iterate() {
        let (proxy, _) = diag_proxy(&[100.0, 1.0]);
        let sp = ProxSubproblem::new(proxy, p(&[0.0, 0.0]), p(&[1.0, 1.0]), 1.0).unwrap();
        let cfg = InnerConfig {
            max_steps: 3,
            smoothness: Some(100.0),
            ..Default::default()
        };
        let r = inner_gd(&sp, &CriterionSpec::strongly_convex(1e-9, 0.0, 1.0), &cfg).unwrap();
        assert!(!r.criterion_ok);
        assert_eq!(r.steps_taken, 3);
        assert!(r.lhs > r.rhs);
    }

    #[test]
    fn exact_sgd_is_bit_identical_to_gd() {
        let (proxy, _) = diag_proxy(&[3.0, 0.5, 1.5]);
        let sp = ProxSubproblem::new(proxy, p(&[1.0, -1.0, 0.3]), p(&[0.2, 0.4, -0.9]), 0.3).unwrap();
        let spec = CriterionSpec::strongly_convex(0.5, 1e-8, 0.3);
        let cfg = InnerConfig {
            smoothness: Some(3.0),
            ..Default::default()
        };
        let a = inner_gd(&sp, &spec, &cfg).unwrap();
        let b = inner_sgd(&sp, &spec, &cfg, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn minibatch_needs_finite_sum_proxy() {
        let (proxy, _) = diag_proxy(&[1.0]);
        let sp = ProxSubproblem::new(proxy, p(&[0.0]), p(&[1.0]), 1.0).unwrap();
        let cfg = InnerConfig {
            smoothness: Some(1.0),
            noise: InnerNoise::Minibatch,
            ..Default::default()
        };
        let r = inner_sgd(&sp, &CriterionSpec::strongly_convex(1.0, 0.0, 1.0), &cfg, &mut ChaCha8Rng::seed_from_u64(0));
        assert!(matches!(r, Err(Error::Capability(_))));
    }
}
