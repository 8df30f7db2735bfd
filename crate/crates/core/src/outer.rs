//! The outer loop, its averaging rules and step-size schedules, and the SGD baseline.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data_io::rng_fork;
use crate::error::{check_dims, Error, Result};
use crate::inner::{inner_gd, inner_sgd, quadratic_exact, InnerConfig};
use crate::oracle::{Point, ProblemInstance, ProximallyRegularized, SharedOracle};
use crate::subproblem::{criterion_satisfied, CriterionSpec, GradientTerm, ProxSubproblem};

/// Universal constant in the iteration-count schedules.
pub const SCHEDULE_C: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum Mode {
    StronglyConvex,
    Convex,
    /// `certified` evaluates `||∇L(w⁺)||²` with the full gradient and logs it per step;
    /// otherwise that criterion term is dropped.
    Nonconvex { certified: bool },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "method")]
pub enum InnerMethod {
    Sgd(InnerConfig),
    Gd(InnerConfig),
    /// Closed-form solve; needs `ProblemInstance::proxy_hessian`.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailurePolicy {
    #[default]
    Abort,
    Warn,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterConfig {
    pub eta: f64,
    pub iterations: usize,
    pub mode: Mode,
    pub g2: f64,
    pub inner: InnerMethod,
    pub w0: Point,
    /// Target accuracy, recorded for schedules and reports.
    pub epsilon: f64,
    pub seed: u64,
    pub on_inner_failure: FailurePolicy,
}

impl OuterConfig {
    pub fn new(eta: f64, iterations: usize, mode: Mode, inner: InnerMethod, w0: Point, seed: u64) -> Self {
        Self {
            eta,
            iterations,
            mode,
            g2: 0.0,
            inner,
            w0,
            epsilon: f64::NAN,
            seed,
            on_inner_failure: FailurePolicy::Abort,
        }
    }
}

/// Per-iteration record of one run. Per-step vectors have length `K`; those indexed
/// by iterate (including `w_0`) have length `K + 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunTrace {
    pub algorithm: String,
    pub eta: f64,
    pub seed: u64,
    pub outer_seed: u64,
    pub inner_seed: u64,
    /// Component gradients per draw (1 unless minibatch noise).
    pub batch_size: usize,
    #[serde(with = "serde_points")]
    pub iterates: Vec<Point>,
    pub objective_values: Vec<f64>,
    pub criterion_lhs: Vec<f64>,
    pub criterion_rhs: Vec<f64>,
    pub criterion_ok: Vec<bool>,
    pub movement: Vec<f64>,
    pub inner_steps: Vec<usize>,
    pub objective_grad_draws: Vec<u64>,
    pub proxy_grads: Vec<u64>,
    #[serde(with = "serde_opt_point")]
    pub averaged_iterate: Option<Point>,
    pub b2: Option<f64>,
    /// `||∇L(w_k)||²` for `k = 0..=K` in certified non-convex mode.
    pub full_grad_sq_norms: Vec<f64>,
}

impl RunTrace {
    pub fn iterations(&self) -> usize {
        self.iterates.len().saturating_sub(1)
    }

    fn start(algorithm: &str, problem: &ProblemInstance, eta: f64, w0: &Point, seed: u64, outer: u64, inner: u64) -> Self {
        Self {
            algorithm: algorithm.to_string(),
            eta,
            seed,
            outer_seed: outer,
            inner_seed: inner,
            batch_size: problem.noise.samples_per_draw(),
            iterates: vec![w0.clone()],
            objective_values: vec![problem.objective.value(w0)],
            criterion_lhs: Vec::new(),
            criterion_rhs: Vec::new(),
            criterion_ok: Vec::new(),
            movement: Vec::new(),
            inner_steps: Vec::new(),
            objective_grad_draws: vec![0],
            proxy_grads: vec![0],
            averaged_iterate: None,
            b2: problem.reference.as_ref().map(|r| (w0 - r.point()).norm_squared()),
            full_grad_sq_norms: Vec::new(),
        }
    }
}

mod serde_points {
    use super::Point;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Point], s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<&[f64]> = v.iter().map(|p| p.as_slice()).collect();
        rows.serialize(s)
    }
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Point>, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Ok(rows.into_iter().map(Point::from_vec).collect())
    }
}

mod serde_opt_point {
    use super::Point;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Point>, s: S) -> Result<S::Ok, S::Error> {
        v.as_ref().map(|p| p.as_slice()).serialize(s)
    }
    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Point>, D::Error> {
        Ok(Option::<Vec<f64>>::deserialize(d)?.map(Point::from_vec))
    }
}

fn check_eta(problem: &ProblemInstance, eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Config(format!("eta must be finite and > 0, got {eta}")));
    }
    if problem.delta > 0.0 && eta > (1.0 + 1e-12) / (4.0 * problem.delta) {
        return Err(Error::Config(format!(
            "eta = {eta} exceeds 1/(4 delta) = {}",
            1.0 / (4.0 * problem.delta)
        )));
    }
    Ok(())
}

fn criterion_for(problem: &ProblemInstance, cfg: &OuterConfig) -> CriterionSpec {
    match cfg.mode {
        Mode::StronglyConvex => CriterionSpec::strongly_convex(problem.mu, cfg.g2, cfg.eta),
        Mode::Convex => CriterionSpec::convex(cfg.iterations, cfg.g2, cfg.eta),
        Mode::Nonconvex { certified: true } => {
            CriterionSpec::nonconvex(GradientTerm::Certified(problem.objective.clone()), cfg.eta)
        }
        Mode::Nonconvex { certified: false } => CriterionSpec::nonconvex(GradientTerm::Dropped, cfg.eta),
    }
}

/// Runs `K` outer iterations; each draws exactly one stochastic gradient of `L`.
pub fn proxyprox_run(problem: &ProblemInstance, cfg: &OuterConfig) -> Result<RunTrace> {
    check_eta(problem, cfg.eta)?;
    check_dims(problem.dim(), cfg.w0.len())?;
    if cfg.iterations == 0 {
        return Err(Error::Config("iterations must be positive".into()));
    }
    if cfg.mode == Mode::StronglyConvex && !(problem.mu > 0.0) {
        return Err(Error::Config("strongly convex mode needs mu > 0".into()));
    }
    if !(cfg.g2 >= 0.0) {
        return Err(Error::Config(format!("G2 must be >= 0, got {}", cfg.g2)));
    }
    let resolve = |c: &InnerConfig| InnerConfig {
        smoothness: c.smoothness.or(Some(problem.h_proxy)),
        ..c.clone()
    };
    let inner = match &cfg.inner {
        InnerMethod::Sgd(c) => InnerMethod::Sgd(resolve(c)),
        InnerMethod::Gd(c) => InnerMethod::Gd(resolve(c)),
        InnerMethod::Exact => {
            if problem.proxy_hessian.is_none() {
                return Err(Error::Capability("exact inner solves (proxy is not quadratic)"));
            }
            InnerMethod::Exact
        }
    };
    let outer_seed = rng_fork(cfg.seed, "outer");
    let inner_seed = rng_fork(cfg.seed, "inner");
    let mut source = problem.gradient_source(outer_seed)?;
    let mut inner_rng = ChaCha8Rng::seed_from_u64(inner_seed);
    let spec = criterion_for(problem, cfg);
    let certified = matches!(cfg.mode, Mode::Nonconvex { certified: true });

    let mut trace = RunTrace::start("proxyprox", problem, cfg.eta, &cfg.w0, cfg.seed, outer_seed, inner_seed);
    if certified {
        trace.full_grad_sq_norms.push(problem.objective.gradient(&cfg.w0).norm_squared());
    }
    let mut w = cfg.w0.clone();
    let mut proxy_calls = 0u64;
    for k in 0..cfg.iterations {
        let g = source.sample(&w);
        let sp = ProxSubproblem::new(problem.proxy.clone(), w.clone(), g, cfg.eta)?;
        let (w_next, check, steps) = match &inner {
            InnerMethod::Sgd(c) => {
                let r = inner_sgd(&sp, &spec, c, &mut inner_rng)?;
                proxy_calls += r.proxy_grads_used;
                (r.w_next, (r.criterion_ok, r.lhs, r.rhs), r.steps_taken)
            }
            InnerMethod::Gd(c) => {
                let r = inner_gd(&sp, &spec, c)?;
                proxy_calls += r.proxy_grads_used;
                (r.w_next, (r.criterion_ok, r.lhs, r.rhs), r.steps_taken)
            }
            InnerMethod::Exact => {
                let w_next = quadratic_exact(&sp, problem.proxy_hessian.as_ref().expect("checked above"))?;
                let c = criterion_satisfied(&spec, &sp, &w_next, None)?;
                proxy_calls += 1;
                (w_next, (c.satisfied, c.lhs, c.rhs), 1)
            }
        };
        if w_next.iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence { step: k, step_size: cfg.eta });
        }
        let (ok, lhs, rhs) = check;
        if !ok {
            match cfg.on_inner_failure {
                FailurePolicy::Abort => return Err(Error::InnerCriterion { iteration: k, lhs, rhs }),
                FailurePolicy::Warn => log::warn!("outer iteration {k}: inner criterion failed ({lhs:e} > {rhs:e})"),
            }
        }
        trace.movement.push((&w_next - &w).norm_squared());
        trace.criterion_lhs.push(lhs);
        trace.criterion_rhs.push(rhs);
        trace.criterion_ok.push(ok);
        trace.inner_steps.push(steps);
        trace.objective_values.push(problem.objective.value(&w_next));
        trace.objective_grad_draws.push(source.draws_used());
        trace.proxy_grads.push(proxy_calls);
        if certified {
            trace.full_grad_sq_norms.push(problem.objective.gradient(&w_next).norm_squared());
        }
        trace.iterates.push(w_next.clone());
        w = w_next;
    }
    trace.averaged_iterate = match cfg.mode {
        Mode::StronglyConvex => Some(weighted_average(&trace.iterates[1..], cfg.eta, problem.mu)?),
        Mode::Convex => Some(uniform_average(&trace.iterates[1..])?),
        Mode::Nonconvex { .. } => None,
    };
    Ok(trace)
}

/// Plain SGD `w_{k+1} = w_k - η g_k` with the same seed derivation as [`proxyprox_run`].
pub fn sgd_baseline(problem: &ProblemInstance, eta: f64, iterations: usize, w0: &Point, seed: u64) -> Result<RunTrace> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::Config(format!("eta must be finite and > 0, got {eta}")));
    }
    check_dims(problem.dim(), w0.len())?;
    let outer_seed = rng_fork(seed, "outer");
    let mut source = problem.gradient_source(outer_seed)?;
    let mut trace = RunTrace::start("sgd", problem, eta, w0, seed, outer_seed, rng_fork(seed, "inner"));
    let mut w = w0.clone();
    for k in 0..iterations {
        let g = source.sample(&w);
        let w_next = &w - g * eta;
        if w_next.iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence { step: k, step_size: eta });
        }
        trace.movement.push((&w_next - &w).norm_squared());
        trace.objective_values.push(problem.objective.value(&w_next));
        trace.objective_grad_draws.push(source.draws_used());
        trace.proxy_grads.push(0);
        trace.iterates.push(w_next.clone());
        w = w_next;
    }
    if iterations > 0 {
        trace.averaged_iterate = Some(uniform_average(&trace.iterates[1..])?);
    }
    Ok(trace)
}

/// `L(w) + (μ/2)||w - w0||²` and the same for the proxy.
pub fn regularize_pair(problem: &ProblemInstance, mu: f64, w0: &Point) -> Result<ProblemInstance> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::Config(format!("regularization mu must be finite and > 0, got {mu}")));
    }
    check_dims(problem.dim(), w0.len())?;
    let wrap = |f: &SharedOracle| -> SharedOracle {
        Arc::new(ProximallyRegularized {
            inner: f.clone(),
            mu,
            center: w0.clone(),
        })
    };
    let mut out = ProblemInstance::new(
        wrap(&problem.objective),
        wrap(&problem.proxy),
        problem.noise,
        problem.sigma2,
        problem.delta,
        problem.mu + mu,
        problem.h_proxy + mu,
    )?;
    if let Some(p) = &problem.proxy_hessian {
        let d = p.nrows();
        out = out.with_proxy_hessian(p + DMatrix::identity(d, d) * mu);
    }
    out.f_star_lower = problem.f_star();
    Ok(out)
}

/// `Σ α_k w_k / Σ α_k` with `α_k = (1 + 2ημ/5)^{k-1}`, normalized by `α_K`.
pub fn weighted_average(iterates: &[Point], eta: f64, mu: f64) -> Result<Point> {
    let last = iterates.len().checked_sub(1).ok_or_else(|| Error::Contract("no iterates to average".into()))?;
    let r = 1.0 + 2.0 * eta * mu / 5.0;
    let mut acc = Point::zeros(iterates[0].len());
    let mut total = 0.0;
    for (k, w) in iterates.iter().enumerate() {
        let a = r.powi(k as i32 - last as i32);
        acc.axpy(a, w, 1.0);
        total += a;
    }
    Ok(acc / total)
}

pub fn uniform_average(iterates: &[Point]) -> Result<Point> {
    if iterates.is_empty() {
        return Err(Error::Contract("no iterates to average".into()));
    }
    let mut acc = Point::zeros(iterates[0].len());
    for w in iterates {
        acc += w;
    }
    Ok(acc / iterates.len() as f64)
}

/// Running weighted averages `w̄_1, …, w̄_K` (same weights as [`weighted_average`]).
pub fn weighted_average_prefixes(iterates: &[Point], eta: f64, mu: f64) -> Vec<Point> {
    let r = 1.0 + 2.0 * eta * mu / 5.0;
    let mut out = Vec::with_capacity(iterates.len());
    // q_K = Σ_k r^{k-K} = 1 + q_{K-1}/r
    let mut q = 0.0;
    for w in iterates {
        q = 1.0 + q / r;
        let next = match out.last() {
            None => w.clone(),
            Some(prev) => prev * (1.0 - 1.0 / q) + w / q,
        };
        out.push(next);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub eta: f64,
    pub iterations: usize,
    pub g2: f64,
    /// Regularization `1/(ηK)` for the convex schedule.
    pub mu_reg: Option<f64>,
}

/// Right-hand side of the strongly convex guarantee.
pub fn strongly_convex_rhs(b2: f64, eta: f64, mu: f64, k: usize, sigma2: f64, g2: f64) -> f64 {
    5.0 * b2 / (8.0 * eta) * (1.0 + 2.0 * eta * mu / 5.0).powf(1.0 - k as f64) + 2.0 * eta * sigma2 + g2 / mu
}

/// Right-hand side of the convex guarantee.
pub fn convex_rhs(b2: f64, eta: f64, k: usize, sigma2: f64, g2: f64) -> f64 {
    let kf = k as f64;
    9.0 * b2 / (8.0 * eta * kf) + 2.0 * eta * sigma2 + eta * kf * g2
}

/// Right-hand side of the non-convex guarantee.
pub fn nonconvex_rhs(gap: f64, eta: f64, k: usize, sigma2: f64) -> f64 {
    48.0 * gap / (eta * k as f64) + 8.0 * sigma2
}

pub fn schedule_strongly_convex(problem: &ProblemInstance, epsilon: f64, b2: f64) -> Result<Schedule> {
    schedule_strongly_convex_with(problem, epsilon, b2, SCHEDULE_C)
}

/// `η(K) = 5/(μ(K-1)) (1 + ln(5B²μ(K-1)/ε))`, clamped to `1/(4δ)`, with `K` increased
/// from the complexity bound until the step-size constraints hold and the guarantee is `<= 3ε`.
pub fn schedule_strongly_convex_with(problem: &ProblemInstance, epsilon: f64, b2: f64, c: f64) -> Result<Schedule> {
    let (mu, delta, s2) = (problem.mu, problem.delta, problem.sigma2);
    if !(mu > 0.0) || !(epsilon > 0.0) || !(b2 > 0.0) || !(c > 0.0) {
        return Err(Error::Config("schedule needs mu, epsilon, B2 and c all > 0".into()));
    }
    let e = std::f64::consts::E;
    let factor = 1.0 + delta / mu + s2 / (mu * epsilon);
    let log_term = (e + (mu + delta) * b2 / epsilon + s2 * b2 / (epsilon * epsilon)).ln();
    let mut k = ((c * factor * log_term).ceil() as usize).max(2);
    let g2 = 0.5 * mu * epsilon;
    for _ in 0..10_000 {
        let eta = strongly_convex_eta(mu, delta, b2, epsilon, k);
        let km1 = (k - 1) as f64;
        let ok = eta <= 5.0 / (2.0 * mu)
            && eta >= 1.0 / (2.0 * mu * km1)
            && eta >= 5.0 / (mu * km1) * (5.0 * b2 * mu * km1 / (4.0 * epsilon)).ln()
            && strongly_convex_rhs(b2, eta, mu, k, s2, g2) <= 3.0 * epsilon;
        if ok {
            return Ok(Schedule {
                eta,
                iterations: k,
                g2,
                mu_reg: None,
            });
        }
        k = k + k / 10 + 1;
    }
    Err(Error::Config("no feasible strongly convex schedule found".into()))
}

fn strongly_convex_eta(mu: f64, delta: f64, b2: f64, epsilon: f64, k: usize) -> f64 {
    let km1 = (k - 1) as f64;
    let eta = 5.0 / (mu * km1) * (1.0 + (5.0 * b2 * mu * km1 / epsilon).ln().max(0.0));
    if delta > 0.0 {
        eta.min(1.0 / (4.0 * delta))
    } else {
        eta
    }
}

pub fn schedule_convex(problem: &ProblemInstance, epsilon: f64, b2: f64) -> Result<Schedule> {
    schedule_convex_with(problem, epsilon, b2, SCHEDULE_C)
}

/// `K = ⌈c(δB²/ε + σ²B²/ε²)⌉`, `η = min(1/(4δ), B/(σ√K))`, `G² = σ²/K + δ²B²/K²`,
/// `μ_reg = 1/(ηK)`. When `σ = δ = 0`, `K = c` and `η = 9B²/(8εc)`.
pub fn schedule_convex_with(problem: &ProblemInstance, epsilon: f64, b2: f64, c: f64) -> Result<Schedule> {
    let (delta, s2) = (problem.delta, problem.sigma2);
    if !(epsilon > 0.0) || !(b2 > 0.0) || !(c > 0.0) {
        return Err(Error::Config("schedule needs epsilon, B2 and c all > 0".into()));
    }
    let degenerate = delta == 0.0 && s2 == 0.0;
    let k = if degenerate {
        c.ceil() as usize
    } else {
        ((c * (delta * b2 / epsilon + s2 * b2 / (epsilon * epsilon))).ceil() as usize).max(1)
    };
    let kf = k as f64;
    let eta = if degenerate {
        9.0 * b2 / (8.0 * epsilon * c)
    } else {
        let a = if delta > 0.0 { 1.0 / (4.0 * delta) } else { f64::INFINITY };
        let b = if s2 > 0.0 { (b2 / (s2 * kf)).sqrt() } else { f64::INFINITY };
        a.min(b)
    };
    Ok(Schedule {
        eta,
        iterations: k,
        g2: s2 / kf + delta * delta * b2 / (kf * kf),
        mu_reg: Some(1.0 / (eta * kf)),
    })
}

/// `(1/K) Σ_{k=1..K} ||∇L(w_k)||²` and its guarantee `48(L(w_0) - L*)/(ηK) + 8σ²`.
pub fn nonconvex_report(trace: &RunTrace, problem: &ProblemInstance) -> Result<(f64, f64)> {
    let k = trace.iterations();
    if k == 0 || trace.full_grad_sq_norms.len() != k + 1 {
        return Err(Error::Contract("trace has no certified gradient log".into()));
    }
    let f_star = problem
        .f_star()
        .ok_or_else(|| Error::Contract("problem has no known L* or lower bound".into()))?;
    let avg = trace.full_grad_sq_norms[1..].iter().sum::<f64>() / k as f64;
    let gap = trace.objective_values[0] - f_star;
    Ok((avg, nonconvex_rhs(gap, trace.eta, k, problem.sigma2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{NoiseModel, ZeroFunction};
    use crate::problems::Quadratic;

    fn p(v: &[f64]) -> Point {
        Point::from_vec(v.to_vec())
    }

    fn half_norm_problem(d: usize, noise: NoiseModel) -> ProblemInstance {
        let obj: SharedOracle = Arc::new(Quadratic::new(DMatrix::identity(d, d), Point::zeros(d), 0.0).unwrap());
        ProblemInstance::new(obj, Arc::new(ZeroFunction::new(d)), noise, 0.0, 1.0, 1.0, 0.0)
            .unwrap()
            .with_proxy_hessian(DMatrix::zeros(d, d))
    }

    #[test]
    fn sgd_contracts_geometrically_on_half_norm() {
        let prob = half_norm_problem(2, NoiseModel::Exact);
        let t = sgd_baseline(&prob, 0.5, 6, &p(&[1.0, 1.0]), 0).unwrap();
        for (k, w) in t.iterates.iter().enumerate() {
            assert_eq!(*w, p(&[0.5f64.powi(k as i32), 0.5f64.powi(k as i32)]));
        }
        assert_eq!(t.objective_grad_draws, vec![0, 1, 2, 3, 4, 5, 6]);
    }

    #[test]
    fn sgd_fixed_point_at_optimum() {
        let prob = half_norm_problem(3, NoiseModel::Exact);
        let t = sgd_baseline(&prob, 0.1, 5, &Point::zeros(3), 0).unwrap();
        assert!(t.iterates.iter().all(|w| *w == Point::zeros(3)));
    }

    #[test]
    fn zero_proxy_exact_solve_matches_sgd() {
        let prob = half_norm_problem(3, NoiseModel::AdditiveGaussian { sigma: 0.5 });
        let w0 = p(&[1.0, -2.0, 0.5]);
        let eta = 0.2;
        let cfg = OuterConfig::new(eta, 30, Mode::StronglyConvex, InnerMethod::Exact, w0.clone(), 11);
        let a = proxyprox_run(&prob, &cfg).unwrap();
        let b = sgd_baseline(&prob, eta, 30, &w0, 11).unwrap();
        assert_eq!(a.iterates, b.iterates);
        assert_eq!(a.objective_grad_draws, b.objective_grad_draws);
    }

    #[test]
    fn rejects_eta_above_quarter_inverse_delta() {
        let prob = half_norm_problem(1, NoiseModel::Exact);
        let cfg = OuterConfig::new(0.3, 1, Mode::Convex, InnerMethod::Exact, p(&[1.0]), 0);
        assert!(matches!(proxyprox_run(&prob, &cfg), Err(Error::Config(_))));
    }

    #[test]
    fn weighted_average_hand_cases() {
        let ws = vec![p(&[3.0]), p(&[6.0])];
        // 1 + 2ημ/5 = 2
        assert!((weighted_average(&ws, 1.0, 2.5).unwrap()[0] - 5.0).abs() < 1e-15);
        assert_eq!(weighted_average(&ws, 1.0, 0.0).unwrap(), p(&[4.5]));
        assert!(weighted_average(&[], 1.0, 1.0).is_err());
        let many: Vec<Point> = (0..100).map(|k| p(&[k as f64])).collect();
        let pre = weighted_average_prefixes(&many, 0.1, 1.0);
        assert!((pre[99][0] - weighted_average(&many, 0.1, 1.0).unwrap()[0]).abs() < 1e-10);
    }

    #[test]
    fn regularization_cancels_in_the_gap() {
        let prob = half_norm_problem(2, NoiseModel::Exact);
        let reg = regularize_pair(&prob, 0.3, &p(&[1.0, 1.0])).unwrap();
        assert!((reg.mu - 1.3).abs() < 1e-15);
        let w = p(&[0.2, -0.4]);
        let a = prob.similarity_gap();
        let b = reg.similarity_gap();
        use crate::oracle::FunctionOracle;
        assert!((a.gradient(&w) - b.gradient(&w)).amax() < 1e-12);
        assert!(regularize_pair(&prob, 0.0, &w).is_err());
    }

    #[test]
    fn convex_schedule_branches() {
        let mut prob = half_norm_problem(1, NoiseModel::Exact);
        prob.delta = 2.0;
        let s = schedule_convex(&prob, 0.1, 1.0).unwrap();
        assert_eq!(s.eta, 1.0 / 8.0);
        assert_eq!(s.iterations, 200);
        prob.delta = 0.0;
        prob.sigma2 = 4.0;
        let s = schedule_convex(&prob, 0.1, 1.0).unwrap();
        assert_eq!(s.iterations, 4000);
        assert!((s.eta - 1.0 / (2.0 * 4000f64.sqrt())).abs() < 1e-15);
        prob.sigma2 = 0.0;
        let s = schedule_convex(&prob, 0.1, 1.0).unwrap();
        assert_eq!(s.iterations, 10);
        assert!((convex_rhs(1.0, s.eta, s.iterations, 0.0, s.g2) - 0.1).abs() < 1e-12);
    }
}
