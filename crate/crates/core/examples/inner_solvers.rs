//! Solving one proximal subproblem `φ_k` on mushrooms with inner SGD (minibatch proxy
//! gradients) and inner GD, stopping once the convex-mode inexactness criterion holds.
//! Constant-step SGD stalls at its noise floor; the `O(1/t)` decay reaches the slack.

use proxyprox::data_io::load_mushrooms;
use proxyprox::inner::{inner_gd, inner_sgd, InnerConfig, InnerNoise, StepSchedule};
use proxyprox::problems::{logistic_pair, logistic_smoothness, with_minibatch_noise, ProxyKind};
use proxyprox::subproblem::{CriterionSpec, ProxSubproblem};
use proxyprox::Point;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> proxyprox::Result<()> {
    let (data, _) = load_mushrooms()?;
    let h = logistic_smoothness(&data.features, 0.0);
    let w0 = Point::zeros(data.d());
    let problem = with_minibatch_noise(logistic_pair(&data, 0.0, &ProxyKind::LabelFreeLogistic)?, 256, &w0, 0)?;

    // G² = σ²/K, the convex schedule's slack when δ = 0
    let k = 1000;
    let eta = 0.05;
    let g2 = problem.sigma2 / k as f64;
    println!("H = {h:.4}, sigma^2 = {:.4e}, G^2 = {g2:.3e}", problem.sigma2);

    let mut source = problem.gradient_source(11)?;
    let g = source.sample(&w0);
    let sp = ProxSubproblem::new(problem.proxy.clone(), w0, g, eta)?;
    let spec = CriterionSpec::convex(k, g2, eta);

    let sgd_cfg = InnerConfig {
        max_steps: 2000,
        smoothness: Some(problem.h_proxy),
        batch_size: 256,
        check_every: 10,
        noise: InnerNoise::Minibatch,
        ..InnerConfig::default()
    };
    for schedule in [StepSchedule::Constant, StepSchedule::StronglyConvexDecay] {
        let cfg = InnerConfig { schedule, ..sgd_cfg.clone() };
        let r = inner_sgd(&sp, &spec, &cfg, &mut ChaCha8Rng::seed_from_u64(5))?;
        println!("inner SGD {schedule:?}: ok = {}, steps = {}, lhs = {:.3e}, rhs = {:.3e}", r.criterion_ok, r.steps_taken, r.lhs, r.rhs);
    }
    let decay = InnerConfig {
        schedule: StepSchedule::StronglyConvexDecay,
        ..sgd_cfg
    };
    let sgd = inner_sgd(&sp, &spec, &decay, &mut ChaCha8Rng::seed_from_u64(5))?;

    let gd_cfg = InnerConfig {
        max_steps: 2000,
        smoothness: Some(problem.h_proxy),
        ..InnerConfig::default()
    };
    let gd = inner_gd(&sp, &spec, &gd_cfg)?;
    println!("inner GD: ok = {}, steps = {}, lhs = {:.3e}, rhs = {:.3e}", gd.criterion_ok, gd.steps_taken, gd.lhs, gd.rhs);
    println!("|w_sgd - w_gd| = {:.3e}", (&sgd.w_next - &gd.w_next).norm());
    Ok(())
}
