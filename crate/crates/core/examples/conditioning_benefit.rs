//! On an ill-conditioned quadratic with a nearly exact proxy, a handful of proximal
//! steps with large `η` beats many gradient steps at `1/H`.

use proxyprox::outer::{proxyprox_run, InnerMethod, Mode, OuterConfig};
use proxyprox::problems::{quadratic_testbed, QuadraticTestbed};
use proxyprox::Point;

fn main() -> proxyprox::Result<()> {
    let cfg = QuadraticTestbed {
        dim: 20,
        condition: 1e4,
        alpha: 0.0,
        sigma: 0.0,
        ..QuadraticTestbed::default()
    };
    let problem = quadratic_testbed(&cfg)?;
    let w0 = Point::zeros(cfg.dim);
    let f0 = problem.objective.value(&w0);

    let eta = 10.0 / problem.mu;
    let run = proxyprox_run(&problem, &OuterConfig::new(eta, 5, Mode::StronglyConvex, InnerMethod::Exact, w0.clone(), 0))?;
    println!("proxyprox, eta = 10/mu, 5 steps: suboptimality {:e}", run.objective_values[5]);

    // full-gradient descent at 1/H until it reaches the same accuracy
    let target = run.objective_values[5].max(1e-10);
    let step = 1.0 / problem.h_proxy;
    let mut w = w0;
    let mut steps = 0;
    while problem.objective.value(&w) > target && steps < 1_000_000 {
        w -= problem.objective.gradient(&w) * step;
        steps += 1;
    }
    println!("gradient descent at 1/H: {steps} steps to reach {target:e} (from {f0:.3})");
    Ok(())
}
