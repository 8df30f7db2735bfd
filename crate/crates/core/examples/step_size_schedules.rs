//! Step size and iteration count from the complexity schedules, then a run at those
//! parameters on the quadratic testbed to see the `3ε` target met.

use proxyprox::outer::{
    proxyprox_run, regularize_pair, schedule_convex, schedule_strongly_convex, InnerMethod, Mode, OuterConfig,
};
use proxyprox::problems::{quadratic_testbed, QuadraticTestbed};
use proxyprox::Point;

fn main() -> proxyprox::Result<()> {
    let problem = quadratic_testbed(&QuadraticTestbed {
        condition: 100.0,
        sigma: 0.5,
        ..QuadraticTestbed::default()
    })?;
    let w0 = Point::zeros(problem.dim());
    let w_star = problem.reference.as_ref().expect("testbed is certified").point();
    let b2 = (&w0 - &w_star).norm_squared();
    let eps = 0.05;

    let s = schedule_strongly_convex(&problem, eps, b2)?;
    println!("strongly convex: eta = {:.4e}, K = {}, G^2 = {:.3e}", s.eta, s.iterations, s.g2);
    let runs = 20;
    let mut total = 0.0;
    for seed in 0..runs {
        let mut cfg = OuterConfig::new(s.eta, s.iterations, Mode::StronglyConvex, InnerMethod::Exact, w0.clone(), seed);
        cfg.g2 = s.g2;
        let trace = proxyprox_run(&problem, &cfg)?;
        total += problem.objective.value(trace.averaged_iterate.as_ref().expect("averaged"));
    }
    println!("  mean L(w_bar) - L* = {:.4e}  (target 3 eps = {:.3e})", total / runs as f64, 3.0 * eps);

    let c = schedule_convex(&problem, eps, b2)?;
    let mu_reg = c.mu_reg.expect("convex schedule sets mu_reg");
    println!("convex: eta = {:.4e}, K = {}, G^2 = {:.3e}, mu_reg = {mu_reg:.3e}", c.eta, c.iterations, c.g2);
    let reg = regularize_pair(&problem, mu_reg, &w0)?;
    let mut cfg = OuterConfig::new(c.eta, c.iterations, Mode::Convex, InnerMethod::Exact, w0.clone(), 0);
    cfg.g2 = c.g2;
    let trace = proxyprox_run(&reg, &cfg)?;
    let w_bar = trace.averaged_iterate.expect("averaged");
    println!("  L(w_bar) - L* = {:.4e} for one seed", problem.objective.value(&w_bar));
    Ok(())
}
