//! Replicated ProxyProx runs on the quadratic testbed, checked against the strongly
//! convex guarantee for the weighted average at every `K`.

use proxyprox::harness::{check_bound, Theorem};
use proxyprox::outer::{proxyprox_run, InnerMethod, Mode, OuterConfig};
use proxyprox::problems::{quadratic_testbed, QuadraticTestbed};
use proxyprox::Point;

fn main() -> proxyprox::Result<()> {
    let problem = quadratic_testbed(&QuadraticTestbed::default())?;
    println!("testbed: d = {}, mu = {}, delta = {:.3}, H = {:.1}, sigma^2 = {}", problem.dim(), problem.mu, problem.delta, problem.h_proxy, problem.sigma2);

    let eta = 0.01;
    let k = 200;
    let traces = (0..40)
        .map(|seed| {
            let cfg = OuterConfig::new(eta, k, Mode::StronglyConvex, InnerMethod::Exact, Point::zeros(problem.dim()), seed);
            proxyprox_run(&problem, &cfg)
        })
        .collect::<proxyprox::Result<Vec<_>>>()?;

    let report = check_bound(&traces, Theorem::StronglyConvex, &problem, 0.0)?;
    println!("B^2 = {:.3}, replicates = {}", report.b2, report.replicates);
    println!("{:>5} {:>12} {:>12} {:>12}", "K", "mean", "stderr", "rhs");
    for r in report.rows.iter().filter(|r| r.k == 1 || r.k % 25 == 0) {
        println!("{:>5} {:>12.4e} {:>12.2e} {:>12.4e}", r.k, r.mean, r.stderr, r.rhs);
    }
    println!("all K pass: {}", report.all_pass());
    Ok(())
}
