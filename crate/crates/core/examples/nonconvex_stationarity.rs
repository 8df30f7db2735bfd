//! Certified non-convex mode on the cosine-perturbed least-squares function: the
//! average squared gradient norm over the run against its guarantee.

use proxyprox::harness::{check_bound, Theorem};
use proxyprox::inner::InnerConfig;
use proxyprox::oracle::NoiseModel;
use proxyprox::outer::{proxyprox_run, InnerMethod, Mode, OuterConfig};
use proxyprox::problems::nonconvex_testfn;
use proxyprox::Point;

fn main() -> proxyprox::Result<()> {
    let problem = nonconvex_testfn(10, 0.5, 2.0)?.with_noise(NoiseModel::AdditiveGaussian { sigma: 0.5 }, 0.0);
    let eta = 1.0 / (4.0 * problem.delta);
    println!("delta = {}, H = {:.3}, sigma^2 = {}, eta = {eta}", problem.delta, problem.h_proxy, problem.sigma2);

    let inner = InnerMethod::Gd(InnerConfig {
        max_steps: 500,
        ..InnerConfig::default()
    });
    let traces = (0..20)
        .map(|seed| {
            let cfg = OuterConfig::new(eta, 200, Mode::Nonconvex { certified: true }, inner.clone(), Point::zeros(10), seed);
            proxyprox_run(&problem, &cfg)
        })
        .collect::<proxyprox::Result<Vec<_>>>()?;

    let steps: usize = traces.iter().flat_map(|t| &t.inner_steps).sum();
    println!("mean inner steps per outer step: {:.1}", steps as f64 / (20.0 * 200.0));
    let report = check_bound(&traces, Theorem::Nonconvex, &problem, 0.0)?;
    let r = &report.rows[0];
    println!("avg ||grad L||^2 = {:.4} +- {:.4}, bound = {:.4}, pass = {}", r.mean, r.stderr, r.rhs, r.pass);
    Ok(())
}
