//! With a zero proxy the proximal step is `w_k - η g_k`, i.e. plain SGD.
//!
//! Runs both algorithms on the mushrooms logistic problem from the same seed and
//! reports the largest coordinate difference between the iterate sequences.
//!
//! ```bash
//! cargo run --release --example sgd_reduction
//! ```

use proxyprox::data_io::load_mushrooms;
use proxyprox::outer::{proxyprox_run, sgd_baseline, InnerMethod, Mode, OuterConfig};
use proxyprox::problems::{logistic_pair, logistic_smoothness, with_minibatch_noise, ProxyKind};
use proxyprox::Point;

fn main() -> proxyprox::Result<()> {
    let (data, source) = load_mushrooms()?;
    println!("dataset: {source:?}, n = {}, d = {}", data.n(), data.d());

    let h = logistic_smoothness(&data.features, 0.0);
    let problem = logistic_pair(&data, 1e-6 * h, &ProxyKind::Zero)?;
    let w0 = Point::zeros(data.d());
    let problem = with_minibatch_noise(problem, 32, &w0, 1)?;

    let eta = 0.5 / h;
    let cfg = OuterConfig::new(eta, 100, Mode::StronglyConvex, InnerMethod::Exact, w0.clone(), 42);
    let pp = proxyprox_run(&problem, &cfg)?;
    let sgd = sgd_baseline(&problem, eta, 100, &w0, 42)?;

    let max_diff = pp
        .iterates
        .iter()
        .zip(&sgd.iterates)
        .map(|(a, b)| (a - b).amax())
        .fold(0.0, f64::max);
    println!("eta = {eta:.4e}, K = 100");
    println!("final loss: proxyprox {:.10}, sgd {:.10}", pp.objective_values[100], sgd.objective_values[100]);
    println!("max |w_pp - w_sgd| over all iterates: {max_diff:e}");
    Ok(())
}
