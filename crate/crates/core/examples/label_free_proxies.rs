//! Proxies built without labels share the Hessian of the objective, so `δ = 0`.
//! A subsampled proxy only approximates it. Prints power-iteration estimates of
//! `||∇²(L - F̂)||` for each proxy on mushrooms and on synthetic regression data.

use proxyprox::data_io::load_mushrooms;
use proxyprox::problems::{
    estimate_delta, least_squares_pair, logistic_pair, logistic_smoothness, synthetic_regression, ProxyKind,
};

fn main() -> proxyprox::Result<()> {
    let (data, _) = load_mushrooms()?;
    let h = logistic_smoothness(&data.features, 0.0);
    println!("mushrooms logistic, H = {h:.4}");
    let kinds = [
        ("label_free", ProxyKind::LabelFreeLogistic),
        ("random_label", ProxyKind::RandomLabelLogistic { seed: 3 }),
        ("subsample m=500", ProxyKind::Subsample { m: 500, seed: 3 }),
    ];
    for (name, kind) in kinds {
        let inst = logistic_pair(&data, 1e-6 * h, &kind)?;
        let est = estimate_delta(inst.objective.as_ref(), inst.proxy.as_ref(), 10, 0).unwrap_or(f64::NAN);
        println!("  {name:<16} declared delta = {:.3e}, estimated = {est:.3e}", inst.delta);
    }

    let reg = synthetic_regression(400, 20, 100.0, 5)?;
    let inst = least_squares_pair(&reg, 0.0)?;
    let est = estimate_delta(inst.objective.as_ref(), inst.proxy.as_ref(), 10, 0)?;
    println!("synthetic least squares, covariance proxy: H = {:.4}, estimated delta = {est:.3e}", inst.h_proxy);
    Ok(())
}
