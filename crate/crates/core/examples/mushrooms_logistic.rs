//! Equal-budget comparison of ProxyProx (random-label proxy, 20 inner GD steps) and
//! SGD on regularized mushrooms logistic regression, written as trace CSVs.
//!
//! ```bash
//! cargo run --release --example mushrooms_logistic -- [output_dir] [replicates]
//! ```
//!
//! A real `mushrooms` file is picked up from `$PROXYPROX_DATA_DIR`; otherwise a
//! synthetic stand-in of the same shape is used.

use std::path::{Path, PathBuf};

use proxyprox::harness::{run_experiment, ExperimentSpec};

fn spec(algorithm: &str, replicates: usize, output: &Path) -> ExperimentSpec {
    let text = format!(
        r#"{{
        "id": "mushrooms-{algorithm}",
        "algorithm": "{algorithm}",
        "problem": {{
            "type": "logistic",
            "reg_mu_rel": 1e-6,
            "proxy": {{"kind": "random_label_logistic", "seed": 1}},
            "batch_size": 256
        }},
        "step": {{"type": "relative", "multiplier": 1.0}},
        "iterations": 976,
        "mode": {{"type": "strongly_convex"}},
        "inner": {{"method": "gd", "max_steps": 20, "check_every": 20}},
        "on_inner_failure": "warn",
        "replicates": {replicates},
        "master_seed": 6
    }}"#
    );
    let mut spec: ExperimentSpec = serde_json::from_str(&text).expect("valid spec");
    spec.output = Some(output.join(algorithm));
    spec
}

fn main() -> proxyprox::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("proxyprox-mushrooms"));
    let replicates = args.next().and_then(|s| s.parse().ok()).unwrap_or(2);

    for algorithm in ["sgd", "proxyprox"] {
        let res = run_experiment(&spec(algorithm, replicates, &out))?;
        println!("{algorithm}: eta = {:.4e}, dataset {:?}", res.metadata.eta, res.metadata.dataset_source);
        for row in res.aggregate.iter().step_by(244) {
            println!(
                "  samples {:>7}  mean loss {:.6}  subopt {:.3e}",
                row.objective_grad_draws,
                row.mean_loss,
                row.mean_subopt.unwrap_or(f64::NAN)
            );
        }
    }
    println!("traces written under {}", out.display());
    Ok(())
}
