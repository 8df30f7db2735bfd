//! Drives the replicate harness from a JSON experiment description, writes trace and
//! aggregate CSVs, reads them back and checks the convex guarantee.

use proxyprox::harness::{build_problem, check_bound, read_outputs, run_experiment, ExperimentSpec, Theorem};

const SPEC: &str = r#"{
    "id": "least-squares-convex",
    "algorithm": "proxyprox",
    "problem": {"type": "least_squares", "n": 500, "d": 10, "condition": 50.0, "seed": 2, "batch_size": 8},
    "step": {"type": "relative", "multiplier": 2.0},
    "iterations": 150,
    "mode": {"type": "convex"},
    "inner": {"method": "exact"},
    "replicates": 8,
    "master_seed": 3
}"#;

fn main() -> proxyprox::Result<()> {
    let mut spec: ExperimentSpec = serde_json::from_str(SPEC)?;
    let dir = std::env::temp_dir().join("proxyprox-run-spec");
    spec.output = Some(dir.clone());

    let res = run_experiment(&spec)?;
    let last = res.aggregate.last().expect("rows");
    println!("eta = {:.4e}, sigma^2 = {:.4e}", res.metadata.eta, res.metadata.sigma2);
    println!("final mean loss {:.6e} after {} component gradients", last.mean_loss, last.objective_grad_draws);

    let (meta, traces) = read_outputs(&dir)?;
    let problem = build_problem(&meta.spec.problem)?.instance;
    let report = check_bound(&traces, Theorem::Convex, &problem, meta.spec.g2)?;
    let r = &report.rows[0];
    println!("uniform average: {:.4e} vs bound {:.4e} (pass: {})", r.mean, r.rhs, r.pass);
    println!("outputs in {}", dir.display());
    Ok(())
}
