use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use proxyprox::data_io::{parse_sparse_classification, ParseOptions};
use proxyprox::harness::{build_problem, check_bound, read_outputs, run_experiment, solve_reference, ExperimentSpec, ProblemSpec, Theorem, REFERENCE_TOL};

#[derive(Parser)]
#[command(name = "proxyprox", version, about = "Proxy-based stochastic proximal-point experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON spec.
    Run {
        #[arg(long)]
        spec: PathBuf,
        /// Overrides the spec's output directory.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compute a certified minimizer for a problem (JSON problem or experiment spec).
    Reference {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long, default_value_t = REFERENCE_TOL)]
        tol: f64,
    },
    /// Check written traces against a theorem's right-hand side.
    CheckBound {
        #[arg(long)]
        theorem: u8,
        #[arg(long)]
        traces: PathBuf,
    },
    /// Parse a sparse classification file.
    Parse {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        stats: bool,
        #[arg(long)]
        zero_based: bool,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(code) => code,
        // a closed pipe (e.g. `| head`) is not a failure
        Err(proxyprox::Error::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> proxyprox::Result<ExitCode> {
    let mut out = io::stdout().lock();
    match cli.command {
        Command::Run { spec, output } => {
            let mut spec = ExperimentSpec::from_json_file(spec)?;
            if output.is_some() {
                spec.output = output;
            }
            let res = run_experiment(&spec)?;
            let last = res.aggregate.last().expect("at least one row");
            writeln!(
                out,
                "{}: eta={:e} replicates={} draws={} mean_loss={:e}{}",
                spec.id,
                res.metadata.eta,
                spec.replicates,
                last.objective_grad_draws,
                last.mean_loss,
                last.mean_subopt.map(|s| format!(" mean_subopt={s:e}")).unwrap_or_default()
            )?;
        }
        Command::Reference { problem, tol } => {
            let text = std::fs::read_to_string(problem)?;
            let spec: ProblemSpec = match serde_json::from_str::<ExperimentSpec>(&text) {
                Ok(e) => e.problem,
                Err(_) => serde_json::from_str(&text)?,
            };
            let built = build_problem(&spec)?;
            let inst = built.instance;
            let r = match inst.reference {
                Some(r) => r,
                None => solve_reference(inst.objective.as_ref(), inst.mu, tol)?,
            };
            writeln!(out, "{}", serde_json::to_string_pretty(&r)?)?;
        }
        Command::CheckBound { theorem, traces } => {
            let theorem = Theorem::from_number(theorem)?;
            let (meta, traces) = read_outputs(&traces)?;
            let built = build_problem(&meta.spec.problem)?;
            let problem = match theorem {
                // the convex guarantee is stated for the unregularized objective
                Theorem::Convex => built.instance.clone(),
                _ => proxyprox::harness::run_problem(&meta.spec, &built)?,
            };
            let report = check_bound(&traces, theorem, &problem, meta.spec.g2)?;
            writeln!(out, "k,mean,stderr,rhs,pass")?;
            for r in &report.rows {
                writeln!(out, "{},{:e},{:e},{:e},{}", r.k, r.mean, r.stderr, r.rhs, r.pass)?;
            }
            if !report.all_pass() {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Parse {
            input,
            stats,
            zero_based,
        } => {
            let data = parse_sparse_classification(&input, ParseOptions { zero_based, dim: None })?;
            writeln!(out, "parsed {} rows, {} features", data.n(), data.d())?;
            if stats {
                let pos = data.labels.iter().filter(|&&y| y == 1.0).count();
                writeln!(out, "nonzeros: {}", data.features.nnz())?;
                writeln!(out, "positive labels: {pos} ({:.2}%)", 100.0 * pos as f64 / data.n() as f64)?;
                writeln!(out, "sha256: {}", data.content_hash())?;
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
