use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data_io::{load_mushrooms, parse_sparse_classification, rng_fork, scale_features, DatasetSource, ParseOptions, ScalingMode};
use crate::error::{Error, Result};
use crate::inner::InnerConfig;
use crate::oracle::{NoiseModel, Point, ProblemInstance};
use crate::outer::{proxyprox_run, regularize_pair, sgd_baseline, FailurePolicy, InnerMethod, Mode, OuterConfig, RunTrace};
use crate::problems::{
    least_squares_pair, logistic_pair, logistic_smoothness, nonconvex_testfn, quadratic_testbed, synthetic_regression,
    with_minibatch_noise, ProxyKind, QuadraticTestbed,
};

use super::bounds::mean_stderr;
use super::reference::solve_reference;

/// Problem descriptor of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum ProblemSpec {
    Quadratic(QuadraticTestbed),
    LeastSquares {
        n: usize,
        d: usize,
        condition: f64,
        seed: u64,
        #[serde(default)]
        reg_mu: f64,
        /// Minibatch noise of this size; exact gradients when absent.
        #[serde(default)]
        batch_size: Option<usize>,
    },
    Logistic {
        /// Sparse classification file; `mushrooms` (or its stand-in) when absent.
        #[serde(default)]
        path: Option<PathBuf>,
        #[serde(default)]
        zero_based: bool,
        #[serde(default)]
        scaling: ScalingMode,
        /// `reg_mu` as a multiple of the smoothness of the unregularized loss.
        reg_mu_rel: f64,
        proxy: ProxyKind,
        batch_size: usize,
    },
    Nonconvex {
        d: usize,
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        sigma: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Proxyprox,
    Sgd,
}

/// How `η` is chosen. Relative values are multiples of `1/(H + δ)`, the inverse
/// smoothness bound of the objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "type")]
pub enum StepSpec {
    Fixed { eta: f64 },
    Relative { multiplier: f64 },
    /// Pick the multiplier with the lowest mean loss after `select_at` steps, then run the full budget.
    Grid { multipliers: Vec<f64>, select_at: usize },
}

fn default_replicates() -> usize {
    1
}
fn default_mode() -> Mode {
    Mode::StronglyConvex
}
fn default_inner() -> InnerMethod {
    InnerMethod::Gd(InnerConfig::default())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub id: String,
    pub problem: ProblemSpec,
    pub algorithm: Algorithm,
    pub step: StepSpec,
    pub iterations: usize,
    #[serde(default = "default_mode")]
    pub mode: Mode,
    #[serde(default)]
    pub g2: f64,
    #[serde(default = "default_inner")]
    pub inner: InnerMethod,
    #[serde(default)]
    pub on_inner_failure: FailurePolicy,
    /// Run on `L(w) + (μ/2)||w - w0||²` (and the same for the proxy).
    #[serde(default)]
    pub proximal_mu: Option<f64>,
    #[serde(default)]
    pub w0: Option<Vec<f64>>,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentSpec {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }
}

/// Problem plus provenance recorded in the sidecar.
#[derive(Debug, Clone)]
pub struct BuiltProblem {
    pub instance: ProblemInstance,
    pub dataset_hash: Option<String>,
    pub dataset_source: Option<DatasetSource>,
    pub scaling: Option<ScalingMode>,
}

/// Reference accuracy requested from [`solve_reference`] for built problems.
pub const REFERENCE_TOL: f64 = 1e-10;

/// Instantiates the problem, computing a certified reference when the objective is
/// strongly convex and none is known.
pub fn build_problem(spec: &ProblemSpec) -> Result<BuiltProblem> {
    let mut built = match spec {
        ProblemSpec::Quadratic(cfg) => plain(quadratic_testbed(cfg)?),
        ProblemSpec::LeastSquares {
            n,
            d,
            condition,
            seed,
            reg_mu,
            batch_size,
        } => {
            let data = synthetic_regression(*n, *d, *condition, *seed)?;
            let inst = least_squares_pair(&data, *reg_mu)?;
            let inst = match batch_size {
                Some(b) => with_minibatch_noise(inst, *b, &Point::zeros(*d), rng_fork(*seed, "sigma2"))?,
                None => inst.with_noise(NoiseModel::Exact, 0.0),
            };
            BuiltProblem {
                dataset_hash: Some(data.content_hash()),
                ..plain(inst)
            }
        }
        ProblemSpec::Logistic {
            path,
            zero_based,
            scaling,
            reg_mu_rel,
            proxy,
            batch_size,
        } => {
            let (data, source) = match path {
                Some(p) => {
                    let raw = parse_sparse_classification(
                        p,
                        ParseOptions {
                            zero_based: *zero_based,
                            dim: None,
                        },
                    )?;
                    (scale_features(&raw, *scaling), DatasetSource::File(p.clone()))
                }
                None => {
                    let (d, s) = load_mushrooms()?;
                    (scale_features(&d, *scaling), s)
                }
            };
            let reg = reg_mu_rel * logistic_smoothness(&data.features, 0.0);
            let inst = logistic_pair(&data, reg, proxy)?;
            let inst = with_minibatch_noise(inst, *batch_size, &Point::zeros(data.d()), 0)?;
            BuiltProblem {
                instance: inst,
                dataset_hash: Some(data.content_hash()),
                dataset_source: Some(source),
                scaling: Some(*scaling),
            }
        }
        ProblemSpec::Nonconvex {
            d,
            amplitude,
            frequency,
            sigma,
        } => {
            let inst = nonconvex_testfn(*d, *amplitude, *frequency)?;
            let inst = if *sigma > 0.0 {
                inst.with_noise(NoiseModel::AdditiveGaussian { sigma: *sigma }, 0.0)
            } else {
                inst
            };
            plain(inst)
        }
    };
    let inst = &mut built.instance;
    if inst.reference.is_none() && inst.mu > 0.0 {
        let r = solve_reference(inst.objective.as_ref(), inst.mu, REFERENCE_TOL)?;
        inst.reference = Some(r);
    }
    Ok(built)
}

fn plain(instance: ProblemInstance) -> BuiltProblem {
    BuiltProblem {
        instance,
        dataset_hash: None,
        dataset_source: None,
        scaling: None,
    }
}

/// One row of the per-iteration CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub experiment_id: String,
    pub replicate: usize,
    pub k: usize,
    pub objective_grad_draws: u64,
    pub proxy_grads: u64,
    pub loss: f64,
    pub subopt: Option<f64>,
    pub crit_lhs: Option<f64>,
    pub crit_rhs: Option<f64>,
    pub movement: Option<f64>,
}

/// Mean and standard error across replicates at one budget value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub experiment_id: String,
    pub objective_grad_draws: u64,
    pub replicates: usize,
    pub mean_loss: f64,
    pub stderr_loss: f64,
    pub mean_subopt: Option<f64>,
    pub stderr_subopt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateSeeds {
    pub replicate: usize,
    pub seed: u64,
    pub outer_seed: u64,
    pub inner_seed: u64,
}

/// JSON sidecar written next to the CSV files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentMetadata {
    pub spec: ExperimentSpec,
    pub eta: f64,
    /// `(multiplier, mean loss at the selection step)` for grid runs.
    pub grid_scores: Vec<(f64, f64)>,
    pub dataset_hash: Option<String>,
    pub dataset_source: Option<DatasetSource>,
    pub scaling: Option<ScalingMode>,
    pub sigma2: f64,
    pub delta: f64,
    pub mu: f64,
    pub h_proxy: f64,
    pub f_star: Option<f64>,
    pub seeds: Vec<ReplicateSeeds>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub traces: Vec<RunTrace>,
    pub rows: Vec<TraceRow>,
    pub aggregate: Vec<AggregateRow>,
    pub metadata: ExperimentMetadata,
}

pub fn replicate_seed(master_seed: u64, replicate: usize) -> u64 {
    rng_fork(master_seed, &format!("replicate-{replicate}"))
}

/// Problem the runs operate on: the built instance, regularized when requested.
pub fn run_problem(spec: &ExperimentSpec, built: &BuiltProblem) -> Result<ProblemInstance> {
    match spec.proximal_mu {
        Some(mu) => regularize_pair(&built.instance, mu, &start_point(spec, &built.instance)?),
        None => Ok(built.instance.clone()),
    }
}

fn start_point(spec: &ExperimentSpec, problem: &ProblemInstance) -> Result<Point> {
    match &spec.w0 {
        Some(v) if v.len() != problem.dim() => Err(Error::DimensionMismatch {
            expected: problem.dim(),
            got: v.len(),
        }),
        Some(v) => Ok(Point::from_vec(v.clone())),
        None => Ok(Point::zeros(problem.dim())),
    }
}

fn run_once(spec: &ExperimentSpec, problem: &ProblemInstance, eta: f64, iterations: usize, seed: u64) -> Result<RunTrace> {
    let w0 = start_point(spec, problem)?;
    match spec.algorithm {
        Algorithm::Sgd => sgd_baseline(problem, eta, iterations, &w0, seed),
        Algorithm::Proxyprox => {
            let cfg = OuterConfig {
                g2: spec.g2,
                on_inner_failure: spec.on_inner_failure,
                ..OuterConfig::new(eta, iterations, spec.mode, spec.inner.clone(), w0, seed)
            };
            proxyprox_run(problem, &cfg)
        }
    }
}

fn run_replicates(spec: &ExperimentSpec, problem: &ProblemInstance, eta: f64, iterations: usize) -> Result<Vec<RunTrace>> {
    (0..spec.replicates)
        .into_par_iter()
        .map(|r| {
            run_once(spec, problem, eta, iterations, replicate_seed(spec.master_seed, r)).map_err(|e| Error::Replicate {
                replicate: r,
                source: Box::new(e),
            })
        })
        .collect()
}

/// Runs all replicates (in parallel), builds the CSV rows and aggregate, and writes
/// them under `spec.output` when set.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<ExperimentResult> {
    if spec.replicates == 0 || spec.iterations == 0 {
        return Err(Error::Config("replicates and iterations must be positive".into()));
    }
    let built = build_problem(&spec.problem)?;
    let problem = run_problem(spec, &built)?;
    let scale = 1.0 / (problem.h_proxy + problem.delta);
    let mut grid_scores = Vec::new();
    let eta = match &spec.step {
        StepSpec::Fixed { eta } => *eta,
        StepSpec::Relative { multiplier } => multiplier * scale,
        StepSpec::Grid { multipliers, select_at } => {
            let steps = (*select_at).min(spec.iterations).max(1);
            let mut best = None;
            for &m in multipliers {
                let score = match run_replicates(spec, &problem, m * scale, steps) {
                    Ok(ts) => ts.iter().map(|t| t.objective_values[steps]).sum::<f64>() / ts.len() as f64,
                    Err(e) => {
                        log::info!("grid point {m} rejected: {e}");
                        f64::INFINITY
                    }
                };
                let score = if score.is_finite() { score } else { f64::INFINITY };
                grid_scores.push((m, score));
                if best.is_none_or(|(_, s)| score < s) {
                    best = Some((m, score));
                }
            }
            match best {
                Some((m, s)) if s.is_finite() => m * scale,
                _ => return Err(Error::Config("every grid point diverged or was rejected".into())),
            }
        }
    };
    let traces = run_replicates(spec, &problem, eta, spec.iterations)?;
    let f_star = problem.f_star().filter(|_| problem.reference.is_some());
    let rows = trace_rows(&spec.id, &traces, f_star);
    let aggregate = aggregate_rows(&spec.id, &traces, f_star);
    let metadata = ExperimentMetadata {
        spec: spec.clone(),
        eta,
        grid_scores,
        dataset_hash: built.dataset_hash.clone(),
        dataset_source: built.dataset_source.clone(),
        scaling: built.scaling,
        sigma2: problem.sigma2,
        delta: problem.delta,
        mu: problem.mu,
        h_proxy: problem.h_proxy,
        f_star,
        seeds: traces
            .iter()
            .enumerate()
            .map(|(r, t)| ReplicateSeeds {
                replicate: r,
                seed: t.seed,
                outer_seed: t.outer_seed,
                inner_seed: t.inner_seed,
            })
            .collect(),
    };
    let result = ExperimentResult {
        traces,
        rows,
        aggregate,
        metadata,
    };
    if let Some(dir) = &spec.output {
        write_outputs(dir, &result)?;
    }
    Ok(result)
}

pub fn trace_rows(id: &str, traces: &[RunTrace], f_star: Option<f64>) -> Vec<TraceRow> {
    let mut rows = Vec::new();
    for (r, t) in traces.iter().enumerate() {
        for k in 0..=t.iterations() {
            let step = |v: &Vec<f64>| if k == 0 { None } else { v.get(k - 1).copied() };
            rows.push(TraceRow {
                experiment_id: id.to_string(),
                replicate: r,
                k,
                objective_grad_draws: t.objective_grad_draws[k] * t.batch_size as u64,
                proxy_grads: t.proxy_grads[k],
                loss: t.objective_values[k],
                subopt: f_star.map(|f| t.objective_values[k] - f),
                crit_lhs: step(&t.criterion_lhs),
                crit_rhs: step(&t.criterion_rhs),
                movement: step(&t.movement),
            });
        }
    }
    rows
}

pub fn aggregate_rows(id: &str, traces: &[RunTrace], f_star: Option<f64>) -> Vec<AggregateRow> {
    let k_max = traces.iter().map(RunTrace::iterations).min().unwrap_or(0);
    (0..=k_max)
        .map(|k| {
            let losses: Vec<f64> = traces.iter().map(|t| t.objective_values[k]).collect();
            let (mean_loss, stderr_loss) = mean_stderr(&losses);
            let sub = f_star.map(|f| mean_stderr(&losses.iter().map(|l| l - f).collect::<Vec<_>>()));
            AggregateRow {
                experiment_id: id.to_string(),
                objective_grad_draws: traces[0].objective_grad_draws[k] * traces[0].batch_size as u64,
                replicates: traces.len(),
                mean_loss,
                stderr_loss,
                mean_subopt: sub.map(|s| s.0),
                stderr_subopt: sub.map(|s| s.1),
            }
        })
        .collect()
}

fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    for row in rows {
        w.serialize(row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// `<dir>/<id>.csv`, `<dir>/<id>_aggregate.csv`, `<dir>/<id>.json` and `<dir>/traces/<id>_r<r>.json`.
pub fn write_outputs(dir: &Path, result: &ExperimentResult) -> Result<()> {
    let id = &result.metadata.spec.id;
    fs::create_dir_all(dir.join("traces"))?;
    write_csv(&dir.join(format!("{id}.csv")), &result.rows)?;
    write_csv(&dir.join(format!("{id}_aggregate.csv")), &result.aggregate)?;
    fs::write(dir.join(format!("{id}.json")), serde_json::to_string_pretty(&result.metadata)?)?;
    for (r, t) in result.traces.iter().enumerate() {
        fs::write(dir.join("traces").join(format!("{id}_r{r}.json")), serde_json::to_string(t)?)?;
    }
    Ok(())
}

/// Reads the sidecar and all replicate traces written by [`write_outputs`].
pub fn read_outputs(dir: &Path) -> Result<(ExperimentMetadata, Vec<RunTrace>)> {
    let mut sidecars: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    sidecars.sort();
    let sidecar = match sidecars.as_slice() {
        [one] => one.clone(),
        [] => return Err(Error::Config(format!("no experiment sidecar in {}", dir.display()))),
        _ => return Err(Error::Config(format!("several experiment sidecars in {}", dir.display()))),
    };
    let meta: ExperimentMetadata = serde_json::from_str(&fs::read_to_string(&sidecar)?)?;
    let id = &meta.spec.id;
    let traces = (0..meta.seeds.len())
        .map(|r| {
            let p = dir.join("traces").join(format!("{id}_r{r}.json"));
            Ok(serde_json::from_str(&fs::read_to_string(p)?)?)
        })
        .collect::<Result<Vec<RunTrace>>>()?;
    Ok((meta, traces))
}
