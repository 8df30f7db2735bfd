//! Reference solutions, theoretical-bound checks and the replicate experiment runner.

mod bounds;
mod experiment;
mod reference;

pub use bounds::{check_bound, mean_stderr, BoundReport, BoundRow, Theorem};
pub use experiment::{
    aggregate_rows, build_problem, read_outputs, replicate_seed, run_experiment, run_problem, trace_rows, write_outputs,
    AggregateRow, Algorithm, BuiltProblem, ExperimentMetadata, ExperimentResult, ExperimentSpec, ProblemSpec,
    ReplicateSeeds, StepSpec, TraceRow, REFERENCE_TOL,
};
pub use reference::{solve_reference, solve_reference_from, MAX_GRADIENT_EVALUATIONS};
