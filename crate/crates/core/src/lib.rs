//! Proxy-based inexact stochastic proximal-point optimization.
//!
//! Each outer step draws one stochastic gradient `g_k` of the objective `L` and
//! approximately minimizes
//!
//! ```text
//! φ_k(w) = <g_k, w> + D_F̂(w; w_k) + ||w - w_k||² / (2η)
//! ```
//!
//! where `F̂` is a cheap proxy whose curvature resembles `L`. With `F̂ ≡ 0` this is
//! SGD; with a quadratic proxy it is a preconditioned SGD step.
//!
//! Module map:
//! - [`oracle`]: function oracles, stochastic gradient sources, problem instances
//! - [`subproblem`]: `φ_k`, Bregman divergences, inexactness criteria
//! - [`inner`]: inner solvers (SGD, GD, exact quadratic solve)
//! - [`outer`]: the outer loop, schedules, averaging, SGD baseline
//! - [`problems`]: quadratics, least squares, logistic regression, a non-convex test function
//! - [`data_io`]: sparse dataset parsing, scaling, seed derivation
//! - [`harness`]: reference solutions, bound checks, experiment runner

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod data_io;
pub mod error;
pub mod harness;
pub mod inner;
pub mod linalg;
pub mod oracle;
pub mod outer;
pub mod problems;
pub mod subproblem;

pub use error::{Error, Result};
pub use oracle::{FunctionOracle, NoiseModel, Point, ProblemInstance, ReferenceSolution, SharedOracle, StochasticGradientSource};
