use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::{Point, ProblemInstance};
use crate::outer::{convex_rhs, nonconvex_report, strongly_convex_rhs, uniform_average, weighted_average_prefixes, RunTrace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    /// Strongly convex, weighted average.
    StronglyConvex,
    /// Convex via regularization, uniform average.
    Convex,
    /// Non-convex, average squared gradient norm.
    Nonconvex,
}

impl Theorem {
    pub fn from_number(n: u8) -> Result<Self> {
        match n {
            1 => Ok(Theorem::StronglyConvex),
            2 => Ok(Theorem::Convex),
            3 => Ok(Theorem::Nonconvex),
            _ => Err(Error::Config(format!("unknown theorem {n}; expected 1, 2 or 3"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub k: usize,
    pub mean: f64,
    pub stderr: f64,
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theorem: Theorem,
    pub replicates: usize,
    pub b2: f64,
    pub rows: Vec<BoundRow>,
}

impl BoundReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn row(k: usize, samples: &[f64], rhs: f64) -> BoundRow {
    let (mean, stderr) = mean_stderr(samples);
    BoundRow {
        k,
        mean,
        stderr,
        rhs,
        pass: mean <= rhs + 2.0 * stderr,
    }
}

/// Compares replicate traces with a theorem's right-hand side, using `σ², δ, μ, L*`
/// from `problem` and the mean `||w_0 - w*||²` over the traces.
///
/// - strongly convex: one row per `K = 1..=K_max` for the weighted average.
/// - convex: one row at the run length for the uniform average; `problem` is the
///   unregularized instance and `g2` the criterion slack used.
/// - non-convex: one row with the average squared gradient norm.
pub fn check_bound(traces: &[RunTrace], theorem: Theorem, problem: &ProblemInstance, g2: f64) -> Result<BoundReport> {
    let first = traces.first().ok_or_else(|| Error::Contract("no traces to check".into()))?;
    let eta = first.eta;
    let k_max = first.iterations();
    if traces.iter().any(|t| t.eta != eta || t.iterations() != k_max) || k_max == 0 {
        return Err(Error::Contract("traces must share eta and a positive iteration count".into()));
    }
    if problem.delta > 0.0 && eta > (1.0 + 1e-12) / (4.0 * problem.delta) {
        return Err(Error::Config(format!(
            "eta = {eta} violates eta <= 1/(4 delta) = {}",
            1.0 / (4.0 * problem.delta)
        )));
    }
    let s2 = problem.sigma2;
    let (rows, b2) = match theorem {
        Theorem::StronglyConvex | Theorem::Convex => {
            let reference = problem
                .reference
                .as_ref()
                .ok_or_else(|| Error::Contract("bound check needs a reference solution".into()))?;
            let w_star = reference.point();
            let b2 = traces.iter().map(|t| (&t.iterates[0] - &w_star).norm_squared()).sum::<f64>() / traces.len() as f64;
            let f = |w: &Point| problem.objective.value(w) - reference.f_star;
            if theorem == Theorem::StronglyConvex {
                if !(problem.mu > 0.0) {
                    return Err(Error::Contract("strongly convex bound needs mu > 0".into()));
                }
                let per_trace: Vec<Vec<f64>> = traces
                    .iter()
                    .map(|t| weighted_average_prefixes(&t.iterates[1..], eta, problem.mu).iter().map(f).collect())
                    .collect();
                let rows = (1..=k_max)
                    .map(|k| {
                        let xs: Vec<f64> = per_trace.iter().map(|v| v[k - 1]).collect();
                        row(k, &xs, strongly_convex_rhs(b2, eta, problem.mu, k, s2, g2))
                    })
                    .collect();
                (rows, b2)
            } else {
                let xs = traces
                    .iter()
                    .map(|t| Ok(f(&uniform_average(&t.iterates[1..])?)))
                    .collect::<Result<Vec<f64>>>()?;
                (vec![row(k_max, &xs, convex_rhs(b2, eta, k_max, s2, g2))], b2)
            }
        }
        Theorem::Nonconvex => {
            let mut xs = Vec::with_capacity(traces.len());
            let mut rhs = Vec::with_capacity(traces.len());
            for t in traces {
                let (avg, bound) = nonconvex_report(t, problem)?;
                xs.push(avg);
                rhs.push(bound);
            }
            let rhs_mean = rhs.iter().sum::<f64>() / rhs.len() as f64;
            (vec![row(k_max, &xs, rhs_mean)], f64::NAN)
        }
    };
    Ok(BoundReport {
        theorem,
        replicates: traces.len(),
        b2,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mean_and_stderr() {
        let (m, s) = mean_stderr(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_stderr(&[7.0]), (7.0, 0.0));
    }

    #[test]
    fn theorem_numbers() {
        assert_eq!(Theorem::from_number(2).unwrap(), Theorem::Convex);
        assert!(Theorem::from_number(4).is_err());
    }
}
