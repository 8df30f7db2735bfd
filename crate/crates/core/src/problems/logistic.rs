use std::sync::Arc;

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data_io::{sparse_dot, Dataset, SparseMatrix};
use crate::error::{check_dims, Error, Result};
use crate::linalg::symmetric_eigenvalues;
use crate::oracle::{estimate_minibatch_variance, FunctionOracle, NoiseModel, Point, ProblemInstance, SharedOracle, ZeroFunction};

use super::{estimate_delta, Quadratic};

/// `s(z) = 1 / (1 + e^{-z})` without overflow for large `|z|`.
pub fn sigmoid_stable(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)`.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// `-ln s(z)`, accurate for very negative `z` (where it is `≈ -z`).
pub fn neg_log_sigmoid(z: f64) -> f64 {
    softplus(-z)
}

/// Mean logistic loss `(1/n) Σ [softplus(x_iᵀw) - y_i x_iᵀw] + (reg/2)||w||²`, `y ∈ {0, 1}`.
#[derive(Debug, Clone)]
pub struct Logistic {
    features: Arc<SparseMatrix>,
    labels: Vec<f64>,
    reg: f64,
}

impl Logistic {
    pub fn new(features: Arc<SparseMatrix>, labels: Vec<f64>, reg: f64) -> Result<Self> {
        check_dims(features.nrows(), labels.len())?;
        if labels.iter().any(|&y| y != 0.0 && y != 1.0) {
            return Err(Error::Contract("logistic labels must be 0 or 1".into()));
        }
        if features.nrows() == 0 {
            return Err(Error::Contract("logistic loss needs at least one sample".into()));
        }
        Ok(Self { features, labels, reg })
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    fn term_slope(&self, i: usize, w: &Point) -> f64 {
        sigmoid_stable(self.features.row_dot(i, w)) - self.labels[i]
    }
}

impl FunctionOracle for Logistic {
    fn dim(&self) -> usize {
        self.features.ncols()
    }
    fn value(&self, w: &Point) -> f64 {
        let (indptr, indices, values) = self.features.raw_parts();
        let w = w.as_slice();
        let mut s = 0.0;
        for (i, &y) in self.labels.iter().enumerate() {
            let (a, b) = (indptr[i], indptr[i + 1]);
            let z = sparse_dot(&indices[a..b], &values[a..b], w);
            s += softplus(z) - y * z;
        }
        let sq: f64 = w.iter().map(|x| x * x).sum();
        s / self.labels.len() as f64 + 0.5 * self.reg * sq
    }
    fn gradient(&self, w: &Point) -> Point {
        // single fused pass: margin, slope and scatter per row
        let (indptr, indices, values) = self.features.raw_parts();
        let inv_n = 1.0 / self.labels.len() as f64;
        let mut g = w * self.reg;
        let (ws, gs) = (w.as_slice(), g.as_mut_slice());
        for (i, &y) in self.labels.iter().enumerate() {
            let (a, b) = (indptr[i], indptr[i + 1]);
            let (idx, val) = (&indices[a..b], &values[a..b]);
            let z = sparse_dot(idx, val, ws);
            let r = (sigmoid_stable(z) - y) * inv_n;
            for (&j, &v) in idx.iter().zip(val) {
                gs[j] += r * v;
            }
        }
        g
    }
    fn hvp(&self, w: &Point, v: &Point) -> Option<Point> {
        let n = self.features.nrows();
        let r: Vec<f64> = (0..n)
            .map(|i| {
                let s = sigmoid_stable(self.features.row_dot(i, w));
                s * (1.0 - s) * self.features.row_dot(i, v) / n as f64
            })
            .collect();
        Some(self.features.tmatvec(&r) + v * self.reg)
    }
    fn num_terms(&self) -> Option<usize> {
        Some(self.features.nrows())
    }
    fn batch_gradient(&self, w: &Point, indices: &[usize]) -> Option<Point> {
        let mut g = w * self.reg;
        let scale = 1.0 / indices.len() as f64;
        for &i in indices {
            self.features.add_row_scaled(i, scale * self.term_slope(i, w), &mut g);
        }
        Some(g)
    }
}

/// How the proxy `F̂` is built from the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ProxyKind {
    /// `F̂ ≡ 0`; ProxyProx reduces to SGD.
    Zero,
    /// `½ wᵀ(XᵀX/n)w` (least squares only).
    Covariance,
    /// Every sample labelled 1: `F̂(w) = -(1/n) Σ ln s(x_iᵀw)`.
    LabelFreeLogistic,
    /// Labels drawn i.i.d. uniform on `{0, 1}`.
    RandomLabelLogistic { seed: u64 },
    /// Logistic loss on `m` rows drawn without replacement.
    Subsample { m: usize, seed: u64 },
    /// `½ wᵀPw + bᵀw` with `P` given row by row.
    Quadratic { p: Vec<Vec<f64>>, b: Vec<f64> },
}

/// `H = λ_max(XᵀX)/(4n) + reg` computed from the dense Gram matrix.
pub fn logistic_smoothness(features: &SparseMatrix, reg: f64) -> f64 {
    let ev = symmetric_eigenvalues(&features.gram());
    ev[ev.len() - 1] / (4.0 * features.nrows() as f64) + reg
}

/// Logistic regression `L` with the requested proxy; both carry the same `reg_mu` term
/// (except [`ProxyKind::Zero`], which is exactly zero).
///
/// Noise defaults to single-sample minibatches; see [`super::with_minibatch_noise`].
pub fn logistic_pair(data: &Dataset, reg_mu: f64, kind: &ProxyKind) -> Result<ProblemInstance> {
    if !data.is_binary() {
        return Err(Error::Contract("logistic regression needs labels in {0, 1}".into()));
    }
    if !(reg_mu >= 0.0 && reg_mu.is_finite()) {
        return Err(Error::Config(format!("reg_mu must be finite and >= 0, got {reg_mu}")));
    }
    let d = data.d();
    let objective: SharedOracle = Arc::new(Logistic::new(data.features.clone(), data.labels.clone(), reg_mu)?);
    let h_objective = logistic_smoothness(&data.features, reg_mu);
    let mut proxy_hessian = None;
    let (proxy, delta, h_proxy): (SharedOracle, Option<f64>, f64) = match kind {
        ProxyKind::Zero => {
            proxy_hessian = Some(DMatrix::zeros(d, d));
            (Arc::new(ZeroFunction::new(d)), None, 0.0)
        }
        ProxyKind::LabelFreeLogistic => (
            Arc::new(Logistic::new(data.features.clone(), vec![1.0; data.n()], reg_mu)?),
            Some(0.0),
            h_objective,
        ),
        ProxyKind::RandomLabelLogistic { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let labels = (0..data.n()).map(|_| if rng.random::<bool>() { 1.0 } else { 0.0 }).collect();
            (
                Arc::new(Logistic::new(data.features.clone(), labels, reg_mu)?),
                Some(0.0),
                h_objective,
            )
        }
        ProxyKind::Subsample { m, seed } => {
            if *m == 0 || *m > data.n() {
                return Err(Error::Config(format!("subsample size must be in 1..={}, got {m}", data.n())));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut rows = sample(&mut rng, data.n(), *m).into_vec();
            rows.sort_unstable();
            let features = Arc::new(data.features.select_rows(&rows));
            let labels = rows.iter().map(|&i| data.labels[i]).collect();
            let h = logistic_smoothness(&features, reg_mu);
            (Arc::new(Logistic::new(features, labels, reg_mu)?), None, h)
        }
        ProxyKind::Quadratic { p, b } => {
            let pm = matrix_from_rows(p, d)?;
            let ev = symmetric_eigenvalues(&pm);
            proxy_hessian = Some(pm.clone());
            let q = Quadratic::new(pm, Point::from_vec(b.clone()), 0.0)?;
            (Arc::new(q), None, ev[d - 1].abs().max(ev[0].abs()))
        }
        ProxyKind::Covariance => {
            return Err(Error::Config("the covariance proxy applies to least squares only".into()));
        }
    };
    let delta = match delta {
        Some(v) => v,
        None => estimate_delta(objective.as_ref(), proxy.as_ref(), 10, 0)?,
    };
    let w0 = Point::zeros(d);
    let sigma2 = estimate_minibatch_variance(objective.as_ref(), &w0, 1, 2000, 0)?;
    let mut inst = ProblemInstance::new(
        objective,
        proxy,
        NoiseModel::Minibatch { batch_size: 1 },
        sigma2,
        delta,
        reg_mu,
        h_proxy,
    )?;
    if let Some(p) = proxy_hessian {
        inst = inst.with_proxy_hessian(p);
    }
    Ok(inst)
}

fn matrix_from_rows(rows: &[Vec<f64>], d: usize) -> Result<DMatrix<f64>> {
    check_dims(d, rows.len())?;
    for r in rows {
        check_dims(d, r.len())?;
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{finite_diff_gradient, finite_diff_hvp};

    fn tiny() -> Dataset {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 0.5, -0.3, 2.0, 0.0, -1.0]);
        Dataset::new(SparseMatrix::from_dense(&x), vec![1.0, 0.0, 1.0]).unwrap()
    }

    #[test]
    fn sigmoid_edge_cases() {
        assert_eq!(sigmoid_stable(0.0), 0.5);
        assert!(sigmoid_stable(-745.0) > 0.0);
        assert!((neg_log_sigmoid(-745.0) - 745.0).abs() < 1e-12);
        assert!((sigmoid_stable(30.0) + sigmoid_stable(-30.0) - 1.0).abs() < 1e-15);
        assert_eq!(sigmoid_stable(-1000.0), 0.0);
        assert_eq!(sigmoid_stable(1000.0), 1.0);
    }

    #[test]
    fn gradient_matches_hand_formula_and_finite_differences() {
        let data = tiny();
        let lg = Logistic::new(data.features.clone(), data.labels.clone(), 0.0).unwrap();
        let w = Point::from_vec(vec![0.1, -0.2]);
        // independent evaluation of (1/n) Σ (s(x_iᵀw) - y_i) x_i
        let xs = [[1.0, 0.5], [-0.3, 2.0], [0.0, -1.0]];
        let ys = [1.0, 0.0, 1.0];
        let mut expect = [0.0; 2];
        for (x, y) in xs.iter().zip(ys) {
            let z = x[0] * 0.1 - x[1] * 0.2;
            let s = 1.0 / (1.0 + f64::exp(-z));
            expect[0] += (s - y) * x[0] / 3.0;
            expect[1] += (s - y) * x[1] / 3.0;
        }
        let g = lg.gradient(&w);
        assert!((g[0] - expect[0]).abs() < 1e-15 && (g[1] - expect[1]).abs() < 1e-15);
        let fd = finite_diff_gradient(&lg, &w, 1e-5).unwrap();
        assert!((fd - &g).norm() < 1e-6);
        let v = Point::from_vec(vec![0.4, 1.0]);
        let fh = finite_diff_hvp(&lg, &w, &v, 1e-5).unwrap();
        assert!((fh - lg.hvp(&w, &v).unwrap()).norm() < 1e-8);
    }

    #[test]
    fn label_free_proxies_have_zero_delta() {
        let x = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let data = Dataset::new(SparseMatrix::from_dense(&x), vec![1.0, 0.0]).unwrap();
        for kind in [ProxyKind::LabelFreeLogistic, ProxyKind::RandomLabelLogistic { seed: 4 }] {
            let inst = logistic_pair(&data, 0.0, &kind).unwrap();
            assert_eq!(inst.delta, 0.0);
            let gap = inst.similarity_gap();
            for w in [-3.0, 0.2, 5.0] {
                let hv = gap.hvp(&Point::from_vec(vec![w]), &Point::from_vec(vec![1.0])).unwrap();
                assert!(hv.norm() <= 1e-12);
            }
        }
    }

    #[test]
    fn rejects_non_binary_labels_and_bad_subsample() {
        let x = DMatrix::from_row_slice(2, 1, &[1.0, -1.0]);
        let data = Dataset::new(SparseMatrix::from_dense(&x), vec![1.0, 3.0]).unwrap();
        assert!(logistic_pair(&data, 0.0, &ProxyKind::Zero).is_err());
        assert!(logistic_pair(&tiny(), 0.0, &ProxyKind::Subsample { m: 0, seed: 1 }).is_err());
        assert!(logistic_pair(&tiny(), 0.0, &ProxyKind::Subsample { m: 4, seed: 1 }).is_err());
    }

    #[test]
    fn per_sample_gradients_average_to_the_full_gradient() {
        let data = tiny();
        let lg = Logistic::new(data.features.clone(), data.labels.clone(), 0.3).unwrap();
        let w = Point::from_vec(vec![0.7, -1.1]);
        let mean = (0..3).map(|i| lg.batch_gradient(&w, &[i]).unwrap()).sum::<Point>() / 3.0;
        assert!((mean - lg.gradient(&w)).amax() < 1e-15);
    }
}
