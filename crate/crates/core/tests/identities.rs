//! Property tests for the algebraic identities the method rests on. Expected values
//! come from closed forms computed here, not from the library.

use std::sync::Arc;

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

use proxyprox::data_io::{rng_fork, Dataset, SparseMatrix};
use proxyprox::inner::quadratic_exact;
use proxyprox::oracle::FunctionOracle;
use proxyprox::outer::{weighted_average, weighted_average_prefixes};
use proxyprox::problems::{neg_log_sigmoid, nonconvex_testfn, sigmoid_stable, Logistic, Quadratic};
use proxyprox::subproblem::{bregman, three_point_residual, ProxSubproblem};
use proxyprox::{Point, SharedOracle};

fn vec_strategy(d: usize) -> impl Strategy<Value = Point> {
    prop::collection::vec(-3.0..3.0f64, d).prop_map(Point::from_vec)
}

/// A symmetric positive semidefinite `BᵀB` from an arbitrary `B`.
fn psd_strategy(d: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0..1.0f64, d * d).prop_map(move |v| {
        let b = DMatrix::from_vec(d, d, v);
        b.transpose() * b
    })
}

fn small_logistic() -> Logistic {
    let x = DMatrix::from_row_slice(
        5,
        3,
        &[1.0, 0.5, 0.0, -0.3, 2.0, 1.0, 0.0, -1.0, 0.2, 0.7, 0.1, -0.4, 1.5, 0.0, 0.3],
    );
    let data = Dataset::new(SparseMatrix::from_dense(&x), vec![1.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
    Logistic::new(data.features.clone(), data.labels.clone(), 0.05).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn quadratic_bregman_is_half_quadratic_form(p in psd_strategy(4), u in vec_strategy(4), v in vec_strategy(4)) {
        let q = Quadratic::new(p.clone(), Point::from_element(4, 0.3), 1.0).unwrap();
        let diff = &u - &v;
        let expect = 0.5 * diff.dot(&(&p * &diff));
        let got = bregman(&q, &u, &v).unwrap();
        prop_assert!((got - expect).abs() <= 1e-10 * (1.0 + expect.abs()));
    }

    #[test]
    fn three_point_identity_holds_for_logistic(u in vec_strategy(3), v in vec_strategy(3), w in vec_strategy(3)) {
        let f = small_logistic();
        // D(u;v) + D(v;w) - D(u;w) = <∇f(w) - ∇f(v), u - v>, checked directly
        let lhs = bregman(&f, &u, &v).unwrap() + bregman(&f, &v, &w).unwrap() - bregman(&f, &u, &w).unwrap();
        let rhs = (f.gradient(&w) - f.gradient(&v)).dot(&(&u - &v));
        prop_assert!((lhs - rhs).abs() <= 1e-10);
        prop_assert!(three_point_residual(&f, &u, &v, &w).unwrap().abs() <= 1e-10);
    }

    #[test]
    fn convex_bregman_is_nonnegative(u in vec_strategy(3), v in vec_strategy(3)) {
        prop_assert!(bregman(&small_logistic(), &u, &v).unwrap() >= -1e-12);
    }

    #[test]
    fn phi_gradient_at_anchor_is_g_exactly(anchor in vec_strategy(3), g in vec_strategy(3), eta in 0.01..10.0f64) {
        let proxy: SharedOracle = Arc::new(small_logistic());
        let sp = ProxSubproblem::new(proxy, anchor.clone(), g.clone(), eta).unwrap();
        prop_assert_eq!(sp.gradient(&anchor), g);
    }

    #[test]
    fn exact_solve_is_strongly_convex_minimizer(
        p in psd_strategy(4), anchor in vec_strategy(4), g in vec_strategy(4), w in vec_strategy(4), eta in 0.01..5.0f64
    ) {
        let proxy: SharedOracle = Arc::new(Quadratic::new(p.clone(), Point::zeros(4), 0.0).unwrap());
        let sp = ProxSubproblem::new(proxy, anchor, g, eta).unwrap();
        let star = quadratic_exact(&sp, &p).unwrap();
        prop_assert!(sp.gradient(&star).norm() <= 1e-9 * (1.0 + sp.g().norm()));
        let gap = sp.value(&w) - sp.value(&star) - (&w - &star).norm_squared() / (2.0 * eta);
        prop_assert!(gap >= -1e-8);
    }

    #[test]
    fn similarity_gap_bregman_within_delta(u in vec_strategy(6), v in vec_strategy(6)) {
        // cosine-perturbed quadratic minus its quadratic part: |D_h| <= (δ/2)||u - v||²
        let inst = nonconvex_testfn(6, 0.5, 2.0).unwrap();
        let h = inst.similarity_gap();
        let d = bregman(&h, &u, &v).unwrap();
        prop_assert!(d.abs() <= 0.5 * inst.delta * (&u - &v).norm_squared() + 1e-9);
    }

    #[test]
    fn last_weighted_prefix_matches_weighted_average(
        pts in prop::collection::vec(vec_strategy(2), 1..30), eta in 0.001..1.0f64, mu in 0.0..5.0f64
    ) {
        let prefixes = weighted_average_prefixes(&pts, eta, mu);
        let full = weighted_average(&pts, eta, mu).unwrap();
        // explicit weights (1 + 2ημ/5)^(k-1)
        let r = 1.0 + 2.0 * eta * mu / 5.0;
        let (mut acc, mut total) = (Point::zeros(2), 0.0);
        for (k, w) in pts.iter().enumerate() {
            let a = r.powi(k as i32);
            acc += w * a;
            total += a;
        }
        let expect = acc / total;
        prop_assert!((prefixes.last().unwrap() - &expect).amax() <= 1e-10);
        prop_assert!((&full - &expect).amax() <= 1e-10);
    }

    #[test]
    fn sigmoid_is_symmetric(z in -800.0..800.0f64) {
        let s = sigmoid_stable(z) + sigmoid_stable(-z);
        prop_assert!((s - 1.0).abs() <= 1e-15);
        prop_assert!(neg_log_sigmoid(z).is_finite());
    }

    #[test]
    fn fork_is_deterministic(seed in any::<u64>(), label in "[a-z]{1,8}") {
        prop_assert_eq!(rng_fork(seed, &label), rng_fork(seed, &label));
        prop_assert_ne!(rng_fork(seed, &label), rng_fork(seed, &format!("{label}x")));
    }
}

#[test]
fn neg_log_sigmoid_matches_naive_formula_where_safe() {
    for z in [-30.0f64, -2.0, -0.1, 0.0, 0.7, 5.0, 30.0] {
        let naive: f64 = -(1.0 / (1.0 + (-z).exp())).ln();
        assert_relative_eq!(neg_log_sigmoid(z), naive, max_relative = 1e-12);
    }
    // far tail: -ln s(z) ≈ -z
    assert_relative_eq!(neg_log_sigmoid(-800.0), 800.0, max_relative = 1e-15);
}

#[test]
fn logistic_value_matches_dense_formula() {
    let f = small_logistic();
    let w = Point::from_vec(vec![0.2, -0.4, 1.1]);
    let x = DMatrix::from_row_slice(
        5,
        3,
        &[1.0, 0.5, 0.0, -0.3, 2.0, 1.0, 0.0, -1.0, 0.2, 0.7, 0.1, -0.4, 1.5, 0.0, 0.3],
    );
    let y = DVector::from_vec(vec![1.0, 0.0, 1.0, 0.0, 0.0]);
    let z = &x * &w;
    let mean = z.iter().zip(y.iter()).map(|(z, y)| (1.0 + z.exp()).ln() - y * z).sum::<f64>() / 5.0;
    assert_relative_eq!(f.value(&w), mean + 0.025 * w.norm_squared(), max_relative = 1e-14);
}
