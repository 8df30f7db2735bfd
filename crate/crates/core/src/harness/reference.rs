use crate::error::{Error, Result};
use crate::oracle::{FunctionOracle, Point, ReferenceSolution};

/// Gradient-evaluation cap for [`solve_reference`].
pub const MAX_GRADIENT_EVALUATIONS: usize = 10_000_000;

/// Certified minimizer of a convex `oracle`, starting from the origin.
pub fn solve_reference(oracle: &dyn FunctionOracle, mu: f64, tol: f64) -> Result<ReferenceSolution> {
    solve_reference_from(oracle, mu, tol, &Point::zeros(oracle.dim()))
}

/// Accelerated gradient descent with backtracking and gradient-based restarts,
/// followed by Newton–CG polishing when the oracle has Hessian-vector products.
///
/// Stops once `||∇L|| <= min(tol, 1e-9·max(1, |L|))`.
pub fn solve_reference_from(oracle: &dyn FunctionOracle, mu: f64, tol: f64, start: &Point) -> Result<ReferenceSolution> {
    if !(tol > 0.0) || !(mu >= 0.0) {
        return Err(Error::Config(format!("reference solve needs tol > 0 and mu >= 0 (tol={tol}, mu={mu})")));
    }
    let target = |f: f64| tol.min(1e-9 * f.abs().max(1.0));
    let mut evals = 0usize;
    let mut x = start.clone();
    let mut fx = oracle.value(&x);
    let mut gx = oracle.gradient(&x);
    evals += 1;
    if gx.norm() <= target(fx) {
        return ReferenceSolution::certify(oracle, &x);
    }
    let has_hvp = oracle.hvp(&x, &gx).is_some();
    let switch = if has_hvp { 1e-5 } else { 0.0 };

    let mut lip = 1.0_f64;
    let mut y = x.clone();
    let mut t = 1.0_f64;
    let (mut best, mut best_norm) = (x.clone(), gx.norm());
    while best_norm > target(fx).max(switch * (1.0 + fx.abs())) {
        if evals >= MAX_GRADIENT_EVALUATIONS {
            return Err(Error::Unconverged {
                evaluations: evals,
                grad_norm: best_norm,
                best: Box::new(best),
            });
        }
        let fy = oracle.value(&y);
        let gy = oracle.gradient(&y);
        evals += 1;
        let gy_sq = gy.norm_squared();
        let x_new = loop {
            let cand = &y - &gy / lip;
            let fc = oracle.value(&cand);
            if fc.is_finite() && fc <= fy - 0.5 * gy_sq / lip + 1e-15 * fy.abs() {
                break cand;
            }
            lip *= 2.0;
            if !lip.is_finite() {
                return Err(Error::NonFinite {
                    context: "reference solve step size",
                    coordinate: None,
                });
            }
        };
        let t_new = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let step = &x_new - &x;
        if gy.dot(&step) > 0.0 {
            // momentum is pointing uphill
            t = 1.0;
            y = x_new.clone();
        } else {
            y = &x_new + step * ((t - 1.0) / t_new);
            t = t_new;
        }
        x = x_new;
        fx = oracle.value(&x);
        gx = oracle.gradient(&x);
        evals += 1;
        if gx.norm() < best_norm {
            best_norm = gx.norm();
            best = x.clone();
        }
        lip *= 0.95;
    }
    if has_hvp {
        x = best;
        for _ in 0..50 {
            gx = oracle.gradient(&x);
            fx = oracle.value(&x);
            if gx.norm() <= target(fx) {
                break;
            }
            let dir = conjugate_gradient(oracle, &x, &gx, &mut evals);
            let mut alpha = 1.0;
            let g0 = gx.norm();
            let mut moved = false;
            for _ in 0..30 {
                let cand = &x - &dir * alpha;
                let gc = oracle.gradient(&cand);
                evals += 1;
                if gc.norm() < g0 {
                    x = cand;
                    moved = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !moved {
                break;
            }
        }
    } else {
        x = best;
    }
    let fx = oracle.value(&x);
    let gn = oracle.gradient(&x).norm();
    if gn > target(fx) {
        return Err(Error::Unconverged {
            evaluations: evals,
            grad_norm: gn,
            best: Box::new(x),
        });
    }
    ReferenceSolution::certify(oracle, &x)
}

// Solves ∇²L(x) d = g by conjugate gradients on Hessian-vector products.
fn conjugate_gradient(oracle: &dyn FunctionOracle, x: &Point, g: &Point, evals: &mut usize) -> Point {
    let mut d = Point::zeros(g.len());
    let mut r = g.clone();
    let mut p = r.clone();
    let mut rs = r.norm_squared();
    let stop = 1e-24 * rs;
    for _ in 0..(4 * g.len()).max(10) {
        let hp = oracle.hvp(x, &p).expect("checked by the caller");
        *evals += 1;
        let curv = p.dot(&hp);
        if curv <= 0.0 {
            break;
        }
        let a = rs / curv;
        d.axpy(a, &p, 1.0);
        r.axpy(-a, &hp, 1.0);
        let rs_new = r.norm_squared();
        if rs_new <= stop {
            break;
        }
        p = &r + &p * (rs_new / rs);
        rs = rs_new;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::Quadratic;
    use nalgebra::DMatrix;

    #[test]
    fn quadratic_minimizer_matches_linear_solve() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0]);
        let y = Point::from_vec(vec![1.0, -2.0, 0.5]);
        let q = Quadratic::new(a.clone(), -y.clone(), 0.0).unwrap();
        let r = solve_reference(&q, 1.0, 1e-12).unwrap();
        let exact = a.cholesky().unwrap().solve(&y);
        assert!((r.point() - exact).norm() < 1e-8);
    }

    #[test]
    fn optimal_start_returns_immediately() {
        let q = Quadratic::new(DMatrix::identity(2, 2), Point::zeros(2), 0.0).unwrap();
        let r = solve_reference(&q, 1.0, 1e-10).unwrap();
        assert_eq!(r.w_star, vec![0.0, 0.0]);
        assert_eq!(r.grad_norm_at_w_star, 0.0);
    }
}
