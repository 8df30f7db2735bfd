//! A quadratic proxy `½wᵀPw` turns the proximal step into the preconditioned update
//! `w⁺ = w_k - η(I + ηP)⁻¹ g`. Compares the closed form with inner gradient descent.

use std::sync::Arc;

use nalgebra::DMatrix;
use proxyprox::inner::{inner_gd, quadratic_exact, InnerConfig};
use proxyprox::problems::Quadratic;
use proxyprox::subproblem::{criterion_satisfied, CriterionSpec, ProxSubproblem};
use proxyprox::{Point, SharedOracle};

fn main() -> proxyprox::Result<()> {
    let p = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0]);
    let proxy: SharedOracle = Arc::new(Quadratic::new(p.clone(), Point::zeros(3), 0.0)?);
    let anchor = Point::from_vec(vec![1.0, -2.0, 0.5]);
    let g = Point::from_vec(vec![0.3, 0.1, -0.7]);
    let eta = 0.8;

    let sp = ProxSubproblem::new(proxy, anchor.clone(), g, eta)?;
    let closed = quadratic_exact(&sp, &p)?;
    println!("closed form      w+ = {:?}", closed.as_slice());

    // a negligible μ leaves almost no slack, so GD runs until ∇φ is tiny
    let spec = CriterionSpec::strongly_convex(1e-20, 0.0, eta);
    let cfg = InnerConfig {
        max_steps: 200,
        smoothness: Some(5.0),
        ..InnerConfig::default()
    };
    let gd = inner_gd(&sp, &spec, &cfg)?;
    println!("inner GD ({:>3} st) w+ = {:?}", gd.steps_taken, gd.w_next.as_slice());
    println!("|difference| = {:e}", (&gd.w_next - &closed).norm());

    let check = criterion_satisfied(&CriterionSpec::strongly_convex(1.0, 1e-12, eta), &sp, &closed, None)?;
    println!("||grad phi(w+)||^2 at closed form = {:e} (criterion ok: {})", check.lhs, check.satisfied);
    Ok(())
}
