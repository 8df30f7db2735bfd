//! The per-iteration proximal subproblem, Bregman divergences, and the
//! execution-time inexactness criteria.
//!
//! For anchor `w_k`, stochastic gradient `g_k`, stepsize `η` and proxy `F̂`:
//!
//! ```text
//! φ_k(w) = <g_k, w> + D_F̂(w; w_k) + ||w - w_k||² / (2η)
//! ∇φ_k(w) = g_k + ∇F̂(w) - ∇F̂(w_k) + (w - w_k) / η
//! ```

use std::sync::Arc;

use crate::error::{check_dims, Error, Result};
use crate::oracle::{ensure_finite, FunctionOracle, Point, SharedOracle};

/// `D_ψ(u; v) = ψ(u) - ψ(v) - <∇ψ(v), u - v>`. Negative values are allowed for non-convex ψ.
pub fn bregman(psi: &dyn FunctionOracle, u: &Point, v: &Point) -> Result<f64> {
    check_dims(psi.dim(), u.len())?;
    check_dims(u.len(), v.len())?;
    Ok(psi.value(u) - psi.value(v) - psi.gradient(v).dot(&(u - v)))
}

/// Absolute defect of the three-point identity
/// `D(u;v) - D(u;w) - D(w;v) = <∇ψ(v) - ∇ψ(w), w - u>`.
pub fn three_point_residual(psi: &dyn FunctionOracle, u: &Point, v: &Point, w: &Point) -> Result<f64> {
    let lhs = bregman(psi, u, v)? - bregman(psi, u, w)? - bregman(psi, w, v)?;
    check_dims(u.len(), w.len())?;
    let rhs = (psi.gradient(v) - psi.gradient(w)).dot(&(w - u));
    Ok((lhs - rhs).abs())
}

/// `φ_k` for one outer iteration. Immutable once built.
#[derive(Debug, Clone)]
pub struct ProxSubproblem {
    anchor: Point,
    g: Point,
    eta: f64,
    proxy: SharedOracle,
    proxy_value_at_anchor: f64,
    proxy_grad_at_anchor: Point,
}

impl ProxSubproblem {
    pub fn new(proxy: SharedOracle, anchor: Point, g: Point, eta: f64) -> Result<Self> {
        check_dims(proxy.dim(), anchor.len())?;
        check_dims(anchor.len(), g.len())?;
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::Config(format!("stepsize eta must be finite and > 0, got {eta}")));
        }
        ensure_finite(&anchor, "subproblem anchor")?;
        ensure_finite(&g, "stochastic gradient")?;
        let proxy_value_at_anchor = proxy.value(&anchor);
        let proxy_grad_at_anchor = proxy.gradient(&anchor);
        Ok(Self {
            anchor,
            g,
            eta,
            proxy,
            proxy_value_at_anchor,
            proxy_grad_at_anchor,
        })
    }

    pub fn anchor(&self) -> &Point {
        &self.anchor
    }
    pub fn g(&self) -> &Point {
        &self.g
    }
    pub fn eta(&self) -> f64 {
        self.eta
    }
    pub fn proxy(&self) -> &SharedOracle {
        &self.proxy
    }
    pub fn proxy_grad_at_anchor(&self) -> &Point {
        &self.proxy_grad_at_anchor
    }
    pub fn dim(&self) -> usize {
        self.anchor.len()
    }

    pub fn value(&self, w: &Point) -> f64 {
        let diff = w - &self.anchor;
        let breg = self.proxy.value(w) - self.proxy_value_at_anchor - self.proxy_grad_at_anchor.dot(&diff);
        self.g.dot(w) + breg + diff.norm_squared() / (2.0 * self.eta)
    }

    pub fn gradient(&self, w: &Point) -> Point {
        self.assemble(self.proxy.gradient(w), w)
    }

    /// Unbiased estimate of `∇φ_k(w)` from a proxy minibatch.
    pub fn minibatch_gradient(&self, w: &Point, indices: &[usize]) -> Option<Point> {
        Some(self.assemble(self.proxy.batch_gradient(w, indices)?, w))
    }

    // g + ((∇F̂(w) - ∇F̂(w_k)) + (w - w_k)/η), ordered so the anchor gives g bitwise.
    fn assemble(&self, proxy_grad: Point, w: &Point) -> Point {
        let mut out = proxy_grad - &self.proxy_grad_at_anchor;
        out.axpy(1.0 / self.eta, &(w - &self.anchor), 1.0);
        &self.g + out
    }
}

/// Which theorem's inexactness condition a subproblem solution must meet.
#[derive(Debug, Clone, PartialEq)]
pub enum CriterionMode {
    /// `||∇φ||² <= μ/(4η) ||w⁺ - w_k||² + G²`.
    StronglyConvex { mu: f64, g2: f64 },
    /// `||∇φ||² <= 1/(4η²K) ||w⁺ - w_k||² + G²`.
    Convex { iterations: usize, g2: f64 },
    /// `||∇φ||² <= 7/(16η²) ||w⁺ - w_k||² + ||∇L(w⁺)||²/8` and `φ(w⁺) <= φ(w_k)`.
    Nonconvex { gradient_term: GradientTerm },
}

/// How the `||∇L(w⁺)||²/8` term of the non-convex criterion is evaluated.
#[derive(Debug, Clone)]
pub enum GradientTerm {
    /// Full objective gradient, available when the harness owns the data.
    Certified(SharedOracle),
    /// Term dropped; the resulting threshold is smaller, hence conservative.
    Dropped,
}

impl PartialEq for GradientTerm {
    fn eq(&self, other: &Self) -> bool {
        match (self, other) {
            (GradientTerm::Certified(a), GradientTerm::Certified(b)) => Arc::ptr_eq(a, b),
            (GradientTerm::Dropped, GradientTerm::Dropped) => true,
            _ => false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionSpec {
    pub mode: CriterionMode,
    pub eta: f64,
}

impl CriterionSpec {
    pub fn strongly_convex(mu: f64, g2: f64, eta: f64) -> Self {
        Self {
            mode: CriterionMode::StronglyConvex { mu, g2 },
            eta,
        }
    }
    pub fn convex(iterations: usize, g2: f64, eta: f64) -> Self {
        Self {
            mode: CriterionMode::Convex { iterations, g2 },
            eta,
        }
    }
    pub fn nonconvex(gradient_term: GradientTerm, eta: f64) -> Self {
        Self {
            mode: CriterionMode::Nonconvex { gradient_term },
            eta,
        }
    }

    /// Right-hand side for a given movement `||w⁺ - w_k||²` and `||∇L(w⁺)||²`.
    pub fn threshold(&self, movement: f64, grad_l_sq: f64) -> f64 {
        let eta = self.eta;
        match &self.mode {
            CriterionMode::StronglyConvex { mu, g2 } => mu / (4.0 * eta) * movement + g2,
            CriterionMode::Convex { iterations, g2 } => movement / (4.0 * eta * eta * *iterations as f64) + g2,
            CriterionMode::Nonconvex { .. } => 7.0 / (16.0 * eta * eta) * movement + grad_l_sq / 8.0,
        }
    }
}

/// Outcome of one criterion evaluation; `lhs`/`rhs` are kept for the run log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriterionCheck {
    pub satisfied: bool,
    pub lhs: f64,
    pub rhs: f64,
}

/// Checks `w_next` against the criterion; `lhs = ||∇φ_k(w_next)||²`.
///
/// In certified non-convex mode `grad_l_at_w_next` is used when given and
/// otherwise computed from the certified oracle.
pub fn criterion_satisfied(
    spec: &CriterionSpec,
    sp: &ProxSubproblem,
    w_next: &Point,
    grad_l_at_w_next: Option<&Point>,
) -> Result<CriterionCheck> {
    check_dims(sp.dim(), w_next.len())?;
    let grad_phi = sp.gradient(w_next);
    criterion_from_gradient(spec, sp, w_next, &grad_phi, grad_l_at_w_next)
}

pub(crate) fn criterion_from_gradient(
    spec: &CriterionSpec,
    sp: &ProxSubproblem,
    w_next: &Point,
    grad_phi: &Point,
    grad_l_at_w_next: Option<&Point>,
) -> Result<CriterionCheck> {
    let lhs = grad_phi.norm_squared();
    let movement = (w_next - sp.anchor()).norm_squared();
    let (rhs, descent_ok) = match &spec.mode {
        CriterionMode::Nonconvex { gradient_term } => {
            let grad_sq = match (gradient_term, grad_l_at_w_next) {
                (GradientTerm::Dropped, _) => 0.0,
                (GradientTerm::Certified(_), Some(g)) => g.norm_squared(),
                (GradientTerm::Certified(oracle), None) => oracle.gradient(w_next).norm_squared(),
            };
            let descent = sp.value(w_next) <= sp.value(sp.anchor());
            (spec.threshold(movement, grad_sq), descent)
        }
        _ => (spec.threshold(movement, 0.0), true),
    };
    if !lhs.is_finite() || !rhs.is_finite() {
        return Err(Error::NonFinite {
            context: "inexactness criterion",
            coordinate: None,
        });
    }
    Ok(CriterionCheck {
        satisfied: descent_ok && lhs <= rhs,
        lhs,
        rhs,
    })
}
