//! Change of variables `v = (e^{μu} − 1)/λ`, `u = μ⁻¹ ln(1 + λv)` between
//! problems (P) and (Q), and the diagnostics attached to a transformed pair.

use crate::functional::{residual_p, residual_q, ProblemSpec};
use crate::grid::{GridError, ScalarField};

/// Negative values of `v` above this are rounding noise and are clamped to 0.
pub const CLAMP_TOL: f64 = 1e-6;
const EXP_LIMIT: f64 = 700.0;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum TransformError {
    #[error("mu and lambda must be positive (mu = {mu}, lambda = {lambda})")]
    Parameters { mu: f64, lambda: f64 },
    #[error("exp overflow: mu * u = {0} at some node exceeds {EXP_LIMIT}")]
    Overflow(f64),
    #[error("1 + lambda v must be positive; node {node} has v = {value}")]
    Domain { node: usize, value: f64 },
    #[error("critical point has negative values (min {0}) beyond the clamp tolerance")]
    Negative(f64),
    #[error(transparent)]
    Grid(#[from] GridError),
}

fn check_params(mu: f64, lambda: f64) -> Result<(), TransformError> {
    if mu > 0.0 && lambda > 0.0 && mu.is_finite() && lambda.is_finite() {
        Ok(())
    } else {
        Err(TransformError::Parameters { mu, lambda })
    }
}

pub fn v_from_u(u: &ScalarField, mu: f64, lambda: f64) -> Result<ScalarField, TransformError> {
    check_params(mu, lambda)?;
    let peak = u.max() * mu;
    if peak > EXP_LIMIT {
        return Err(TransformError::Overflow(peak));
    }
    Ok(u.map(|x| (mu * x).exp_m1() / lambda))
}

pub fn u_from_v(v: &ScalarField, mu: f64, lambda: f64) -> Result<ScalarField, TransformError> {
    check_params(mu, lambda)?;
    if let Some(node) = v.values().iter().position(|&x| !(1.0 + lambda * x > 0.0)) {
        return Err(TransformError::Domain {
            node,
            value: v.values()[node],
        });
    }
    Ok(v.map(|x| (lambda * x).ln_1p() / mu))
}

/// A solution of (Q) together with its image in (P) and diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformPair {
    pub u: ScalarField,
    pub v: ScalarField,
    pub mu: f64,
    pub lambda: f64,
    /// `‖u − u(v(u))‖_∞`
    pub roundtrip_error: f64,
    pub residual_p: f64,
    pub residual_q: f64,
    /// Minimum of `u` over interior nodes not adjacent to the boundary.
    pub positivity_margin: f64,
    pub success: bool,
}

/// Minimum over nodes whose stencil does not touch the boundary; falls back
/// to all nodes on grids too coarse to have any.
pub fn positivity_margin(u: &ScalarField) -> f64 {
    let g = u.grid();
    let inner = (0..u.len())
        .filter(|&i| !g.touches_boundary(i))
        .map(|i| u.values()[i])
        .fold(f64::INFINITY, f64::min);
    if inner.is_finite() {
        inner
    } else {
        u.min()
    }
}

/// Transform a critical point of `I` to (P) and collect diagnostics.
pub fn verify_pair(
    spec: &ProblemSpec,
    lambda: f64,
    v_solution: &ScalarField,
    tol_p: f64,
) -> Result<TransformPair, TransformError> {
    let vmin = v_solution.min();
    if vmin < -CLAMP_TOL {
        return Err(TransformError::Negative(vmin));
    }
    let v = v_solution.positive_part();
    let u = u_from_v(&v, spec.mu(), lambda)?;
    pair_from_parts(spec, lambda, u, v, tol_p)
}

/// Diagnostics for an explicit `(u, v)` pair, e.g. after `u` was refined
/// directly on (P).
pub fn pair_from_parts(
    spec: &ProblemSpec,
    lambda: f64,
    u: ScalarField,
    v: ScalarField,
    tol_p: f64,
) -> Result<TransformPair, TransformError> {
    let back = u_from_v(&v_from_u(&u, spec.mu(), lambda)?, spec.mu(), lambda)?;
    let roundtrip_error = u
        .values()
        .iter()
        .zip(back.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let res_p = residual_p(spec, &u)?;
    let res_q = residual_q(spec, lambda, &v)?;
    let margin = positivity_margin(&u);
    Ok(TransformPair {
        success: res_p <= tol_p && margin > 0.0,
        u,
        v,
        mu: spec.mu(),
        lambda,
        roundtrip_error,
        residual_p: res_p,
        residual_q: res_q,
        positivity_margin: margin,
    })
}
