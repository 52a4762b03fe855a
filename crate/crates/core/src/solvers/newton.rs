use super::{check_finite, SolveError, Stage, Workspace};
use crate::functional::{pde_residual_p, ProblemSpec};
use crate::linalg::{BandedLu, CsrMatrix};
use crate::nonlinearity::g_prime;

/// Result of a damped Newton iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOutcome {
    pub v: Vec<f64>,
    /// Quadrature L² norm of the residual at `v`.
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Residual norm after each accepted step, starting with the initial one.
    pub history: Vec<f64>,
}

/// Jacobian of the gradient field: `−Δ_h − diag(𝟙{v>0}((c+μf) + c g_λ'(v)))`.
fn jacobian_q(ws: &Workspace<'_>, lambda: f64, v: &[f64]) -> CsrMatrix {
    let spec = ws.spec;
    let d: Vec<f64> = (0..v.len())
        .map(|i| {
            if v[i] > 0.0 {
                -(spec.c()[i] + spec.mu() * spec.f()[i] + spec.c()[i] * g_prime(lambda, v[i]))
            } else {
                0.0
            }
        })
        .collect();
    ws.grid().laplacian_matrix().add_diagonal(&d)
}

/// Damped Newton iteration `x ← x + α δ`, `J δ = −F(x)`, with backtracking on
/// `‖F‖` until the sufficient-decrease test `‖F(x+αδ)‖ ≤ (1 − 10⁻⁴α)‖F(x)‖` holds.
fn damped_newton(
    stage: Stage,
    x0: &[f64],
    tol: f64,
    max_iter: usize,
    norm: impl Fn(&[f64]) -> f64,
    residual: impl Fn(&[f64]) -> Vec<f64>,
    jacobian: impl Fn(&[f64]) -> CsrMatrix,
) -> Result<NewtonOutcome, SolveError> {
    let mut x = x0.to_vec();
    let mut r = residual(&x);
    let mut nr = norm(&r);
    let mut history = vec![nr];
    let mut iterations = 0;
    while nr > tol && iterations < max_iter {
        let lu = match BandedLu::factor(&jacobian(&x)) {
            Ok(lu) => lu,
            Err(_) => break,
        };
        let mut delta: Vec<f64> = r.iter().map(|v| -v).collect();
        lu.solve_in_place(&mut delta);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..40 {
            let cand: Vec<f64> = x.iter().zip(&delta).map(|(a, d)| a + alpha * d).collect();
            let rc = residual(&cand);
            let nc = norm(&rc);
            if nc.is_finite() && nc <= (1.0 - 1e-4 * alpha) * nr {
                accepted = Some((cand, rc, nc));
                break;
            }
            alpha *= 0.5;
        }
        let Some((cand, rc, nc)) = accepted else {
            break;
        };
        check_finite(stage, &cand)?;
        x = cand;
        r = rc;
        nr = nc;
        history.push(nr);
        iterations += 1;
    }
    Ok(NewtonOutcome {
        v: x,
        residual: nr,
        iterations,
        converged: nr <= tol,
        history,
    })
}

/// Newton refinement of a near-critical point of `I` to `‖∇I‖ ≤ tol_newton`.
/// On stagnation the best iterate is returned with `converged = false`.
pub fn newton_refine(
    ws: &Workspace<'_>,
    lambda: f64,
    v_init: &[f64],
) -> Result<NewtonOutcome, SolveError> {
    let r0 = ws.l2(&ws.gradient(lambda, v_init));
    if r0 > ws.opts.newton_gate {
        return Err(SolveError::not_converged(
            Stage::Newton,
            format!(
                "start gradient norm {r0:e} exceeds the Newton gate {:e}",
                ws.opts.newton_gate
            ),
        ));
    }
    damped_newton(
        Stage::Newton,
        v_init,
        ws.opts.tol_newton,
        ws.opts.max_iter_newton,
        |r| ws.l2(r),
        |v| ws.gradient(lambda, v),
        |v| jacobian_q(ws, lambda, v),
    )
}

/// Newton iteration directly on the discrete (P) equations, started from a
/// transformed solution of (Q). The centered-difference gradient term makes
/// the Jacobian nonsymmetric.
pub fn refine_p(
    spec: &ProblemSpec,
    u0: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<NewtonOutcome, SolveError> {
    let grid = spec.grid();
    let lap = grid.laplacian_matrix();
    let mu = spec.mu();
    let jac = |u: &[f64]| {
        let n = u.len();
        let rows = (0..n)
            .map(|i| {
                let mut row: Vec<(usize, f64)> = lap.row(i).collect();
                row.push((i, -spec.c()[i]));
                for axis in 0..grid.dimension() {
                    let h = grid.spacing()[axis];
                    let d = grid.centered_diff(u, i, axis);
                    // ∂(d²)/∂u_{i±1} = ±2d/(2h)
                    let coef = -mu * 2.0 * d / (2.0 * h);
                    if let Some(j) = grid.neighbor(i, axis, true) {
                        row.push((j, coef));
                    }
                    if let Some(j) = grid.neighbor(i, axis, false) {
                        row.push((j, -coef));
                    }
                }
                row
            })
            .collect();
        CsrMatrix::from_rows(n, rows)
    };
    damped_newton(
        Stage::Transform,
        u0,
        tol,
        max_iter,
        |r| grid.norm_l2(r),
        |u| pde_residual_p(grid, spec.c(), spec.f(), mu, u),
        jac,
    )
}
