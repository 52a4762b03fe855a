use super::{
    check_finite, newton_refine, CriticalKind, CriticalPoint, SolveError, Stage, Workspace,
};
use crate::spectral::principal_eigen;

/// `τφ₁` with `φ₁` the Dirichlet ground state and `τ` halved from `R/2`
/// until `I(τφ₁) < 0`.
pub fn initial_point(ws: &Workspace<'_>, lambda: f64, radius: f64) -> Result<Vec<f64>, SolveError> {
    let n = ws.grid().len();
    let phi = principal_eigen(ws.grid(), &vec![0.0; n], ws.opts.eigen)
        .map_err(|source| SolveError::Spectral {
            stage: Stage::MinimizeInBall,
            source,
        })?
        .eigenfunction
        .into_values();
    let mut tau = 0.5 * radius.min(1.0) / ws.norm(&phi);
    for _ in 0..200 {
        let v: Vec<f64> = phi.iter().map(|x| tau * x).collect();
        if ws.energy(lambda, &v) < 0.0 {
            return Ok(v);
        }
        tau *= 0.5;
    }
    Err(SolveError::not_converged(
        Stage::MinimizeInBall,
        "no negative energy found along the ground state",
    ))
}

fn project(ws: &Workspace<'_>, mut x: Vec<f64>, radius: f64) -> Vec<f64> {
    let n = ws.norm(&x);
    if n > radius {
        let s = radius / n;
        x.iter_mut().for_each(|v| *v *= s);
    }
    x
}

/// Projected Sobolev-gradient descent on the ball `‖v‖ ≤ radius` from
/// `start`, followed by Newton refinement. `radius = ∞` minimizes globally.
pub fn minimize_in_ball(
    ws: &Workspace<'_>,
    lambda: f64,
    radius: f64,
    start: &[f64],
) -> Result<CriticalPoint, SolveError> {
    let stage = Stage::MinimizeInBall;
    let w = ws.grid().cell_volume();
    let mut x = project(ws, start.to_vec(), radius);
    let mut e = ws.energy(lambda, &x);
    let mut iterations = 0;
    loop {
        let r = ws.gradient(lambda, &x);
        let s = ws.riesz(&r);
        // projected-gradient stationarity; equals the dual norm of r inside the ball
        let stat = if ws.norm(&x) < radius {
            ws.dual_norm(&r, &s)
        } else {
            let p = project(ws, x.iter().zip(&s).map(|(a, b)| a - b).collect(), radius);
            let d: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a - b).collect();
            ws.norm(&d)
        };
        if stat <= ws.opts.tol_descent {
            break;
        }
        if iterations >= ws.opts.max_iter_ball {
            return Err(SolveError::not_converged(
                stage,
                format!("descent stopped after {iterations} iterations"),
            ));
        }
        let mut alpha = 1.0 / (1.0 + ws.norm(&s));
        let mut accepted = None;
        for _ in 0..60 {
            let cand = project(
                ws,
                x.iter().zip(&s).map(|(a, b)| a - alpha * b).collect(),
                radius,
            );
            let ec = ws.energy(lambda, &cand);
            let slope: f64 = w * r
                .iter()
                .zip(cand.iter().zip(&x))
                .map(|(ri, (c, xi))| ri * (c - xi))
                .sum::<f64>();
            if ec <= e + ws.opts.armijo * slope {
                accepted = Some((cand, ec));
                break;
            }
            alpha *= ws.opts.backtrack;
        }
        let Some((cand, ec)) = accepted else {
            // no further decrease representable; let Newton decide
            break;
        };
        check_finite(stage, &cand)?;
        x = cand;
        e = ec;
        iterations += 1;
    }
    if radius.is_finite() && ws.norm(&x) >= radius * (1.0 - 1e-9) {
        return Err(SolveError::geometry(
            stage,
            format!("minimizer touches the sphere of radius {radius:e}"),
        ));
    }
    let newton = newton_refine(ws, lambda, &x)?;
    let gradient_norm = newton.residual;
    if !(gradient_norm <= ws.opts.tol_gradient) {
        return Err(SolveError::not_converged(
            Stage::Newton,
            format!(
                "ball minimizer gradient norm {gradient_norm:e} above {:e}",
                ws.opts.tol_gradient
            ),
        ));
    }
    let v = newton.v;
    if radius.is_finite() && ws.norm(&v) >= radius {
        return Err(SolveError::geometry(
            stage,
            "refined minimizer left the ball",
        ));
    }
    let energy = ws.energy(lambda, &v);
    if !(energy < 0.0) {
        return Err(SolveError::geometry(
            stage,
            format!("minimum energy {energy:e} is not negative"),
        ));
    }
    Ok(CriticalPoint {
        v: ws.field(v),
        energy,
        gradient_norm,
        kind: if radius.is_finite() {
            CriticalKind::BallMinimizer
        } else {
            CriticalKind::GlobalMinimizer
        },
        level: None,
        descent_iterations: iterations,
        newton_iterations: newton.iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::ProblemSpec;
    use crate::grid::Grid;
    use crate::solvers::SolverOptions;
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn bump_spec(c: f64) -> ProblemSpec {
        let g = Arc::new(Grid::unit(2, 25).unwrap());
        let n = g.len();
        let f = g.sample(|x| ((PI * x[0]).sin() * (PI * x[1]).sin()).powi(4));
        ProblemSpec::new(g, vec![c; n], f, 2.0, 2.0).unwrap()
    }

    #[test]
    fn czero_minimizer_is_positive_and_negative_energy() {
        let spec = bump_spec(0.0);
        let ws = Workspace::new(&spec, SolverOptions::default());
        let start = initial_point(&ws, 1.0, f64::INFINITY).unwrap();
        let cp = minimize_in_ball(&ws, 1.0, f64::INFINITY, &start).unwrap();
        assert!(cp.energy < 0.0);
        assert!(cp.gradient_norm < 1e-8);
        assert!(cp.v.min() >= -1e-6);
        assert!(cp.v.max() > 0.0);
        assert_eq!(cp.kind, CriticalKind::GlobalMinimizer);
    }

    #[test]
    fn ball_minimizer_stays_interior() {
        let spec = bump_spec(-1.0);
        let ws = Workspace::new(&spec, SolverOptions::default());
        let radius = 4.0f64.powf(-0.5);
        let start = initial_point(&ws, 4.0, radius).unwrap();
        assert!(ws.energy(4.0, &start) < 0.0);
        let cp = minimize_in_ball(&ws, 4.0, radius, &start).unwrap();
        assert!(cp.v.norm_h10() < radius);
        assert_eq!(cp.kind, CriticalKind::BallMinimizer);
    }

    #[test]
    fn tiny_ball_reports_boundary_contact() {
        let spec = bump_spec(-1.0);
        let ws = Workspace::new(&spec, SolverOptions::default());
        let radius = 1e-4;
        let start = initial_point(&ws, 1.0, radius).unwrap();
        let res = minimize_in_ball(&ws, 1.0, radius, &start);
        assert!(matches!(res, Err(SolveError::Geometry { .. })), "{res:?}");
    }

    #[test]
    fn random_starts_agree() {
        use rand::{Rng, SeedableRng};
        let spec = bump_spec(-1.0);
        let ws = Workspace::new(&spec, SolverOptions::default());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let base = minimize_in_ball(
            &ws,
            1.0,
            f64::INFINITY,
            &initial_point(&ws, 1.0, 1.0).unwrap(),
        )
        .unwrap();
        for _ in 0..3 {
            let start: Vec<f64> = (0..spec.grid().len())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            let cp = minimize_in_ball(&ws, 1.0, f64::INFINITY, &start).unwrap();
            let d =
                cp.v.values()
                    .iter()
                    .zip(base.v.values())
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max);
            assert!(d < 1e-9);
        }
    }
}
