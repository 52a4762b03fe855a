use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{SolveError, Stage, Workspace};
use crate::nonlinearity::growth_bound_constant;

/// Constants of the mountain-pass geometry at the selected `λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryParams {
    pub lambda: f64,
    pub theta: f64,
    pub p: f64,
    /// `R_λ = λ^{−θ}`
    pub radius: f64,
    /// Estimated minimum `M_λ` of `I` on the sphere `‖v‖ = R_λ`.
    pub sphere_min: f64,
    /// `ε = K₁/4` in the growth split of `G_λ`.
    pub epsilon: f64,
    /// Sampled `C_ε` for that split.
    pub c_epsilon: f64,
    pub doublings: usize,
}

/// Check `θ ∈ (0,1)`, `p > 1` and `(p+1)q' < 2*` (with `2* = ∞` for N = 2).
fn validate(ws: &Workspace<'_>) -> Result<(), SolveError> {
    let (theta, p) = (ws.opts.theta, ws.opts.p);
    let bad = |detail: String| SolveError::Options {
        stage: Stage::SelectLambda,
        detail,
    };
    if !(theta > 0.0 && theta < 1.0) {
        return Err(bad(format!("theta must lie in (0,1), got {theta}")));
    }
    if !(p > 1.0 && p.is_finite()) {
        return Err(bad(format!("p must exceed 1, got {p}")));
    }
    let n = ws.grid().dimension() as f64;
    let q = ws.spec.q();
    let q_conj = q / (q - 1.0);
    let crit = if n > 2.0 {
        2.0 * n / (n - 2.0)
    } else {
        f64::INFINITY
    };
    if !((p + 1.0) * q_conj < crit) {
        return Err(bad(format!(
            "(p+1)q' = {} must be below 2* = {crit}",
            (p + 1.0) * q_conj
        )));
    }
    if let Some(l) = ws.opts.lambda_override {
        if !(l > 0.0 && l.is_finite()) {
            return Err(bad(format!("lambda override must be positive, got {l}")));
        }
    }
    if !(ws.opts.lambda_start > 0.0 && ws.opts.lambda_cap >= ws.opts.lambda_start) {
        return Err(bad("need 0 < lambda_start <= lambda_cap".into()));
    }
    Ok(())
}

fn scale_to(ws: &Workspace<'_>, mut v: Vec<f64>, radius: f64) -> Option<Vec<f64>> {
    let n = ws.norm(&v);
    if !(n > 0.0 && n.is_finite()) {
        return None;
    }
    let s = radius / n;
    v.iter_mut().for_each(|x| *x *= s);
    Some(v)
}

/// Probe directions on the sphere of the given radius: smoothed `1`, `f`,
/// `c⁺`, then smoothed random fields (every second one folded to `|·|`).
fn probes(ws: &Workspace<'_>, radius: f64) -> Vec<Vec<f64>> {
    let spec = ws.spec;
    let n = ws.grid().len();
    let fixed = [
        vec![1.0; n],
        spec.f().to_vec(),
        spec.c().iter().map(|c| c.max(0.0)).collect(),
    ];
    let mut out: Vec<Vec<f64>> = fixed
        .iter()
        .filter_map(|v| scale_to(ws, ws.riesz(v), radius))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(ws.opts.seed);
    let mut k = 0;
    while out.len() < ws.opts.probes.max(1) {
        let xi: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut s = ws.riesz(&xi);
        if k % 2 == 1 {
            s.iter_mut().for_each(|x| *x = x.abs());
        }
        out.extend(scale_to(ws, s, radius));
        k += 1;
    }
    out
}

/// Armijo descent of `I` restricted to the sphere `‖v‖ = radius`, using the
/// tangential part of the Sobolev gradient and renormalizing after each step.
fn sphere_descent(
    ws: &Workspace<'_>,
    lambda: f64,
    radius: f64,
    mut x: Vec<f64>,
) -> (f64, Vec<f64>) {
    let w = ws.grid().cell_volume();
    let mut e = ws.energy(lambda, &x);
    for _ in 0..ws.opts.sphere_descent_iters {
        let r = ws.gradient(lambda, &x);
        let s = ws.riesz(&r);
        // ⟨s, x⟩_{H¹₀} = ∫ r x
        let along = w * crate::linalg::dot(&r, &x) / (radius * radius);
        let t: Vec<f64> = s.iter().zip(&x).map(|(si, xi)| si - along * xi).collect();
        let tn = ws.norm(&t);
        if tn <= ws.opts.tol_descent * radius.max(1e-300) {
            break;
        }
        let mut alpha = 1.0 / (1.0 + tn / radius);
        let mut moved = false;
        for _ in 0..60 {
            let cand: Vec<f64> = x.iter().zip(&t).map(|(a, b)| a - alpha * b).collect();
            let Some(cand) = scale_to(ws, cand, radius) else {
                break;
            };
            let ec = ws.energy(lambda, &cand);
            if ec <= e - ws.opts.armijo * alpha * tn * tn {
                x = cand;
                e = ec;
                moved = true;
                break;
            }
            alpha *= ws.opts.backtrack;
        }
        if !moved {
            break;
        }
    }
    (e, x)
}

/// Estimated minimum of `I` on `‖v‖ = radius` and the field attaining it.
pub fn sphere_minimum(ws: &Workspace<'_>, lambda: f64, radius: f64) -> (f64, Vec<f64>) {
    let mut best: Option<(f64, Vec<f64>)> = None;
    for v in probes(ws, radius) {
        let e = ws.energy(lambda, &v);
        if best.as_ref().map_or(true, |(b, _)| e < *b) {
            best = Some((e, v));
        }
    }
    let (e0, x0) = best.expect("at least one probe");
    let (e1, x1) = sphere_descent(ws, lambda, radius, x0.clone());
    if e1 < e0 {
        (e1, x1)
    } else {
        (e0, x0)
    }
}

/// Double `λ` from `lambda_start` until the estimated sphere minimum at
/// `R_λ = λ^{−θ}` is positive. `k1` is the coercivity constant of `−c − μf`.
pub fn select_lambda(ws: &Workspace<'_>, k1: f64) -> Result<GeometryParams, SolveError> {
    validate(ws)?;
    let theta = ws.opts.theta;
    let mut lambda = ws.opts.lambda_override.unwrap_or(ws.opts.lambda_start);
    let mut doublings = 0;
    loop {
        let radius = lambda.powf(-theta);
        let (m, _) = sphere_minimum(ws, lambda, radius);
        if m > 0.0 {
            let epsilon = k1 / 4.0;
            let c_epsilon = growth_bound_constant(epsilon, ws.opts.p, 1.0, lambda.max(1.0))
                .map_err(|e| SolveError::Options {
                    stage: Stage::SelectLambda,
                    detail: e.to_string(),
                })?;
            return Ok(GeometryParams {
                lambda,
                theta,
                p: ws.opts.p,
                radius,
                sphere_min: m,
                epsilon,
                c_epsilon,
                doublings,
            });
        }
        if ws.opts.lambda_override.is_some() {
            return Err(SolveError::geometry(
                Stage::SelectLambda,
                format!("sphere minimum {m:e} is not positive at the requested lambda = {lambda}"),
            ));
        }
        lambda *= 2.0;
        doublings += 1;
        if lambda > ws.opts.lambda_cap {
            return Err(SolveError::geometry(
                Stage::SelectLambda,
                format!(
                    "no lambda up to the cap {:e} gives a positive sphere minimum",
                    ws.opts.lambda_cap
                ),
            ));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::ProblemSpec;
    use crate::grid::Grid;
    use crate::solvers::SolverOptions;
    use std::sync::Arc;

    fn spec(c: f64, fval: f64) -> ProblemSpec {
        let g = Arc::new(Grid::unit(2, 17).unwrap());
        let n = g.len();
        let mut f = vec![0.0; n];
        f[n / 2] = fval.max(1e-300);
        ProblemSpec::new(g, vec![c; n], f, 1.0, 2.0).unwrap()
    }

    #[test]
    fn probes_lie_on_the_sphere() {
        let s = spec(-1.0, 1.0);
        let ws = Workspace::new(&s, SolverOptions::default());
        let ps = probes(&ws, 0.3);
        assert_eq!(ps.len(), 64);
        for p in ps {
            assert!((ws.norm(&p) - 0.3).abs() < 1e-12);
        }
    }

    #[test]
    fn nonpositive_c_and_vanishing_f_pass_at_the_start() {
        // I ≥ ½K₁R² on the sphere when there are no negative terms
        let s = spec(-1.0, 1e-300);
        let ws = Workspace::new(&s, SolverOptions::default());
        let geom = select_lambda(&ws, 1.0).unwrap();
        assert_eq!(geom.doublings, 0);
        assert_eq!(geom.lambda, 1.0);
        assert!(geom.sphere_min >= 0.5 * geom.radius * geom.radius * (1.0 - 1e-12));
        assert_eq!(geom.radius, 1.0f64.powf(-0.5));
    }

    #[test]
    fn sphere_descent_never_increases_energy() {
        let s = spec(3.0, 1.0);
        let ws = Workspace::new(&s, SolverOptions::default());
        let x0 = probes(&ws, 0.5).remove(5);
        let e0 = ws.energy(2.0, &x0);
        let (e1, x1) = sphere_descent(&ws, 2.0, 0.5, x0);
        assert!(e1 <= e0);
        assert!((ws.norm(&x1) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_exponents() {
        let s = spec(-1.0, 1.0);
        for (theta, p) in [(0.0, 1.5), (1.0, 1.5), (0.5, 1.0)] {
            let opts = SolverOptions {
                theta,
                p,
                ..SolverOptions::default()
            };
            let ws = Workspace::new(&s, opts);
            assert!(matches!(
                select_lambda(&ws, 1.0),
                Err(SolveError::Options { .. })
            ));
        }
    }

    #[test]
    fn three_dimensional_exponent_bound() {
        // N = 3, q = 2: q' = 2, 2* = 6, so p must stay below 2
        let g = Arc::new(Grid::unit(3, 5).unwrap());
        let n = g.len();
        let s = ProblemSpec::new(g, vec![-1.0; n], vec![1.0; n], 1.0, 2.0).unwrap();
        let opts = SolverOptions {
            p: 2.5,
            ..SolverOptions::default()
        };
        assert!(matches!(
            select_lambda(&Workspace::new(&s, opts), 1.0),
            Err(SolveError::Options { .. })
        ));
        assert!(select_lambda(&Workspace::new(&s, SolverOptions::default()), 1.0).is_ok());
    }
}
