use std::time::Instant;

use super::{
    construct_v0, initial_point, minimize_in_ball, mountain_pass, refine_p, select_lambda,
    CriticalPoint, GeometryParams, SolveError, SolverOptions, Stage, Workspace,
};
use crate::functional::ProblemSpec;
use crate::grid::ScalarField;
use crate::spectral::{alpha_c, coercivity_constant, principal_eigen, weighted_eigen};
use crate::transform::{pair_from_parts, verify_pair, TransformPair};

/// Linear-analysis data of the coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralSummary {
    /// `λ₁(−c)`
    pub lambda1_c: f64,
    /// `λ₁(−c − μf)`
    pub lambda1_gate: Option<f64>,
    /// `γ₁(−c, f)`
    pub gamma1: Option<f64>,
    pub k1: Option<f64>,
    pub alpha_c: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMode {
    TwoSolutions,
    /// `c⁺ ≡ 0`: only the global minimizer is computed.
    SingleSolution,
}

/// A refined critical point of `I` and its image in (P).
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionBlock {
    pub point: CriticalPoint,
    pub pair: TransformPair,
    /// Residual of (P) at the plain transform of `v`, before the (P) polish.
    pub transform_residual_p: f64,
    pub polish_iterations: usize,
}

/// Everything the pipeline produced, including partial results on failure.
#[derive(Debug)]
pub struct SolveOutcome {
    pub mode: Option<SolveMode>,
    pub spectral: Option<SpectralSummary>,
    pub geometry: Option<GeometryParams>,
    pub lambda: Option<f64>,
    pub solutions: Vec<SolutionBlock>,
    /// `‖v₁ − w₁‖` and `‖u₁ − u₂‖` in `H¹₀`.
    pub distinct_v: Option<f64>,
    pub distinct_u: Option<f64>,
    pub path_energy: Vec<(f64, f64)>,
    pub notes: Vec<String>,
    /// Wall-clock seconds per stage, in execution order.
    pub timings: Vec<(Stage, f64)>,
    pub error: Option<SolveError>,
}

impl SolveOutcome {
    pub fn is_success(&self) -> bool {
        self.error.is_none()
    }
}

struct Timer(Vec<(Stage, f64)>);

impl Timer {
    fn run<T>(&mut self, stage: Stage, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.0.push((stage, t.elapsed().as_secs_f64()));
        out
    }
}

fn spectral_err(stage: Stage) -> impl FnOnce(crate::spectral::SpectralError) -> SolveError {
    move |source| SolveError::Spectral { stage, source }
}

/// Full pipeline: spectral gates, `λ` selection, ball minimizer, mountain
/// pass, Newton refinement, transform to (P) and verification.
pub fn solve_two(spec: &ProblemSpec, opts: SolverOptions) -> SolveOutcome {
    let mut out = SolveOutcome {
        mode: None,
        spectral: None,
        geometry: None,
        lambda: None,
        solutions: Vec::new(),
        distinct_v: None,
        distinct_u: None,
        path_energy: Vec::new(),
        notes: Vec::new(),
        timings: Vec::new(),
        error: None,
    };
    let mut timer = Timer(Vec::new());
    if let Err(e) = run(spec, opts, &mut out, &mut timer) {
        out.error = Some(e);
    }
    out.timings = timer.0;
    out
}

fn run(
    spec: &ProblemSpec,
    opts: SolverOptions,
    out: &mut SolveOutcome,
    timer: &mut Timer,
) -> Result<(), SolveError> {
    let grid = spec.grid();
    if grid.dimension() == 2 {
        out.notes
            .push("two-dimensional run: the theory assumes N >= 3".into());
    }

    // spectral gates
    let stage = Stage::Spectral;
    let summary = timer.run(stage, || -> Result<SpectralSummary, SolveError> {
        let neg_c: Vec<f64> = spec.c().iter().map(|c| -c).collect();
        let lambda1_c = principal_eigen(grid, &neg_c, opts.eigen)
            .map_err(spectral_err(stage))?
            .value;
        let mut s = SpectralSummary {
            lambda1_c,
            lambda1_gate: None,
            gamma1: None,
            k1: None,
            alpha_c: None,
        };
        if lambda1_c <= 0.0 {
            return Ok(s);
        }
        let gate = spec.gate_potential();
        s.lambda1_gate = Some(
            principal_eigen(grid, &gate, opts.eigen)
                .map_err(spectral_err(stage))?
                .value,
        );
        s.gamma1 = Some(
            weighted_eigen(grid, spec.c(), spec.f(), opts.eigen)
                .map_err(spectral_err(stage))?
                .value,
        );
        s.alpha_c = Some(
            alpha_c(grid, spec.c(), spec.f(), spec.mu(), opts.eigen)
                .map_err(spectral_err(stage))?,
        );
        if s.lambda1_gate.unwrap() > 0.0 {
            s.k1 = Some(coercivity_constant(grid, &gate, opts.eigen).map_err(spectral_err(stage))?);
        }
        Ok(s)
    })?;
    out.spectral = Some(summary.clone());
    if summary.lambda1_c <= 0.0 {
        return Err(SolveError::Gate {
            stage,
            condition: "lambda1(-c) > 0".into(),
            value: summary.lambda1_c,
        });
    }
    let gate = summary.lambda1_gate.unwrap();
    if gate <= 0.0 {
        return Err(SolveError::Gate {
            stage,
            condition: format!(
                "lambda1(-c - mu f) > 0 (necessary for a nonnegative solution; mu = {} vs gamma1 = {})",
                spec.mu(),
                summary.gamma1.unwrap_or(f64::NAN)
            ),
            value: gate,
        });
    }
    let k1 = summary.k1.unwrap();
    let ws = Workspace::new(spec, opts.clone());

    if !spec.c_plus_nonzero() {
        out.mode = Some(SolveMode::SingleSolution);
        out.notes.push(
            "c+ vanishes identically: single-solution mode (uniqueness regime); only the global minimizer is computed"
                .into(),
        );
        let lambda = opts.lambda_override.unwrap_or(opts.lambda_start);
        out.lambda = Some(lambda);
        let v1 = timer.run(Stage::MinimizeInBall, || {
            let start = initial_point(&ws, lambda, f64::INFINITY)?;
            minimize_in_ball(&ws, lambda, f64::INFINITY, &start)
        })?;
        let block = timer.run(Stage::Transform, || to_solution(&ws, lambda, v1))?;
        out.solutions.push(block);
        return Ok(());
    }

    out.mode = Some(SolveMode::TwoSolutions);
    let geom = timer.run(Stage::SelectLambda, || select_lambda(&ws, k1))?;
    let lambda = geom.lambda;
    out.lambda = Some(lambda);
    out.geometry = Some(geom.clone());
    let v1 = timer.run(Stage::MinimizeInBall, || {
        let start = initial_point(&ws, lambda, geom.radius)?;
        minimize_in_ball(&ws, lambda, geom.radius, &start)
    })?;
    let v0 = timer.run(Stage::ConstructV0, || construct_v0(&ws, &geom))?;
    let mut mp = timer.run(Stage::MountainPass, || mountain_pass(&ws, &geom, &v0))?;
    let threshold =
        |a: &CriticalPoint, b: &CriticalPoint| 1e-3 * a.v.norm_h10().max(b.v.norm_h10());
    let dist = |a: &CriticalPoint, b: &CriticalPoint| {
        let d: Vec<f64> =
            a.v.values()
                .iter()
                .zip(b.v.values())
                .map(|(x, y)| x - y)
                .collect();
        ws.norm(&d)
    };
    if dist(&v1, &mp.point) < threshold(&v1, &mp.point) {
        out.notes
            .push("mountain pass met the ball minimizer; retrying with a doubled endpoint".into());
        let v0b: Vec<f64> = v0.iter().map(|x| 2.0 * x).collect();
        mp = timer.run(Stage::MountainPass, || mountain_pass(&ws, &geom, &v0b))?;
    }
    let dv = dist(&v1, &mp.point);
    out.distinct_v = Some(dv);
    if dv < threshold(&v1, &mp.point) {
        return Err(SolveError::geometry(
            Stage::Distinctness,
            format!("critical points coincide: |v1 - w1| = {dv:e}"),
        ));
    }
    out.path_energy = mp.path_energy.clone();
    let b1 = timer.run(Stage::Transform, || to_solution(&ws, lambda, v1))?;
    let b2 = timer.run(Stage::Transform, || to_solution(&ws, lambda, mp.point))?;
    let du: Vec<f64> = b1
        .pair
        .u
        .values()
        .iter()
        .zip(b2.pair.u.values())
        .map(|(a, b)| a - b)
        .collect();
    out.distinct_u = Some(ws.norm(&du));
    out.solutions.push(b1);
    out.solutions.push(b2);
    Ok(())
}

/// Transform a critical point to (P), polish `u` with Newton on the discrete
/// (P) equations, and verify residual and positivity.
fn to_solution(
    ws: &Workspace<'_>,
    lambda: f64,
    point: CriticalPoint,
) -> Result<SolutionBlock, SolveError> {
    let stage = Stage::Transform;
    let spec = ws.spec;
    let terr = |source| SolveError::Transform { stage, source };
    let raw = verify_pair(spec, lambda, &point.v, ws.opts.tol_p).map_err(terr)?;
    let polish = refine_p(
        spec,
        raw.u.values(),
        ws.opts.tol_p * 1e-4,
        ws.opts.max_iter_newton,
    )?;
    let u = ScalarField::new(spec.grid().clone(), polish.v).map_err(|e| terr(e.into()))?;
    let pair = pair_from_parts(spec, lambda, u, raw.v.clone(), ws.opts.tol_p).map_err(terr)?;
    if !pair.success {
        return Err(SolveError::not_converged(
            stage,
            format!(
                "transformed solution fails verification: residual_P = {:e}, positivity margin = {:e}",
                pair.residual_p, pair.positivity_margin
            ),
        ));
    }
    Ok(SolutionBlock {
        point,
        transform_residual_p: raw.residual_p,
        polish_iterations: polish.iterations,
        pair,
    })
}
