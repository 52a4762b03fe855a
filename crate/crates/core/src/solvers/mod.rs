//! Computation of the two critical points of `I`: geometry selection, ball
//! minimization, the mountain-pass path method and Newton refinement.

mod ball;
mod geometry;
mod mountain;
mod newton;
mod pipeline;

use std::fmt;
use std::sync::Arc;

pub use ball::{initial_point, minimize_in_ball};
pub use geometry::{select_lambda, sphere_minimum, GeometryParams};
pub use mountain::{construct_v0, mountain_pass, MountainPassResult};
pub use newton::{newton_refine, refine_p, NewtonOutcome};
pub use pipeline::{solve_two, SolutionBlock, SolveMode, SolveOutcome, SpectralSummary};

use crate::functional::ProblemSpec;
use crate::grid::{Grid, ScalarField};
use crate::linalg::{self, BandedCholesky};
use crate::spectral::{EigenOptions, SpectralError};
use crate::transform::TransformError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Spectral,
    SelectLambda,
    MinimizeInBall,
    ConstructV0,
    MountainPass,
    Newton,
    Transform,
    Distinctness,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Spectral => "spectral",
            Stage::SelectLambda => "select_lambda",
            Stage::MinimizeInBall => "minimize_in_ball",
            Stage::ConstructV0 => "construct_v0",
            Stage::MountainPass => "mountain_pass",
            Stage::Newton => "newton_refine",
            Stage::Transform => "transform",
            Stage::Distinctness => "distinctness",
        })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SolveError {
    /// A necessary condition on the coefficients fails.
    #[error("[{stage}] regime gate failed: {condition} is violated (value {value})")]
    Gate {
        stage: Stage,
        condition: String,
        value: f64,
    },
    #[error("[{stage}] did not converge: {detail}")]
    NotConverged { stage: Stage, detail: String },
    #[error("[{stage}] geometry failure: {detail}")]
    Geometry { stage: Stage, detail: String },
    #[error("[{stage}] invalid options: {detail}")]
    Options { stage: Stage, detail: String },
    #[error("[{stage}] {source}")]
    Spectral {
        stage: Stage,
        #[source]
        source: SpectralError,
    },
    #[error("[{stage}] {source}")]
    Transform {
        stage: Stage,
        #[source]
        source: TransformError,
    },
}

impl SolveError {
    pub fn stage(&self) -> Stage {
        match self {
            SolveError::Gate { stage, .. }
            | SolveError::NotConverged { stage, .. }
            | SolveError::Geometry { stage, .. }
            | SolveError::Options { stage, .. }
            | SolveError::Spectral { stage, .. }
            | SolveError::Transform { stage, .. } => *stage,
        }
    }

    /// Process exit code: 3 regime gate, 4 non-convergence, 5 geometry.
    pub fn exit_code(&self) -> i32 {
        match self {
            SolveError::Gate { .. } => 3,
            SolveError::Geometry { .. } => 5,
            SolveError::Options { .. } => 2,
            SolveError::Spectral {
                source: SpectralError::NotPositive { .. },
                ..
            } => 3,
            SolveError::NotConverged { .. }
            | SolveError::Spectral { .. }
            | SolveError::Transform { .. } => 4,
        }
    }

    fn not_converged(stage: Stage, detail: impl Into<String>) -> SolveError {
        SolveError::NotConverged {
            stage,
            detail: detail.into(),
        }
    }

    fn geometry(stage: Stage, detail: impl Into<String>) -> SolveError {
        SolveError::Geometry {
            stage,
            detail: detail.into(),
        }
    }
}

/// Tunables for every stage of the pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    pub theta: f64,
    pub p: f64,
    pub lambda_start: f64,
    pub lambda_cap: f64,
    /// Use this λ instead of searching for one.
    pub lambda_override: Option<f64>,
    pub probes: usize,
    pub sphere_descent_iters: usize,
    pub seed: u64,
    pub path_nodes: usize,
    /// Descent steps between arclength redistributions of the path.
    pub sweep_len: usize,
    /// Critical-point acceptance on the L² gradient norm.
    pub tol_gradient: f64,
    pub tol_newton: f64,
    /// Dual-norm stopping tolerance of the descent methods.
    pub tol_descent: f64,
    pub tol_p: f64,
    /// Newton is only attempted from points with L² gradient norm below this.
    pub newton_gate: f64,
    pub max_iter_ball: usize,
    pub max_iter_mp: usize,
    pub max_iter_newton: usize,
    pub armijo: f64,
    pub backtrack: f64,
    pub eigen: EigenOptions,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            theta: 0.5,
            p: 1.5,
            lambda_start: 1.0,
            lambda_cap: 1e12,
            lambda_override: None,
            probes: 64,
            sphere_descent_iters: 200,
            seed: 1,
            path_nodes: 41,
            sweep_len: 20,
            tol_gradient: 1e-8,
            tol_newton: 1e-10,
            tol_descent: 1e-6,
            tol_p: 1e-6,
            newton_gate: 1e-3,
            max_iter_ball: 20_000,
            max_iter_mp: 20_000,
            max_iter_newton: 50,
            armijo: 1e-4,
            backtrack: 0.5,
            eigen: EigenOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CriticalKind {
    BallMinimizer,
    GlobalMinimizer,
    MountainPass,
}

impl fmt::Display for CriticalKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CriticalKind::BallMinimizer => "ball-minimizer",
            CriticalKind::GlobalMinimizer => "global-minimizer",
            CriticalKind::MountainPass => "mountain-pass",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticalPoint {
    pub v: ScalarField,
    pub energy: f64,
    /// Quadrature L² norm of the gradient field.
    pub gradient_norm: f64,
    pub kind: CriticalKind,
    /// Mountain-pass level `d` (mountain-pass points only).
    pub level: Option<f64>,
    pub descent_iterations: usize,
    pub newton_iterations: usize,
}

/// Problem data plus a factorization of `−Δ_h`, used as the Riesz map of
/// `H¹₀` (Sobolev gradients) by every descent method.
pub struct Workspace<'a> {
    pub spec: &'a ProblemSpec,
    pub opts: SolverOptions,
    laplacian: BandedCholesky,
}

impl<'a> Workspace<'a> {
    pub fn new(spec: &'a ProblemSpec, opts: SolverOptions) -> Workspace<'a> {
        let laplacian = BandedCholesky::factor(&spec.grid().laplacian_matrix())
            .expect("the Dirichlet Laplacian is positive definite");
        Workspace {
            spec,
            opts,
            laplacian,
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.spec.grid()
    }

    /// `H¹₀` representative of the functional `φ ↦ ∫ r φ`.
    pub fn riesz(&self, r: &[f64]) -> Vec<f64> {
        self.laplacian.solve(r)
    }

    pub fn energy(&self, lambda: f64, v: &[f64]) -> f64 {
        self.spec.energy_of(lambda, v).total
    }

    pub fn gradient(&self, lambda: f64, v: &[f64]) -> Vec<f64> {
        self.spec.gradient_of(lambda, v)
    }

    pub fn norm(&self, v: &[f64]) -> f64 {
        self.grid().norm_h10(v)
    }

    pub fn l2(&self, v: &[f64]) -> f64 {
        self.grid().norm_l2(v)
    }

    /// `‖r‖_{H⁻¹}` from its Riesz representative `s`: `(∫ r s)^{1/2}`.
    fn dual_norm(&self, r: &[f64], s: &[f64]) -> f64 {
        (self.grid().cell_volume() * linalg::dot(r, s))
            .max(0.0)
            .sqrt()
    }

    fn field(&self, v: Vec<f64>) -> ScalarField {
        ScalarField::new(self.grid().clone(), v).expect("solver iterates stay finite")
    }
}

fn check_finite(stage: Stage, v: &[f64]) -> Result<(), SolveError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(SolveError::not_converged(
            stage,
            "iterate became non-finite",
        ))
    }
}
