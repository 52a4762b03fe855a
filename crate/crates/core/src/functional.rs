//! The energy `I`, its gradient, and strong-form residuals of the quasilinear
//! problem (P) and of its semilinear transform (Q).
//!
//! ```text
//! (P)  −Δu = c u + μ|∇u|² + f
//! (Q)  −Δv − (c + μf) v = c g_λ(v) + (μ/λ) f
//! I(v) = ½∫|∇v|² − ½∫(c+μf)(v⁺)² − ∫c G_λ(v⁺) − (μ/λ)∫f v
//! ```

use std::sync::Arc;

use crate::grid::{Grid, GridError, ScalarField};
use crate::nonlinearity::{big_g, g};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ProblemError {
    #[error("f must be nonnegative (node {0} is negative)")]
    NegativeF(usize),
    #[error("f must not vanish identically")]
    ZeroF,
    #[error("mu must be positive and finite, got {0}")]
    Mu(f64),
    #[error("q must exceed N/2 = {half_n}, got {q}")]
    Q { q: f64, half_n: f64 },
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Coefficients of the problem. `c` may change sign; `f ≥ 0` with `f ≢ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    grid: Arc<Grid>,
    c: Vec<f64>,
    f: Vec<f64>,
    mu: f64,
    q: f64,
}

impl ProblemSpec {
    pub fn new(
        grid: Arc<Grid>,
        c: Vec<f64>,
        f: Vec<f64>,
        mu: f64,
        q: f64,
    ) -> Result<ProblemSpec, ProblemError> {
        let c = ScalarField::new(grid.clone(), c)?.into_values();
        let f = ScalarField::new(grid.clone(), f)?.into_values();
        if let Some(i) = f.iter().position(|&x| x < 0.0) {
            return Err(ProblemError::NegativeF(i));
        }
        if f.iter().all(|&x| x == 0.0) {
            return Err(ProblemError::ZeroF);
        }
        if !(mu.is_finite() && mu > 0.0) {
            return Err(ProblemError::Mu(mu));
        }
        let half_n = grid.dimension() as f64 / 2.0;
        if !(q > half_n) {
            return Err(ProblemError::Q { q, half_n });
        }
        Ok(ProblemSpec { grid, c, f, mu, q })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn c(&self) -> &[f64] {
        &self.c
    }
    pub fn f(&self) -> &[f64] {
        &self.f
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn q(&self) -> f64 {
        self.q
    }

    /// Same coefficients with `μ` replaced.
    pub fn with_mu(&self, mu: f64) -> Result<ProblemSpec, ProblemError> {
        ProblemSpec::new(
            self.grid.clone(),
            self.c.clone(),
            self.f.clone(),
            mu,
            self.q,
        )
    }

    /// Nodes of `Ω₊ = {c > 0}`.
    pub fn positive_set(&self) -> Vec<usize> {
        (0..self.c.len()).filter(|&i| self.c[i] > 0.0).collect()
    }

    /// Nodes of `Ω₋ = {c < 0}`.
    pub fn negative_set(&self) -> Vec<usize> {
        (0..self.c.len()).filter(|&i| self.c[i] < 0.0).collect()
    }

    pub fn c_plus_nonzero(&self) -> bool {
        self.c.iter().any(|&x| x > 0.0)
    }

    /// `−c − μf`, the potential whose principal eigenvalue gates existence.
    pub fn gate_potential(&self) -> Vec<f64> {
        self.c
            .iter()
            .zip(&self.f)
            .map(|(c, f)| -c - self.mu * f)
            .collect()
    }

    /// Energy of a raw nodal vector; see [`energy`].
    pub fn energy_of(&self, lambda: f64, v: &[f64]) -> EnergyBreakdown {
        let grid = &self.grid;
        let w = grid.cell_volume();
        let quad_grad = 0.5 * grid.dot_h10(v, v);
        let mut quad_pot = 0.0;
        let mut sup = 0.0;
        let mut lin = 0.0;
        for i in 0..v.len() {
            let vp = v[i].max(0.0);
            quad_pot += (self.c[i] + self.mu * self.f[i]) * vp * vp;
            sup += self.c[i] * big_g(lambda, vp);
            lin += self.f[i] * v[i];
        }
        let quadratic = quad_grad - 0.5 * w * quad_pot;
        let superquadratic = -w * sup;
        let linear = -(self.mu / lambda) * w * lin;
        EnergyBreakdown {
            quadratic,
            superquadratic,
            linear,
            total: quadratic + superquadratic + linear,
        }
    }

    /// Gradient of a raw nodal vector; see [`gradient`].
    pub fn gradient_of(&self, lambda: f64, v: &[f64]) -> Vec<f64> {
        let mut r = self.grid.neg_laplacian(v);
        let scale = self.mu / lambda;
        for i in 0..v.len() {
            let vp = v[i].max(0.0);
            r[i] -= (self.c[i] + self.mu * self.f[i]) * vp
                + self.c[i] * g(lambda, vp)
                + scale * self.f[i];
        }
        r
    }
}

/// The three parts of `I(v)` and their sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    /// `½∫|∇v|² − ½∫(c+μf)(v⁺)²`
    pub quadratic: f64,
    /// `−∫c G_λ(v⁺)`
    pub superquadratic: f64,
    /// `−(μ/λ)∫f v`
    pub linear: f64,
    pub total: f64,
}

fn check(spec: &ProblemSpec, v: &ScalarField) -> Result<(), GridError> {
    if Arc::ptr_eq(spec.grid(), v.grid()) || **spec.grid() == **v.grid() {
        Ok(())
    } else {
        Err(GridError::Mismatch)
    }
}

pub fn energy(
    spec: &ProblemSpec,
    lambda: f64,
    v: &ScalarField,
) -> Result<EnergyBreakdown, GridError> {
    check(spec, v)?;
    Ok(spec.energy_of(lambda, v.values()))
}

/// Nodal field `r` with `⟨r, φ⟩ = I'(v)[φ]` for every grid function `φ`:
/// `r = −Δ_h v − (c+μf)v⁺ − c g_λ(v⁺) − (μ/λ) f`.
pub fn gradient(
    spec: &ProblemSpec,
    lambda: f64,
    v: &ScalarField,
) -> Result<ScalarField, GridError> {
    check(spec, v)?;
    ScalarField::new(spec.grid().clone(), spec.gradient_of(lambda, v.values()))
}

/// Pointwise residual of (P): `−Δ_h u − cu − μ|∇_h u|² − f`.
pub fn pde_residual_p(grid: &Grid, c: &[f64], f: &[f64], mu: f64, u: &[f64]) -> Vec<f64> {
    let mut r = grid.neg_laplacian(u);
    let gs = grid.grad_sq(u);
    for i in 0..u.len() {
        r[i] -= c[i] * u[i] + mu * gs[i] + f[i];
    }
    r
}

/// Pointwise residual of (Q) in its expanded form
/// `−Δ_h v − λ⁻¹c(1+λv)ln(1+λv) − (μ/λ)f(1+λv)`, defined for `1 + λv > 0`.
pub fn pde_residual_q(
    grid: &Grid,
    c: &[f64],
    f: &[f64],
    mu: f64,
    lambda: f64,
    v: &[f64],
) -> Vec<f64> {
    let mut r = grid.neg_laplacian(v);
    for i in 0..v.len() {
        let t = lambda * v[i];
        r[i] -= c[i] * (1.0 + t) * t.ln_1p() / lambda + (mu / lambda) * f[i] * (1.0 + t);
    }
    r
}

/// Quadrature L² norm of the (P) residual.
pub fn residual_p(spec: &ProblemSpec, u: &ScalarField) -> Result<f64, GridError> {
    check(spec, u)?;
    let r = pde_residual_p(spec.grid(), spec.c(), spec.f(), spec.mu(), u.values());
    Ok(spec.grid().norm_l2(&r))
}

/// Quadrature L² norm of the (Q) residual.
pub fn residual_q(spec: &ProblemSpec, lambda: f64, v: &ScalarField) -> Result<f64, GridError> {
    check(spec, v)?;
    let r = pde_residual_q(
        spec.grid(),
        spec.c(),
        spec.f(),
        spec.mu(),
        lambda,
        v.values(),
    );
    Ok(spec.grid().norm_l2(&r))
}
