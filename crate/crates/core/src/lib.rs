//! Two positive solutions of `−Δu = c(x)u + μ|∇u|² + f(x)` on a box with
//! zero Dirichlet data.
//!
//! The quasilinear problem is mapped to a semilinear one by
//! `v = (e^{μu} − 1)/λ`, whose energy `I` has a mountain-pass geometry when
//! `c⁺ ≢ 0` and `λ₁(−c − μf) > 0`. The solver computes a local minimizer in a
//! small ball and a mountain-pass point, refines both by Newton's method and
//! maps them back.

pub mod config;
pub mod functional;
pub mod grid;
pub mod linalg;
pub mod nonlinearity;
pub mod presets;
pub mod report;
pub mod scenario;
pub mod solvers;
pub mod spectral;
pub mod transform;
