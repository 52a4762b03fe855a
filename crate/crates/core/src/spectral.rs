//! Principal eigenvalues of Schrödinger-type operators and pencils on the grid.
//!
//! All routines run inverse iteration `x ← (A − σB)⁻¹ B x` for the pencil
//! `A x = κ B x` with a banded Cholesky factor of `A − σB`, taking Rayleigh
//! quotients `xᵀAx / xᵀBx` as eigenvalue estimates. The start vector is the
//! normalized all-ones field, so every solve is deterministic.

use std::sync::Arc;

use crate::grid::{Grid, ScalarField};
use crate::linalg::{self, BandedCholesky, CsrMatrix, LinalgError};

/// Quotients are never formed against `∫ f u²` below this floor.
const WEIGHT_FLOOR: f64 = 1e-14;
/// Relative zero-set threshold for the `α_c` diagnostic.
const ZERO_SET_TOL: f64 = 1e-12;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum SpectralError {
    #[error("inverse iteration did not converge after {iterations} iterations (residual {residual:e}, value {value})")]
    NotConverged {
        iterations: usize,
        residual: f64,
        value: f64,
    },
    #[error("{what} must be positive, got {value}")]
    NotPositive { what: &'static str, value: f64 },
    #[error("weight f must be nonnegative and not identically zero")]
    BadWeight,
    #[error(
        "weighted quotient degenerated: ∫ f u² stayed below {WEIGHT_FLOOR:e} for every iterate"
    )]
    Degenerate,
    #[error("coefficient length {got} does not match grid ({expected})")]
    Length { expected: usize, got: usize },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenResult {
    pub value: f64,
    /// Unit L² norm, sign fixed so that its nodal sum is nonnegative.
    pub eigenfunction: ScalarField,
    pub iterations: usize,
    /// `‖Ax − κBx‖₂ / max(1, |κ|‖Bx‖₂)` at the returned pair.
    pub residual: f64,
}

enum Weight<'a> {
    Identity,
    Diagonal(&'a [f64]),
    Matrix(&'a CsrMatrix),
}

impl Weight<'_> {
    fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Weight::Identity => x.to_vec(),
            Weight::Diagonal(d) => x.iter().zip(d.iter()).map(|(a, b)| a * b).collect(),
            Weight::Matrix(m) => m.matvec(x),
        }
    }
}

struct RawEigen {
    value: f64,
    vector: Vec<f64>,
    iterations: usize,
    residual: f64,
}

/// Inverse iteration on `A x = κ B x` with `A − σB` positive definite.
fn pencil_iteration(
    a: &CsrMatrix,
    b: Weight<'_>,
    shift: f64,
    cell: f64,
    opts: EigenOptions,
) -> Result<RawEigen, SpectralError> {
    let n = a.dim();
    let shifted = match &b {
        Weight::Identity => a.add_diagonal(&vec![-shift; n]),
        Weight::Diagonal(d) => a.add_diagonal(&d.iter().map(|w| -shift * w).collect::<Vec<_>>()),
        Weight::Matrix(m) => {
            assert!(shift == 0.0, "matrix weights are only used unshifted");
            let _ = m;
            a.clone()
        }
    };
    let factor = BandedCholesky::factor(&shifted)?;
    let normalize = |x: &mut Vec<f64>| {
        let nrm = (cell * linalg::dot(x, x)).sqrt();
        x.iter_mut().for_each(|v| *v /= nrm);
    };
    let mut x = vec![1.0; n];
    normalize(&mut x);
    let mut last = (f64::NAN, f64::INFINITY);
    let mut any_valid = false;
    for it in 1..=opts.max_iter {
        let bx = b.apply(&x);
        let mut y = factor.solve(&bx);
        if y.iter().all(|v| *v == 0.0) {
            return Err(SpectralError::Degenerate);
        }
        normalize(&mut y);
        x = y;
        let ax = a.matvec(&x);
        let bx = b.apply(&x);
        let den = linalg::dot(&x, &bx);
        if den * cell < WEIGHT_FLOOR {
            continue;
        }
        any_valid = true;
        let value = linalg::dot(&x, &ax) / den;
        let res: f64 = ax
            .iter()
            .zip(&bx)
            .map(|(p, q)| (p - value * q).powi(2))
            .sum::<f64>()
            .sqrt();
        let bnorm = linalg::dot(&bx, &bx).sqrt();
        let rel = res / (value.abs() * bnorm).max(1.0 / cell.sqrt());
        last = (value, rel);
        if rel <= opts.tol {
            if x.iter().sum::<f64>() < 0.0 {
                x.iter_mut().for_each(|v| *v = -*v);
            }
            return Ok(RawEigen {
                value,
                vector: x,
                iterations: it,
                residual: rel,
            });
        }
    }
    if !any_valid {
        return Err(SpectralError::Degenerate);
    }
    Err(SpectralError::NotConverged {
        iterations: opts.max_iter,
        residual: last.1,
        value: last.0,
    })
}

fn check_len(grid: &Grid, v: &[f64]) -> Result<(), SpectralError> {
    if v.len() != grid.len() {
        return Err(SpectralError::Length {
            expected: grid.len(),
            got: v.len(),
        });
    }
    Ok(())
}

/// Smallest eigenvalue of a symmetric sparse operator, by shifted inverse
/// iteration with the shift placed below its Gershgorin lower bound.
pub fn principal_eigen_matrix(
    op: &CsrMatrix,
    cell: f64,
    opts: EigenOptions,
) -> Result<(f64, Vec<f64>, usize, f64), SpectralError> {
    let lower = op.gershgorin_lower();
    let shift = lower - lower.abs().max(1.0) * 1e-3 - 1.0;
    let raw = pencil_iteration(op, Weight::Identity, shift, cell, opts)?;
    Ok((raw.value, raw.vector, raw.iterations, raw.residual))
}

/// `λ₁(V)`: principal Dirichlet eigenvalue of `−Δ_h + V`.
pub fn principal_eigen(
    grid: &Arc<Grid>,
    potential: &[f64],
    opts: EigenOptions,
) -> Result<EigenResult, SpectralError> {
    check_len(grid, potential)?;
    let op = grid.laplacian_matrix().add_diagonal(potential);
    let (value, vector, iterations, residual) =
        principal_eigen_matrix(&op, grid.cell_volume(), opts)?;
    Ok(EigenResult {
        value,
        eigenfunction: ScalarField::new(grid.clone(), vector).expect("finite eigenvector"),
        iterations,
        residual,
    })
}

/// `γ₁(−c, f)`: smallest `γ` with `−Δu − cu = γ f u`. Requires `λ₁(−c) > 0`.
pub fn weighted_eigen(
    grid: &Arc<Grid>,
    c: &[f64],
    f: &[f64],
    opts: EigenOptions,
) -> Result<EigenResult, SpectralError> {
    check_len(grid, c)?;
    check_len(grid, f)?;
    if f.iter().any(|&w| w < 0.0) || f.iter().all(|&w| w == 0.0) {
        return Err(SpectralError::BadWeight);
    }
    let neg_c: Vec<f64> = c.iter().map(|v| -v).collect();
    let base = principal_eigen(grid, &neg_c, opts)?;
    if base.value <= 0.0 {
        return Err(SpectralError::NotPositive {
            what: "lambda1(-c)",
            value: base.value,
        });
    }
    let op = grid.laplacian_matrix().add_diagonal(&neg_c);
    let raw = pencil_iteration(&op, Weight::Diagonal(f), 0.0, grid.cell_volume(), opts)?;
    Ok(EigenResult {
        value: raw.value,
        eigenfunction: ScalarField::new(grid.clone(), raw.vector).expect("finite eigenvector"),
        iterations: raw.iterations,
        residual: raw.residual,
    })
}

/// `K₁ = min(1, κ)` with `κ` the smallest eigenvalue of `(−Δ_h + V) x = κ (−Δ_h) x`,
/// i.e. the best constant in `∫|∇v|² + V v² ≥ κ‖v‖²`.
pub fn coercivity_constant(
    grid: &Arc<Grid>,
    potential: &[f64],
    opts: EigenOptions,
) -> Result<f64, SpectralError> {
    check_len(grid, potential)?;
    // with V ≥ 0 every quotient is at least 1
    if potential.iter().all(|&v| v >= 0.0) {
        return Ok(1.0);
    }
    let kappa = coercivity_pencil_value(grid, potential, opts)?;
    if kappa <= 0.0 {
        return Err(SpectralError::NotPositive {
            what: "coercivity pencil value",
            value: kappa,
        });
    }
    Ok(kappa.min(1.0))
}

/// Unclamped smallest pencil eigenvalue `κ` used by [`coercivity_constant`].
pub fn coercivity_pencil_value(
    grid: &Arc<Grid>,
    potential: &[f64],
    opts: EigenOptions,
) -> Result<f64, SpectralError> {
    check_len(grid, potential)?;
    let lap = grid.laplacian_matrix();
    let op = lap.add_diagonal(potential);
    match pencil_iteration(&op, Weight::Matrix(&lap), 0.0, grid.cell_volume(), opts) {
        Ok(raw) => Ok(raw.value),
        Err(SpectralError::Linalg(LinalgError::NotPositiveDefinite { .. })) => {
            let l1 = principal_eigen(grid, potential, opts)?;
            Err(SpectralError::NotPositive {
                what: "lambda1(V)",
                value: l1.value,
            })
        }
        Err(e) => Err(e),
    }
}

/// Zero set `{|c| ≤ 1e−12 ‖c‖_∞}` of the coefficient, as sorted node indices.
pub fn zero_set(c: &[f64]) -> Vec<usize> {
    let cmax = c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tol = ZERO_SET_TOL * cmax;
    (0..c.len()).filter(|&i| c[i].abs() <= tol).collect()
}

/// `α_c` surrogate: principal eigenvalue of `−Δ_h − μf` restricted to the
/// zero set of `c` with Dirichlet conditions on its complement. Returns
/// `+∞` when the zero set is empty.
pub fn alpha_c(
    grid: &Arc<Grid>,
    c: &[f64],
    f: &[f64],
    mu: f64,
    opts: EigenOptions,
) -> Result<f64, SpectralError> {
    check_len(grid, c)?;
    check_len(grid, f)?;
    let keep = zero_set(c);
    if keep.is_empty() {
        return Ok(f64::INFINITY);
    }
    let pot: Vec<f64> = keep.iter().map(|&i| -mu * f[i]).collect();
    let op = grid
        .laplacian_matrix()
        .principal_submatrix(&keep)
        .add_diagonal(&pot);
    let (value, ..) = principal_eigen_matrix(&op, grid.cell_volume(), opts)?;
    Ok(value)
}

/// `λ₁(−c − μf)` for each `μ`.
pub fn mu_scan(
    grid: &Arc<Grid>,
    c: &[f64],
    f: &[f64],
    mus: &[f64],
    opts: EigenOptions,
) -> Result<Vec<(f64, f64)>, SpectralError> {
    mus.iter()
        .map(|&mu| {
            let pot: Vec<f64> = c.iter().zip(f).map(|(ci, fi)| -ci - mu * fi).collect();
            Ok((mu, principal_eigen(grid, &pot, opts)?.value))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, SymmetricEigen};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn dense(m: &CsrMatrix) -> DMatrix<f64> {
        let d = m.to_dense();
        DMatrix::from_fn(m.dim(), m.dim(), |i, j| d[i][j])
    }

    fn dense_min_eig(m: DMatrix<f64>) -> f64 {
        SymmetricEigen::new(m).eigenvalues.min()
    }

    /// Smallest eigenvalue of `A x = κ D x` with `D` diagonal positive.
    fn dense_weighted_min(a: DMatrix<f64>, d: &[f64]) -> f64 {
        let s = DMatrix::from_fn(d.len(), d.len(), |i, j| {
            if i == j {
                1.0 / d[i].sqrt()
            } else {
                0.0
            }
        });
        dense_min_eig(&s * a * &s)
    }

    fn grid(n: usize) -> Arc<Grid> {
        Arc::new(Grid::unit(2, n).unwrap())
    }

    #[test]
    fn laplacian_ground_state() {
        let g = grid(65);
        let r = principal_eigen(&g, &vec![0.0; g.len()], EigenOptions::default()).unwrap();
        assert!((r.value - 2.0 * PI * PI).abs() < 0.01 * 2.0 * PI * PI);
        assert!((r.eigenfunction.norm_l2() - 1.0).abs() < 1e-12);
        assert!(r.eigenfunction.min() >= -1e-10);
        assert!(r.residual <= 1e-10);
        let h = g.spacing()[0];
        let exact = 8.0 / (h * h) * (PI * h / 2.0).sin().powi(2);
        assert!((r.value - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn constant_shift() {
        let g = grid(17);
        let z = principal_eigen(&g, &vec![0.0; g.len()], EigenOptions::default()).unwrap();
        for v0 in [-7.5, 3.0, 40.0] {
            let s = principal_eigen(&g, &vec![v0; g.len()], EigenOptions::default()).unwrap();
            assert!((s.value - z.value - v0).abs() < 1e-10 * (1.0 + z.value.abs()));
        }
    }

    #[test]
    fn dense_oracle_small_grids() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for n in [5usize, 6, 8] {
            let g = grid(n);
            let lap = g.laplacian_matrix();
            for _ in 0..3 {
                let v: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-30.0..30.0)).collect();
                let r = principal_eigen(&g, &v, EigenOptions::default()).unwrap();
                let d = dense_min_eig(dense(&lap.add_diagonal(&v)));
                assert!((r.value - d).abs() < 1e-8 * (1.0 + d.abs()));
            }
        }
    }

    #[test]
    fn monotone_in_potential() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let g = grid(7);
        for _ in 0..20 {
            let v1: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-20.0..20.0)).collect();
            let v2: Vec<f64> = v1.iter().map(|x| x + rng.gen_range(0.0..5.0)).collect();
            let a = principal_eigen(&g, &v1, EigenOptions::default())
                .unwrap()
                .value;
            let b = principal_eigen(&g, &v2, EigenOptions::default())
                .unwrap()
                .value;
            assert!(a <= b + 1e-10);
        }
    }

    #[test]
    fn weighted_reduces_to_laplacian() {
        let g = grid(33);
        let n = g.len();
        let z = principal_eigen(&g, &vec![0.0; n], EigenOptions::default()).unwrap();
        let w = weighted_eigen(&g, &vec![0.0; n], &vec![1.0; n], EigenOptions::default()).unwrap();
        assert!((w.value - z.value).abs() < 1e-9 * z.value);
        let w2 = weighted_eigen(&g, &vec![0.0; n], &vec![2.0; n], EigenOptions::default()).unwrap();
        assert!((w2.value - w.value / 2.0).abs() < 1e-10 * w.value);
    }

    #[test]
    fn weighted_dense_oracle_and_semidefinite_weight() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in [5usize, 6] {
            let g = grid(n);
            let lap = g.laplacian_matrix();
            for _ in 0..4 {
                let c: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(-10.0..10.0)).collect();
                let f: Vec<f64> = (0..g.len()).map(|_| rng.gen_range(0.1..3.0)).collect();
                let neg: Vec<f64> = c.iter().map(|x| -x).collect();
                let r = weighted_eigen(&g, &c, &f, EigenOptions::default()).unwrap();
                let d = dense_weighted_min(dense(&lap.add_diagonal(&neg)), &f);
                assert!((r.value - d).abs() < 1e-8 * (1.0 + d.abs()));
            }
        }
        // weight vanishing on part of the domain
        let g = grid(9);
        let f: Vec<f64> = (0..g.len())
            .map(|i| if g.coords(i)[0] < 0.5 { 1.0 } else { 0.0 })
            .collect();
        let r = weighted_eigen(&g, &vec![0.0; g.len()], &f, EigenOptions::default()).unwrap();
        let rq = r.eigenfunction.inner_h10(&r.eigenfunction).unwrap()
            / g.weighted_integral(&f, r.eigenfunction.values(), 2);
        assert!((rq - r.value).abs() < 1e-8 * r.value);
        assert!(r.value > 2.0 * PI * PI);
    }

    #[test]
    fn weighted_requires_positive_base() {
        let g = grid(9);
        let n = g.len();
        let err = weighted_eigen(&g, &vec![100.0; n], &vec![1.0; n], EigenOptions::default());
        assert!(matches!(err, Err(SpectralError::NotPositive { .. })));
        let err = weighted_eigen(&g, &vec![0.0; n], &vec![0.0; n], EigenOptions::default());
        assert_eq!(err, Err(SpectralError::BadWeight));
    }

    #[test]
    fn coercivity_examples_and_oracle() {
        let g = grid(6);
        let n = g.len();
        assert_eq!(
            coercivity_constant(&g, &vec![0.0; n], EigenOptions::default()).unwrap(),
            1.0
        );
        assert_eq!(
            coercivity_constant(&g, &vec![5.0; n], EigenOptions::default()).unwrap(),
            1.0
        );
        let lap = g.laplacian_matrix();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-30.0..10.0)).collect();
        let kappa = coercivity_pencil_value(&g, &v, EigenOptions::default()).unwrap();
        // dense oracle: A = L Lᵀ, κ = λmin(L⁻¹(A+V)L⁻ᵀ)
        let a = dense(&lap);
        let chol = nalgebra::Cholesky::new(a.clone()).unwrap();
        let linv = chol.l().try_inverse().unwrap();
        let m = &linv * dense(&lap.add_diagonal(&v)) * linv.transpose();
        let d = dense_min_eig((&m + m.transpose()) * 0.5);
        assert!((kappa - d).abs() < 1e-8);
        assert!(kappa > 0.0 && kappa < 1.0);
        let err = coercivity_constant(&g, &vec![-200.0; n], EigenOptions::default());
        assert!(matches!(err, Err(SpectralError::NotPositive { .. })));
    }

    #[test]
    fn coercivity_monte_carlo_audit() {
        let g = grid(6);
        let n = g.len();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-40.0..20.0)).collect();
        let k1 = coercivity_constant(&g, &v, EigenOptions::default()).unwrap();
        assert!(k1 > 0.0 && k1 <= 1.0);
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let xp: Vec<f64> = x.iter().map(|t| t.max(0.0)).collect();
            let q = g.dot_h10(&x, &x) + g.weighted_integral(&v, &xp, 2);
            assert!(q / g.dot_h10(&x, &x) >= k1 - 1e-10);
        }
    }

    #[test]
    fn alpha_c_branches() {
        let g = grid(17);
        let n = g.len();
        let f = vec![1.0; n];
        assert_eq!(
            alpha_c(&g, &vec![1.0; n], &f, 1.0, EigenOptions::default()).unwrap(),
            f64::INFINITY
        );
        let full = principal_eigen(&g, &vec![0.0; n], EigenOptions::default())
            .unwrap()
            .value;
        let a = alpha_c(
            &g,
            &vec![0.0; n],
            &vec![0.0; n],
            0.0,
            EigenOptions::default(),
        )
        .unwrap();
        assert!((a - full).abs() < 1e-10 * full);
    }

    #[test]
    fn alpha_c_half_domain_dense() {
        let g = grid(9);
        let n = g.len();
        let c: Vec<f64> = (0..n)
            .map(|i| if g.coords(i)[0] < 0.5 { 0.0 } else { 2.0 })
            .collect();
        let f: Vec<f64> = (0..n).map(|i| 1.0 + g.coords(i)[1]).collect();
        let mu = 0.3;
        let a = alpha_c(&g, &c, &f, mu, EigenOptions::default()).unwrap();
        let keep: Vec<usize> = (0..n).filter(|&i| c[i] == 0.0).collect();
        let lap = dense(&g.laplacian_matrix());
        let sub = DMatrix::from_fn(keep.len(), keep.len(), |i, j| {
            lap[(keep[i], keep[j])] - if i == j { mu * f[keep[i]] } else { 0.0 }
        });
        let d = dense_min_eig(sub);
        assert!((a - d).abs() < 1e-8 * (1.0 + d.abs()));
    }
}
