//! The slowly superlinear kernel family produced by the exponential change of
//! variable, `g_λ(s) = λ⁻¹(1+λs)ln(1+λs) − s` for `s ≥ 0` and `0` otherwise,
//! its antiderivative `G_λ`, the combination `H_λ = ½ g_λ s − G_λ` and the
//! derivative `g_λ'`.
//!
//! Every kernel depends on `(λ, s)` only through `t = λs` up to a power of
//! `λ`, so each is written as `λ^k · k(t)`. For small `t` the closed forms
//! cancel catastrophically and a Taylor series in `t` is used instead.

/// Below this value of `t = λs` the power series are used.
const SERIES_CUTOFF: f64 = 0.1;
const SERIES_TERMS: i32 = 24;

/// Positive scaling parameter of the change of variable.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LambdaParam(f64);

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum KernelError {
    #[error("lambda must be positive and finite, got {0}")]
    Lambda(f64),
    #[error("growth exponent p must exceed 1, got {0}")]
    Exponent(f64),
    #[error("invalid search range: {0}")]
    Range(&'static str),
}

impl LambdaParam {
    pub fn new(lambda: f64) -> Result<LambdaParam, KernelError> {
        if lambda.is_finite() && lambda > 0.0 {
            Ok(LambdaParam(lambda))
        } else {
            Err(KernelError::Lambda(lambda))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }

    pub fn g(self, s: f64) -> f64 {
        g(self.0, s)
    }
    pub fn g_prime(self, s: f64) -> f64 {
        g_prime(self.0, s)
    }
    pub fn big_g(self, s: f64) -> f64 {
        big_g(self.0, s)
    }
    pub fn big_h(self, s: f64) -> f64 {
        big_h(self.0, s)
    }
}

/// `(1+t)ln(1+t) − t`
fn kernel_g(t: f64) -> f64 {
    if t < SERIES_CUTOFF {
        // Σ_{k≥2} (−1)^k t^k / (k(k−1))
        let mut acc = 0.0;
        let mut pow = t * t;
        for k in 2..SERIES_TERMS + 2 {
            let kf = k as f64;
            let term = pow / (kf * (kf - 1.0));
            acc += if k % 2 == 0 { term } else { -term };
            pow *= t;
        }
        acc
    } else {
        (1.0 + t) * t.ln_1p() - t
    }
}

/// `∫_0^t kernel_g = ¼[(1+t)²(2 ln(1+t) − 1) + 1] − t²/2`
fn kernel_big_g(t: f64) -> f64 {
    if t < SERIES_CUTOFF {
        // Σ_{k≥2} (−1)^k t^{k+1} / ((k+1)k(k−1))
        let mut acc = 0.0;
        let mut pow = t * t * t;
        for k in 2..SERIES_TERMS + 2 {
            let kf = k as f64;
            let term = pow / ((kf + 1.0) * kf * (kf - 1.0));
            acc += if k % 2 == 0 { term } else { -term };
            pow *= t;
        }
        acc
    } else {
        let l = t.ln_1p();
        let a = 1.0 + t;
        0.25 * (a * a * (2.0 * l - 1.0) + 1.0) - 0.5 * t * t
    }
}

/// `t²/4 + t/2 − (t/2) ln(1+t) − ½ ln(1+t)`
fn kernel_big_h(t: f64) -> f64 {
    if t < SERIES_CUTOFF {
        // Σ_{k≥2} (−1)^k t^{k+1} / (2k(k+1))
        let mut acc = 0.0;
        let mut pow = t * t * t;
        for k in 2..SERIES_TERMS + 2 {
            let kf = k as f64;
            let term = pow / (2.0 * kf * (kf + 1.0));
            acc += if k % 2 == 0 { term } else { -term };
            pow *= t;
        }
        acc
    } else {
        let l = t.ln_1p();
        0.25 * t * t + 0.5 * t - 0.5 * t * l - 0.5 * l
    }
}

/// `g_λ(s)`; zero for `s ≤ 0`.
pub fn g(lambda: f64, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    kernel_g(lambda * s) / lambda
}

/// `g_λ'(s) = ln(1+λs)` for `s > 0`, zero otherwise.
pub fn g_prime(lambda: f64, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    (lambda * s).ln_1p()
}

/// `G_λ(s) = ∫_0^s g_λ`.
pub fn big_g(lambda: f64, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    kernel_big_g(lambda * s) / (lambda * lambda)
}

/// `H_λ(s) = ½ g_λ(s) s − G_λ(s)`, evaluated from its own closed form.
pub fn big_h(lambda: f64, s: f64) -> f64 {
    if s <= 0.0 {
        return 0.0;
    }
    kernel_big_h(lambda * s) / (lambda * lambda)
}

/// Sampled constant `C_ε` with `G_λ(s) ≤ εs² + C_ε(1+ln λ)s^{p+1}` on
/// `(0, s_max] × [1, λ_max]`.
///
/// The supremum of `(G_λ(s) − εs²) / ((1+ln λ)s^{p+1})` is taken over a
/// log-spaced lattice and then inflated by 10%. This is an empirical bound,
/// not a certificate.
pub fn growth_bound_constant(
    epsilon: f64,
    p: f64,
    s_max: f64,
    lambda_max: f64,
) -> Result<f64, KernelError> {
    if !(p > 1.0) {
        return Err(KernelError::Exponent(p));
    }
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(KernelError::Range("epsilon must be positive"));
    }
    if !(s_max > 0.0 && s_max.is_finite()) {
        return Err(KernelError::Range("s_max must be positive"));
    }
    if !(lambda_max >= 1.0 && lambda_max.is_finite()) {
        return Err(KernelError::Range("lambda_max must be at least 1"));
    }
    const S_POINTS: usize = 800;
    const L_POINTS: usize = 120;
    let s_lo = s_max * 1e-14;
    let s_ratio = (s_max / s_lo).ln();
    let l_ratio = lambda_max.ln();
    let mut sup: f64 = 0.0;
    for j in 0..L_POINTS {
        let lambda = if L_POINTS == 1 {
            1.0
        } else {
            (l_ratio * j as f64 / (L_POINTS - 1) as f64).exp()
        };
        let log_factor = 1.0 + lambda.ln();
        for i in 0..S_POINTS {
            let s = s_lo * (s_ratio * i as f64 / (S_POINTS - 1) as f64).exp();
            let excess = big_g(lambda, s) - epsilon * s * s;
            if excess > 0.0 {
                sup = sup.max(excess / (log_factor * s.powf(p + 1.0)));
            }
        }
    }
    Ok(1.1 * sup)
}
