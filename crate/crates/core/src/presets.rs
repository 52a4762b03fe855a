//! Named coefficient scenarios.

use std::f64::consts::FRAC_PI_2;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::grid::Grid;

/// Amplitude of the sign-changing `c` in the `paper-regime` preset.
pub const PAPER_AMPLITUDE: f64 = 30.0;
/// Amplitude of the nonnegative `c` in the `gate-fail` preset.
pub const GATE_FAIL_AMPLITUDE: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    PaperRegime,
    Coercive,
    CZero,
    GateFail,
    Custom,
}

impl Preset {
    pub const ALL: [Preset; 5] = [
        Preset::PaperRegime,
        Preset::Coercive,
        Preset::CZero,
        Preset::GateFail,
        Preset::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::PaperRegime => "paper-regime",
            Preset::Coercive => "coercive",
            Preset::CZero => "czero",
            Preset::GateFail => "gate-fail",
            Preset::Custom => "custom",
        }
    }

    /// Factor applied to `γ₁(−c, f)` when `mu = auto`.
    pub fn mu_factor(self) -> f64 {
        match self {
            Preset::GateFail => 2.0,
            _ => 0.5,
        }
    }

    /// Built-in coefficients `(c, f)`; `None` for `custom`, whose fields come from files.
    pub fn coefficients(self, grid: &Arc<Grid>) -> Option<(Vec<f64>, Vec<f64>)> {
        let f = sample_normalized(grid, |x| bump(x, &[0.5, 0.5, 0.5], 0.25));
        let c = match self {
            Preset::PaperRegime => sample_normalized(grid, |x| {
                PAPER_AMPLITUDE * (bump(x, &[0.3, 0.5, 0.5], 0.2) - bump(x, &[0.7, 0.5, 0.5], 0.2))
            }),
            Preset::Coercive => vec![-1.0; grid.len()],
            Preset::CZero => vec![0.0; grid.len()],
            Preset::GateFail => sample_normalized(grid, |x| {
                GATE_FAIL_AMPLITUDE * bump(x, &[0.5, 0.5, 0.5], 0.3)
            }),
            Preset::Custom => return None,
        };
        Some((c, f))
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("unknown preset '{0}' (expected paper-regime, coercive, czero, gate-fail or custom)")]
pub struct UnknownPreset(pub String);

impl FromStr for Preset {
    type Err = UnknownPreset;
    fn from_str(s: &str) -> Result<Preset, UnknownPreset> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| UnknownPreset(s.to_string()))
    }
}

/// `cos²` bump of the given radius around `center`, in coordinates scaled to the unit box.
fn bump(x: &[f64], center: &[f64], radius: f64) -> f64 {
    let r = x
        .iter()
        .zip(center)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    if r < radius {
        (FRAC_PI_2 * r / radius).cos().powi(2)
    } else {
        0.0
    }
}

fn sample_normalized(grid: &Grid, f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
    let ext = grid.extents().to_vec();
    grid.sample(|x| {
        let xi: Vec<f64> = x.iter().zip(&ext).map(|(a, e)| a / e).collect();
        f(&xi)
    })
}
