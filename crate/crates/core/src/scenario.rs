//! End-to-end runs from a [`RunConfig`]: build coefficients, solve, and write
//! fields, profiles and reports to the output directory.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;
use std::sync::Arc;

use crate::config::{MuSetting, RunConfig};
use crate::functional::ProblemSpec;
use crate::grid::{Grid, ScalarField};
use crate::presets::Preset;
use crate::report::SolveReport;
use crate::solvers::{solve_two, SolveOutcome};
use crate::spectral::{mu_scan, weighted_eigen, SpectralError};

/// Exit code for configuration and input errors.
pub const EXIT_CONFIG: i32 = 2;

/// Result of one run; the report also reflects failures.
#[derive(Debug)]
pub struct RunOutput {
    pub report: SolveReport,
    pub timings: Vec<(String, f64)>,
    pub outcome: Option<SolveOutcome>,
}

impl RunOutput {
    pub fn exit_code(&self) -> i32 {
        self.report.exit_code
    }
}

struct Failure {
    code: i32,
    stage: Option<String>,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Failure {
        Failure {
            code: EXIT_CONFIG,
            stage: None,
            message: message.into(),
        }
    }

    fn spectral(e: SpectralError) -> Failure {
        let code = if matches!(e, SpectralError::NotPositive { .. }) {
            3
        } else {
            4
        };
        Failure {
            code,
            stage: Some("spectral".into()),
            message: e.to_string(),
        }
    }
}

/// Grid and coefficient fields described by a configuration.
pub fn coefficients(cfg: &RunConfig) -> Result<(Arc<Grid>, Vec<f64>, Vec<f64>), String> {
    let grid = Arc::new(
        Grid::new(cfg.dimension, &cfg.extent_list(), &cfg.node_counts())
            .map_err(|e| e.to_string())?,
    );
    if let Some(cf) = cfg.preset.coefficients(&grid) {
        return Ok((grid, cf.0, cf.1));
    }
    let load = |p: &Path| -> Result<Vec<f64>, String> {
        let field = ScalarField::read(p).map_err(|e| e.to_string())?;
        if **field.grid() != *grid {
            return Err(format!(
                "{} is not sampled on the configured grid",
                p.display()
            ));
        }
        Ok(field.into_values())
    };
    let c = load(cfg.c_file.as_deref().ok_or("preset custom needs c_file")?)?;
    let f = load(cfg.f_file.as_deref().ok_or("preset custom needs f_file")?)?;
    Ok((grid, c, f))
}

fn build(cfg: &RunConfig, report: &mut SolveReport) -> Result<ProblemSpec, Failure> {
    let (grid, c, f) = coefficients(cfg).map_err(Failure::config)?;
    let mu = match cfg.mu {
        MuSetting::Value(m) => {
            report.mu_source = "config".into();
            m
        }
        MuSetting::Auto => {
            report.mu_source = "auto".into();
            let gamma =
                weighted_eigen(&grid, &c, &f, cfg.solver.eigen).map_err(Failure::spectral)?;
            let mu = cfg.preset.mu_factor() * gamma.value;
            report.notes.push(format!(
                "mu = {} x gamma1(-c, f) = {} x {}",
                cfg.preset.mu_factor(),
                cfg.preset.mu_factor(),
                gamma.value
            ));
            mu
        }
    };
    report.mu = Some(mu);
    ProblemSpec::new(grid, c, f, mu, cfg.q).map_err(|e| Failure::config(e.to_string()))
}

fn base_report(cfg: &RunConfig) -> SolveReport {
    let nodes = cfg.node_counts();
    SolveReport {
        preset: cfg.preset.to_string(),
        dimension: cfg.dimension,
        unknowns: nodes.iter().map(|n| n.saturating_sub(2)).product(),
        nodes,
        config: cfg
            .echo()
            .lines()
            .filter_map(|l| l.split_once(" = "))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect(),
        ..SolveReport::default()
    }
}

/// Solve the configured problem without touching the filesystem.
pub fn solve_config(cfg: &RunConfig) -> RunOutput {
    let mut report = base_report(cfg);
    let spec = match build(cfg, &mut report) {
        Ok(s) => s,
        Err(f) => {
            report.set_error(f.code, f.stage, f.message);
            return RunOutput {
                report,
                timings: Vec::new(),
                outcome: None,
            };
        }
    };
    if cfg.preset == Preset::CZero {
        report
            .notes
            .push("c = 0: a solution exists iff lambda1(-mu f) > 0, and it is then unique".into());
    }
    let outcome = solve_two(&spec, cfg.solver.clone());
    report.absorb(&outcome);
    let timings = outcome
        .timings
        .iter()
        .map(|(s, t)| (s.to_string(), *t))
        .collect();
    RunOutput {
        report,
        timings,
        outcome: Some(outcome),
    }
}

/// Solve and write every artifact into `cfg.out`. Reports are written on
/// failure too; only I/O errors abort.
pub fn run_scenario(cfg: &RunConfig) -> io::Result<RunOutput> {
    let out = solve_config(cfg);
    write_artifacts(&cfg.out, &out)?;
    Ok(out)
}

pub fn write_artifacts(dir: &Path, out: &RunOutput) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    if let Some(outcome) = &out.outcome {
        for (i, sol) in outcome.solutions.iter().enumerate() {
            let k = i + 1;
            fs::write(dir.join(format!("u{k}.txt")), sol.pair.u.to_text())?;
            fs::write(dir.join(format!("v{k}.txt")), sol.pair.v.to_text())?;
            fs::write(
                dir.join(format!("profile_u{k}.txt")),
                midline_profile(&sol.pair.u),
            )?;
        }
        if !outcome.path_energy.is_empty() {
            let mut s = String::from("# s I(path(s))\n");
            for (t, e) in &outcome.path_energy {
                let _ = writeln!(s, "{t:?} {e:?}");
            }
            fs::write(dir.join("path_energy.txt"), s)?;
        }
    }
    fs::write(dir.join("report.csv"), out.report.to_csv())?;
    fs::write(dir.join("report.txt"), out.report.to_text(&out.timings))?;
    Ok(())
}

/// Values along axis 0 through the middle interior node of the other axes,
/// including the zero boundary values, as `x value` lines.
pub fn midline_profile(u: &ScalarField) -> String {
    let g = u.grid();
    let shape = g.interior_shape();
    let mut multi = [0usize; 3];
    for (a, m) in multi.iter_mut().enumerate().take(g.dimension()).skip(1) {
        *m = shape[a] / 2;
    }
    let h = g.spacing()[0];
    let mut s = String::from("# x u\n");
    let _ = writeln!(s, "{:?} {:?}", 0.0, 0.0);
    for i in 0..shape[0] {
        multi[0] = i;
        let idx = g.flat_index(&multi[..g.dimension()]);
        let _ = writeln!(s, "{:?} {:?}", (i + 1) as f64 * h, u.values()[idx]);
    }
    let _ = writeln!(s, "{:?} {:?}", g.extents()[0], 0.0);
    s
}

/// Table of `λ₁(−c − μf)` for `n` equally spaced `μ` in `[lo, hi]`.
#[derive(Debug, Clone, PartialEq)]
pub struct MuScan {
    pub gamma1: Option<f64>,
    pub rows: Vec<(f64, f64)>,
}

impl MuScan {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        if let Some(g) = self.gamma1 {
            let _ = writeln!(s, "# gamma1(-c, f) = {g:?}");
        }
        s.push_str("# mu lambda1(-c - mu f)\n");
        for (m, l) in &self.rows {
            let _ = writeln!(s, "{m:?} {l:?}");
        }
        s
    }
}

pub fn run_mu_scan(cfg: &RunConfig, lo: f64, hi: f64, n: usize) -> Result<MuScan, String> {
    if !(lo.is_finite() && hi.is_finite() && lo <= hi && n >= 2) {
        return Err(format!(
            "bad mu scan {lo}:{hi}:{n} (need lo <= hi and n >= 2)"
        ));
    }
    let (grid, c, f) = coefficients(cfg)?;
    let mus: Vec<f64> = (0..n)
        .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
        .collect();
    let rows = mu_scan(&grid, &c, &f, &mus, cfg.solver.eigen).map_err(|e| e.to_string())?;
    let gamma1 = weighted_eigen(&grid, &c, &f, cfg.solver.eigen)
        .ok()
        .map(|r| r.value);
    Ok(MuScan { gamma1, rows })
}
