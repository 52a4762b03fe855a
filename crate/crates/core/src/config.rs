//! `key = value` run configuration with strict validation.

use std::fmt::Write as _;
use std::path::PathBuf;

use crate::presets::Preset;
use crate::solvers::SolverOptions;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("missing required keys: {}", .0.join(", "))]
    Missing(Vec<String>),
    #[error("{0}")]
    Invalid(String),
}

/// `μ` given explicitly or derived from the preset's factor times `γ₁(−c, f)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuSetting {
    Auto,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub preset: Preset,
    pub mu: MuSetting,
    pub dimension: usize,
    pub nodes: Vec<usize>,
    pub extents: Vec<f64>,
    pub q: f64,
    pub c_file: Option<PathBuf>,
    pub f_file: Option<PathBuf>,
    pub out: PathBuf,
    pub solver: SolverOptions,
}

const REQUIRED: [&str; 1] = ["mu"];

/// Every accepted key, in echo order.
pub const KEYS: [&str; 30] = [
    "preset",
    "mu",
    "dimension",
    "nodes",
    "extents",
    "q",
    "c_file",
    "f_file",
    "out",
    "seed",
    "theta",
    "p",
    "lambda",
    "lambda_start",
    "lambda_cap",
    "probes",
    "sphere_iters",
    "path_nodes",
    "sweep_len",
    "tol_gradient",
    "tol_newton",
    "tol_descent",
    "tol_p",
    "newton_gate",
    "max_iter_ball",
    "max_iter_mp",
    "max_iter_newton",
    "eig_tol",
    "eig_max_iter",
    "armijo",
];

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            preset: Preset::PaperRegime,
            mu: MuSetting::Auto,
            dimension: 2,
            nodes: vec![65],
            extents: vec![1.0],
            q: 4.0,
            c_file: None,
            f_file: None,
            out: PathBuf::from("out"),
            solver: SolverOptions::default(),
        }
    }
}

fn num(v: &str) -> Result<f64, String> {
    let x: f64 = v.parse().map_err(|_| format!("'{v}' is not a number"))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("'{v}' is not finite"))
    }
}

fn count(v: &str) -> Result<usize, String> {
    v.parse()
        .map_err(|_| format!("'{v}' is not a nonnegative integer"))
}

fn positive(v: &str) -> Result<f64, String> {
    let x = num(v)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("'{v}' must be positive"))
    }
}

fn list<T>(v: &str, f: impl Fn(&str) -> Result<T, String>) -> Result<Vec<T>, String> {
    v.split([',', ' '])
        .filter(|s| !s.is_empty())
        .map(f)
        .collect()
}

impl RunConfig {
    /// Set one key from its textual value.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), String> {
        let s = &mut self.solver;
        match key {
            "preset" => {
                self.preset = value
                    .parse()
                    .map_err(|e: crate::presets::UnknownPreset| e.to_string())?
            }
            "mu" => {
                self.mu = if value == "auto" {
                    MuSetting::Auto
                } else {
                    MuSetting::Value(positive(value)?)
                }
            }
            "dimension" => self.dimension = count(value)?,
            "nodes" => self.nodes = list(value, count)?,
            "extents" => self.extents = list(value, positive)?,
            "q" => self.q = positive(value)?,
            "c_file" => self.c_file = Some(PathBuf::from(value)),
            "f_file" => self.f_file = Some(PathBuf::from(value)),
            "out" => self.out = PathBuf::from(value),
            "seed" => {
                s.seed = value
                    .parse()
                    .map_err(|_| format!("'{value}' is not a seed"))?
            }
            "theta" => s.theta = num(value)?,
            "p" => s.p = num(value)?,
            "lambda" => {
                s.lambda_override = if value == "auto" {
                    None
                } else {
                    Some(positive(value)?)
                }
            }
            "lambda_start" => s.lambda_start = positive(value)?,
            "lambda_cap" => s.lambda_cap = positive(value)?,
            "probes" => s.probes = count(value)?,
            "sphere_iters" => s.sphere_descent_iters = count(value)?,
            "path_nodes" => s.path_nodes = count(value)?,
            "sweep_len" => s.sweep_len = count(value)?,
            "tol_gradient" => s.tol_gradient = positive(value)?,
            "tol_newton" => s.tol_newton = positive(value)?,
            "tol_descent" => s.tol_descent = positive(value)?,
            "tol_p" => s.tol_p = positive(value)?,
            "newton_gate" => s.newton_gate = positive(value)?,
            "max_iter_ball" => s.max_iter_ball = count(value)?,
            "max_iter_mp" => s.max_iter_mp = count(value)?,
            "max_iter_newton" => s.max_iter_newton = count(value)?,
            "eig_tol" => s.eigen.tol = positive(value)?,
            "eig_max_iter" => s.eigen.max_iter = count(value)?,
            "armijo" => s.armijo = positive(value)?,
            _ => return Err(format!("unknown key '{key}'")),
        }
        Ok(())
    }

    /// Cross-field checks after all keys are set.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if !(self.dimension == 2 || self.dimension == 3) {
            return bad(format!("dimension must be 2 or 3, got {}", self.dimension));
        }
        for (name, len) in [("nodes", self.nodes.len()), ("extents", self.extents.len())] {
            if len != 1 && len != self.dimension {
                return bad(format!(
                    "{name} needs 1 or {} entries, got {len}",
                    self.dimension
                ));
            }
        }
        if self.nodes.iter().any(|&n| n < 3) {
            return bad("every node count must be at least 3".into());
        }
        if self.preset == Preset::Custom && (self.c_file.is_none() || self.f_file.is_none()) {
            return bad("preset custom needs c_file and f_file".into());
        }
        if self.preset != Preset::Custom && (self.c_file.is_some() || self.f_file.is_some()) {
            return bad("c_file and f_file are only used with preset custom".into());
        }
        if self.solver.path_nodes < 3 {
            return bad("path_nodes must be at least 3".into());
        }
        if !(self.solver.armijo < 1.0) {
            return bad("armijo must be below 1".into());
        }
        Ok(())
    }

    pub fn node_counts(&self) -> Vec<usize> {
        broadcast(&self.nodes, self.dimension)
    }

    pub fn extent_list(&self) -> Vec<f64> {
        broadcast(&self.extents, self.dimension)
    }

    /// Canonical `key = value` text with every key; parses back to `self`.
    pub fn echo(&self) -> String {
        let s = &self.solver;
        let join = |v: Vec<String>| v.join(",");
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("preset", self.preset.to_string());
        put(
            "mu",
            match self.mu {
                MuSetting::Auto => "auto".into(),
                MuSetting::Value(x) => format!("{x:?}"),
            },
        );
        put("dimension", self.dimension.to_string());
        put(
            "nodes",
            join(self.nodes.iter().map(|n| n.to_string()).collect()),
        );
        put(
            "extents",
            join(self.extents.iter().map(|e| format!("{e:?}")).collect()),
        );
        put("q", format!("{:?}", self.q));
        if let Some(p) = &self.c_file {
            put("c_file", p.display().to_string());
        }
        if let Some(p) = &self.f_file {
            put("f_file", p.display().to_string());
        }
        put("out", self.out.display().to_string());
        put("seed", s.seed.to_string());
        put("theta", format!("{:?}", s.theta));
        put("p", format!("{:?}", s.p));
        put(
            "lambda",
            s.lambda_override
                .map_or("auto".into(), |l| format!("{l:?}")),
        );
        put("lambda_start", format!("{:?}", s.lambda_start));
        put("lambda_cap", format!("{:?}", s.lambda_cap));
        put("probes", s.probes.to_string());
        put("sphere_iters", s.sphere_descent_iters.to_string());
        put("path_nodes", s.path_nodes.to_string());
        put("sweep_len", s.sweep_len.to_string());
        put("tol_gradient", format!("{:?}", s.tol_gradient));
        put("tol_newton", format!("{:?}", s.tol_newton));
        put("tol_descent", format!("{:?}", s.tol_descent));
        put("tol_p", format!("{:?}", s.tol_p));
        put("newton_gate", format!("{:?}", s.newton_gate));
        put("max_iter_ball", s.max_iter_ball.to_string());
        put("max_iter_mp", s.max_iter_mp.to_string());
        put("max_iter_newton", s.max_iter_newton.to_string());
        put("eig_tol", format!("{:?}", s.eigen.tol));
        put("eig_max_iter", s.eigen.max_iter.to_string());
        put("armijo", format!("{:?}", s.armijo));
        out
    }
}

fn broadcast<T: Copy>(v: &[T], n: usize) -> Vec<T> {
    if v.len() == 1 {
        vec![v[0]; n]
    } else {
        v.to_vec()
    }
}

/// Parse `key = value` lines; `#` starts a comment. Unknown keys, duplicate
/// keys and malformed values are errors carrying their line number.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut seen: Vec<String> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let err = |message: String| ConfigError::Line { line, message };
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| err(format!("expected 'key = value', got '{content}'")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(err(format!("expected 'key = value', got '{content}'")));
        }
        if seen.iter().any(|k| k == key) {
            return Err(err(format!("duplicate key '{key}'")));
        }
        cfg.apply(key, value).map_err(err)?;
        seen.push(key.to_string());
    }
    let missing: Vec<String> = REQUIRED
        .iter()
        .filter(|k| !seen.iter().any(|s| s == *k))
        .map(|k| k.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(ConfigError::Missing(missing));
    }
    cfg.validate()?;
    Ok(cfg)
}
