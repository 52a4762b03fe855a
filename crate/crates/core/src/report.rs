//! Run reports: a deterministic `key,value` CSV and a readable text form.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::str::FromStr;

use crate::solvers::{SolutionBlock, SolveMode, SolveOutcome};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("report key '{0}' is missing")]
    Missing(String),
    #[error("report key '{key}' has unparsable value '{value}'")]
    Value { key: String, value: String },
}

/// One refined critical point and its image in (P).
#[derive(Debug, Clone, PartialEq)]
pub struct SolutionReport {
    pub kind: String,
    pub energy: f64,
    pub gradient_norm: f64,
    pub level: Option<f64>,
    pub descent_iterations: usize,
    pub newton_iterations: usize,
    pub polish_iterations: usize,
    pub residual_q: f64,
    pub residual_p: f64,
    /// Residual of (P) at the plain transform, before polishing.
    pub transform_residual_p: f64,
    pub roundtrip_error: f64,
    pub positivity_margin: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub u_norm_h10: f64,
    pub v_min: f64,
    pub v_max: f64,
    pub v_norm_h10: f64,
}

impl SolutionReport {
    pub fn from_block(b: &SolutionBlock) -> SolutionReport {
        SolutionReport {
            kind: b.point.kind.to_string(),
            energy: b.point.energy,
            gradient_norm: b.point.gradient_norm,
            level: b.point.level,
            descent_iterations: b.point.descent_iterations,
            newton_iterations: b.point.newton_iterations,
            polish_iterations: b.polish_iterations,
            residual_q: b.pair.residual_q,
            residual_p: b.pair.residual_p,
            transform_residual_p: b.transform_residual_p,
            roundtrip_error: b.pair.roundtrip_error,
            positivity_margin: b.pair.positivity_margin,
            u_min: b.pair.u.min(),
            u_max: b.pair.u.max(),
            u_norm_h10: b.pair.u.norm_h10(),
            v_min: b.pair.v.min(),
            v_max: b.pair.v.max(),
            v_norm_h10: b.pair.v.norm_h10(),
        }
    }
}

/// Deterministic summary of a run. Wall-clock timings are kept apart so that
/// identical runs give byte-identical CSV.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveReport {
    /// `success` or `error`.
    pub status: String,
    pub exit_code: i32,
    pub error_stage: Option<String>,
    pub error_message: Option<String>,
    pub preset: String,
    pub mode: Option<String>,
    pub mu: Option<f64>,
    /// `config` or `auto`.
    pub mu_source: String,
    pub dimension: usize,
    pub nodes: Vec<usize>,
    pub unknowns: usize,
    pub lambda1_c: Option<f64>,
    pub lambda1_gate: Option<f64>,
    pub gamma1: Option<f64>,
    pub k1: Option<f64>,
    pub alpha_c: Option<f64>,
    pub lambda: Option<f64>,
    pub theta: Option<f64>,
    pub p: Option<f64>,
    pub radius: Option<f64>,
    pub sphere_min: Option<f64>,
    pub epsilon: Option<f64>,
    pub c_epsilon: Option<f64>,
    pub doublings: Option<usize>,
    pub solutions: Vec<SolutionReport>,
    pub distinct_v: Option<f64>,
    pub distinct_u: Option<f64>,
    pub notes: Vec<String>,
    /// Canonical configuration echo as `(key, value)`.
    pub config: Vec<(String, String)>,
}

fn f(x: f64) -> String {
    format!("{x:?}")
}

fn opt<T>(x: Option<T>, show: impl Fn(T) -> String) -> String {
    x.map(show).unwrap_or_default()
}

const SOLUTION_KEYS: [&str; 18] = [
    "kind",
    "energy",
    "gradient_norm",
    "level",
    "descent_iterations",
    "newton_iterations",
    "polish_iterations",
    "residual_q",
    "residual_p",
    "transform_residual_p",
    "roundtrip_error",
    "positivity_margin",
    "u_min",
    "u_max",
    "u_norm_h10",
    "v_min",
    "v_max",
    "v_norm_h10",
];

impl SolveReport {
    /// Fill the solver-derived fields from a pipeline outcome.
    pub fn absorb(&mut self, out: &SolveOutcome) {
        self.mode = out.mode.map(|m| {
            match m {
                SolveMode::TwoSolutions => "two-solutions",
                SolveMode::SingleSolution => "single-solution",
            }
            .to_string()
        });
        if let Some(s) = &out.spectral {
            self.lambda1_c = Some(s.lambda1_c);
            self.lambda1_gate = s.lambda1_gate;
            self.gamma1 = s.gamma1;
            self.k1 = s.k1;
            self.alpha_c = s.alpha_c;
        }
        self.lambda = out.lambda;
        if let Some(g) = &out.geometry {
            self.theta = Some(g.theta);
            self.p = Some(g.p);
            self.radius = Some(g.radius);
            self.sphere_min = Some(g.sphere_min);
            self.epsilon = Some(g.epsilon);
            self.c_epsilon = Some(g.c_epsilon);
            self.doublings = Some(g.doublings);
        }
        self.solutions = out
            .solutions
            .iter()
            .map(SolutionReport::from_block)
            .collect();
        self.distinct_v = out.distinct_v;
        self.distinct_u = out.distinct_u;
        self.notes.extend(out.notes.iter().cloned());
        match &out.error {
            None => self.set_success(),
            Some(e) => self.set_error(e.exit_code(), Some(e.stage().to_string()), e.to_string()),
        }
    }

    pub fn set_success(&mut self) {
        self.status = "success".into();
        self.exit_code = 0;
        self.error_stage = None;
        self.error_message = None;
    }

    pub fn set_error(&mut self, code: i32, stage: Option<String>, message: String) {
        self.status = "error".into();
        self.exit_code = code;
        self.error_stage = stage;
        self.error_message = Some(message);
    }

    fn rows(&self) -> Vec<(String, String)> {
        let mut r: Vec<(String, String)> = Vec::new();
        let mut put = |k: &str, v: String| r.push((k.to_string(), v));
        put("status", self.status.clone());
        put("exit_code", self.exit_code.to_string());
        put("error_stage", self.error_stage.clone().unwrap_or_default());
        put(
            "error_message",
            self.error_message.clone().unwrap_or_default(),
        );
        put("preset", self.preset.clone());
        put("mode", self.mode.clone().unwrap_or_default());
        put("mu", opt(self.mu, f));
        put("mu_source", self.mu_source.clone());
        put("dimension", self.dimension.to_string());
        put(
            "nodes",
            self.nodes
                .iter()
                .map(|n| n.to_string())
                .collect::<Vec<_>>()
                .join("x"),
        );
        put("unknowns", self.unknowns.to_string());
        put("lambda1_c", opt(self.lambda1_c, f));
        put("lambda1_gate", opt(self.lambda1_gate, f));
        put("gamma1", opt(self.gamma1, f));
        put("k1", opt(self.k1, f));
        put("alpha_c", opt(self.alpha_c, f));
        put("lambda", opt(self.lambda, f));
        put("theta", opt(self.theta, f));
        put("p", opt(self.p, f));
        put("radius", opt(self.radius, f));
        put("sphere_min", opt(self.sphere_min, f));
        put("epsilon", opt(self.epsilon, f));
        put("c_epsilon", opt(self.c_epsilon, f));
        put("doublings", opt(self.doublings, |d| d.to_string()));
        put("distinct_v", opt(self.distinct_v, f));
        put("distinct_u", opt(self.distinct_u, f));
        put("solutions", self.solutions.len().to_string());
        for (i, s) in self.solutions.iter().enumerate() {
            let vals = [
                s.kind.clone(),
                f(s.energy),
                f(s.gradient_norm),
                opt(s.level, f),
                s.descent_iterations.to_string(),
                s.newton_iterations.to_string(),
                s.polish_iterations.to_string(),
                f(s.residual_q),
                f(s.residual_p),
                f(s.transform_residual_p),
                f(s.roundtrip_error),
                f(s.positivity_margin),
                f(s.u_min),
                f(s.u_max),
                f(s.u_norm_h10),
                f(s.v_min),
                f(s.v_max),
                f(s.v_norm_h10),
            ];
            for (k, v) in SOLUTION_KEYS.iter().zip(vals) {
                put(&format!("solution{}.{k}", i + 1), v);
            }
        }
        put("notes", self.notes.len().to_string());
        for (i, n) in self.notes.iter().enumerate() {
            put(&format!("note{}", i + 1), n.clone());
        }
        for (k, v) in &self.config {
            put(&format!("config.{k}"), v.clone());
        }
        r
    }

    /// `key,value` CSV with a header row.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["key", "value"]).expect("in-memory write");
        for (k, v) in self.rows() {
            w.write_record([k, v]).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
    }

    pub fn from_csv(text: &str) -> Result<SolveReport, ReportError> {
        let mut rd = csv::Reader::from_reader(text.as_bytes());
        let mut map: HashMap<String, String> = HashMap::new();
        let mut config = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let (k, v) = (rec.get(0).unwrap_or(""), rec.get(1).unwrap_or(""));
            if let Some(ck) = k.strip_prefix("config.") {
                config.push((ck.to_string(), v.to_string()));
            } else {
                map.insert(k.to_string(), v.to_string());
            }
        }
        let m = Fields(map);
        let mut solutions = Vec::new();
        for i in 1..=m.req::<usize>("solutions")? {
            let k = |s: &str| format!("solution{i}.{s}");
            solutions.push(SolutionReport {
                kind: m.text(&k("kind"))?,
                energy: m.req(&k("energy"))?,
                gradient_norm: m.req(&k("gradient_norm"))?,
                level: m.opt(&k("level"))?,
                descent_iterations: m.req(&k("descent_iterations"))?,
                newton_iterations: m.req(&k("newton_iterations"))?,
                polish_iterations: m.req(&k("polish_iterations"))?,
                residual_q: m.req(&k("residual_q"))?,
                residual_p: m.req(&k("residual_p"))?,
                transform_residual_p: m.req(&k("transform_residual_p"))?,
                roundtrip_error: m.req(&k("roundtrip_error"))?,
                positivity_margin: m.req(&k("positivity_margin"))?,
                u_min: m.req(&k("u_min"))?,
                u_max: m.req(&k("u_max"))?,
                u_norm_h10: m.req(&k("u_norm_h10"))?,
                v_min: m.req(&k("v_min"))?,
                v_max: m.req(&k("v_max"))?,
                v_norm_h10: m.req(&k("v_norm_h10"))?,
            });
        }
        let notes = (1..=m.req::<usize>("notes")?)
            .map(|i| m.text(&format!("note{i}")))
            .collect::<Result<_, _>>()?;
        let nodes_text = m.text("nodes")?;
        let nodes = nodes_text
            .split('x')
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse().map_err(|_| ReportError::Value {
                    key: "nodes".into(),
                    value: nodes_text.clone(),
                })
            })
            .collect::<Result<_, _>>()?;
        Ok(SolveReport {
            status: m.text("status")?,
            exit_code: m.req("exit_code")?,
            error_stage: m.opt_text("error_stage")?,
            error_message: m.opt_text("error_message")?,
            preset: m.text("preset")?,
            mode: m.opt_text("mode")?,
            mu: m.opt("mu")?,
            mu_source: m.text("mu_source")?,
            dimension: m.req("dimension")?,
            nodes,
            unknowns: m.req("unknowns")?,
            lambda1_c: m.opt("lambda1_c")?,
            lambda1_gate: m.opt("lambda1_gate")?,
            gamma1: m.opt("gamma1")?,
            k1: m.opt("k1")?,
            alpha_c: m.opt("alpha_c")?,
            lambda: m.opt("lambda")?,
            theta: m.opt("theta")?,
            p: m.opt("p")?,
            radius: m.opt("radius")?,
            sphere_min: m.opt("sphere_min")?,
            epsilon: m.opt("epsilon")?,
            c_epsilon: m.opt("c_epsilon")?,
            doublings: m.opt("doublings")?,
            solutions,
            distinct_v: m.opt("distinct_v")?,
            distinct_u: m.opt("distinct_u")?,
            notes,
            config,
        })
    }

    /// Human-readable report; `timings` are `(stage, seconds)`.
    pub fn to_text(&self, timings: &[(String, f64)]) -> String {
        let mut s = String::new();
        let g = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.6e}"));
        let _ = writeln!(
            s,
            "status        {} (exit code {})",
            self.status, self.exit_code
        );
        if let Some(msg) = &self.error_message {
            let _ = writeln!(s, "error         {msg}");
        }
        let _ = writeln!(s, "preset        {}", self.preset);
        let _ = writeln!(s, "mode          {}", self.mode.as_deref().unwrap_or("-"));
        let nodes: Vec<String> = self.nodes.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(
            s,
            "grid          N = {}, nodes {}, {} unknowns",
            self.dimension,
            nodes.join("x"),
            self.unknowns
        );
        let _ = writeln!(s, "mu            {} ({})", g(self.mu), self.mu_source);
        let _ = writeln!(s, "\nspectral");
        let _ = writeln!(s, "  lambda1(-c)         {}", g(self.lambda1_c));
        let _ = writeln!(s, "  lambda1(-c - mu f)  {}", g(self.lambda1_gate));
        let _ = writeln!(s, "  gamma1(-c, f)       {}", g(self.gamma1));
        let _ = writeln!(s, "  K1                  {}", g(self.k1));
        let _ = writeln!(s, "  alpha_c             {}", g(self.alpha_c));
        let _ = writeln!(s, "\ngeometry");
        let _ = writeln!(s, "  lambda      {}", g(self.lambda));
        let _ = writeln!(s, "  theta, p    {} {}", g(self.theta), g(self.p));
        let _ = writeln!(s, "  R           {}", g(self.radius));
        let _ = writeln!(s, "  sphere min  {}", g(self.sphere_min));
        let _ = writeln!(s, "  eps, C_eps  {} {}", g(self.epsilon), g(self.c_epsilon));
        let _ = writeln!(
            s,
            "  doublings   {}",
            self.doublings.map_or("-".into(), |d| d.to_string())
        );
        for (i, sol) in self.solutions.iter().enumerate() {
            let _ = writeln!(s, "\nsolution {} ({})", i + 1, sol.kind);
            let _ = writeln!(s, "  I(v)                {:.6e}", sol.energy);
            if let Some(l) = sol.level {
                let _ = writeln!(s, "  level d             {l:.6e}");
            }
            let _ = writeln!(s, "  |I'(v)|             {:.3e}", sol.gradient_norm);
            let _ = writeln!(s, "  residual Q          {:.3e}", sol.residual_q);
            let _ = writeln!(s, "  residual P          {:.3e}", sol.residual_p);
            let _ = writeln!(s, "  residual P (raw)    {:.3e}", sol.transform_residual_p);
            let _ = writeln!(s, "  roundtrip error     {:.3e}", sol.roundtrip_error);
            let _ = writeln!(s, "  positivity margin   {:.3e}", sol.positivity_margin);
            let _ = writeln!(
                s,
                "  u range, |u|        [{:.4e}, {:.4e}] {:.4e}",
                sol.u_min, sol.u_max, sol.u_norm_h10
            );
            let _ = writeln!(
                s,
                "  v range, |v|        [{:.4e}, {:.4e}] {:.4e}",
                sol.v_min, sol.v_max, sol.v_norm_h10
            );
            let _ = writeln!(
                s,
                "  iterations          descent {}, newton {}, polish {}",
                sol.descent_iterations, sol.newton_iterations, sol.polish_iterations
            );
        }
        if self.distinct_v.is_some() {
            let _ = writeln!(
                s,
                "\ndistinctness  |v1 - w1| = {}, |u1 - u2| = {}",
                g(self.distinct_v),
                g(self.distinct_u)
            );
        }
        if !self.notes.is_empty() {
            let _ = writeln!(s, "\nnotes");
            for n in &self.notes {
                let _ = writeln!(s, "  - {n}");
            }
        }
        if !timings.is_empty() {
            let _ = writeln!(s, "\ntimings (s)");
            for (stage, t) in timings {
                let _ = writeln!(s, "  {stage:<18}{t:.3}");
            }
        }
        let _ = writeln!(s, "\nconfig");
        for (k, v) in &self.config {
            let _ = writeln!(s, "  {k} = {v}");
        }
        s
    }
}

struct Fields(HashMap<String, String>);

impl Fields {
    fn text(&self, key: &str) -> Result<String, ReportError> {
        self.0
            .get(key)
            .cloned()
            .ok_or_else(|| ReportError::Missing(key.into()))
    }

    fn opt_text(&self, key: &str) -> Result<Option<String>, ReportError> {
        let t = self.text(key)?;
        Ok((!t.is_empty()).then_some(t))
    }

    fn req<T: FromStr>(&self, key: &str) -> Result<T, ReportError> {
        let t = self.text(key)?;
        t.parse().map_err(|_| ReportError::Value {
            key: key.into(),
            value: t,
        })
    }

    fn opt<T: FromStr>(&self, key: &str) -> Result<Option<T>, ReportError> {
        match self.opt_text(key)? {
            None => Ok(None),
            Some(_) => self.req(key).map(Some),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SolveReport {
        let sol = SolutionReport {
            kind: "mountain-pass".into(),
            energy: 0.1 + 0.2,
            gradient_norm: 1e-13,
            level: Some(1.0 / 3.0),
            descent_iterations: 12,
            newton_iterations: 3,
            polish_iterations: 1,
            residual_q: 2.5e-11,
            residual_p: 7e-14,
            transform_residual_p: 3e-4,
            roundtrip_error: 0.0,
            positivity_margin: 1.2e-4,
            u_min: -0.0,
            u_max: 12.75,
            u_norm_h10: 1e300,
            v_min: f64::MIN_POSITIVE,
            v_max: 2.0,
            v_norm_h10: 0.5,
        };
        let mut r = SolveReport {
            preset: "paper-regime".into(),
            mu: Some(35.2),
            mu_source: "auto".into(),
            dimension: 2,
            nodes: vec![65, 33],
            unknowns: 63 * 31,
            lambda1_c: Some(18.25),
            gamma1: Some(70.4),
            lambda: Some(32.0),
            doublings: Some(5),
            solutions: vec![sol.clone(), SolutionReport { level: None, ..sol }],
            distinct_v: Some(0.7),
            notes: vec!["quoted, \"text\"\nwith a newline".into(), "plain".into()],
            config: vec![("mu".into(), "auto".into()), ("out".into(), "a, b".into())],
            ..SolveReport::default()
        };
        r.set_error(
            5,
            Some("mountain_pass".into()),
            "geometry failure: x".into(),
        );
        r
    }

    #[test]
    fn csv_roundtrips_field_for_field() {
        let r = sample();
        let text = r.to_csv();
        assert_eq!(SolveReport::from_csv(&text).unwrap(), r);
        let mut ok = r.clone();
        ok.set_success();
        assert_eq!(SolveReport::from_csv(&ok.to_csv()).unwrap(), ok);
    }

    #[test]
    fn csv_is_deterministic() {
        assert_eq!(sample().to_csv(), sample().to_csv());
    }

    #[test]
    fn missing_key_is_reported() {
        let text = sample().to_csv().replace("\nlambda,", "\nlambda_typo,");
        assert!(
            matches!(SolveReport::from_csv(&text), Err(ReportError::Missing(k)) if k == "lambda")
        );
    }

    #[test]
    fn text_contains_timings_and_config() {
        let t = sample().to_text(&[("spectral".into(), 0.25)]);
        assert!(t.contains("spectral          0.250"));
        assert!(t.contains("out = a, b"));
        assert!(t.contains("status        error (exit code 5)"));
    }
}
