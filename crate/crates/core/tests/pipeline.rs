use std::sync::Arc;

use mpass_core::config::{parse_config, RunConfig};
use mpass_core::functional::{residual_p, ProblemSpec};
use mpass_core::grid::ScalarField;
use mpass_core::report::SolveReport;
use mpass_core::scenario::{coefficients, run_scenario, solve_config};
use mpass_core::spectral::{principal_eigen, EigenOptions};

fn cfg(text: &str) -> RunConfig {
    parse_config(text).unwrap()
}

#[test]
fn paper_regime_writes_reproducible_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let config = cfg(&format!(
        "mu = auto\nnodes = 33\nout = {}\n",
        out_dir.display()
    ));
    let out = run_scenario(&config).unwrap();
    let r = &out.report;
    assert_eq!(r.exit_code, 0, "{:?}", r.error_message);
    assert_eq!(r.mode.as_deref(), Some("two-solutions"));
    for name in [
        "u1.txt",
        "u2.txt",
        "v1.txt",
        "v2.txt",
        "profile_u1.txt",
        "profile_u2.txt",
        "path_energy.txt",
        "report.txt",
        "report.csv",
    ] {
        assert!(out_dir.join(name).exists(), "{name}");
    }

    let csv = std::fs::read_to_string(out_dir.join("report.csv")).unwrap();
    assert_eq!(&SolveReport::from_csv(&csv).unwrap(), r);

    // residuals and energies recomputed from the written fields match the report exactly
    let (grid, c, f) = coefficients(&config).unwrap();
    let spec = ProblemSpec::new(grid, c, f, r.mu.unwrap(), config.q).unwrap();
    let lambda = r.lambda.unwrap();
    for (k, sol) in r.solutions.iter().enumerate() {
        let u = ScalarField::read(&out_dir.join(format!("u{}.txt", k + 1))).unwrap();
        let v = ScalarField::read(&out_dir.join(format!("v{}.txt", k + 1))).unwrap();
        assert_eq!(residual_p(&spec, &u).unwrap(), sol.residual_p);
        assert_eq!(spec.energy_of(lambda, v.values()).total, sol.energy);
        assert!(sol.positivity_margin > 0.0);
    }

    let trace: Vec<(f64, f64)> = std::fs::read_to_string(out_dir.join("path_energy.txt"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let mut it = l.split_whitespace().map(|t| t.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect();
    assert_eq!(trace.first().unwrap(), &(0.0, 0.0));
    assert!(trace.last().unwrap().1 < 0.0);
    let top = trace.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    assert!(top >= r.solutions[1].level.unwrap());
    assert!(trace.windows(2).all(|w| w[1].0 > w[0].0));
}

#[test]
fn echoed_config_reproduces_the_report() {
    let first = solve_config(&cfg("mu = auto\nnodes = 33\nseed = 11\n"));
    let echo: String = first
        .report
        .config
        .iter()
        .map(|(k, v)| format!("{k} = {v}\n"))
        .collect();
    let second = solve_config(&cfg(&echo));
    assert_eq!(first.report.to_csv(), second.report.to_csv());
}

#[test]
fn czero_runs_in_single_solution_mode() {
    let out = solve_config(&cfg("preset = czero\nmu = 3\nnodes = 25\n"));
    let r = &out.report;
    assert_eq!(r.exit_code, 0, "{:?}", r.error_message);
    assert_eq!(r.solutions.len(), 1);
    assert!(r.notes.iter().any(|n| n.contains("lambda1(-mu f) > 0")));
    // with c = 0 the gate eigenvalue is λ₁(−μf)
    let (grid, _, f) = coefficients(&cfg("preset = czero\nmu = 3\nnodes = 25\n")).unwrap();
    let pot: Vec<f64> = f.iter().map(|x| -3.0 * x).collect();
    let direct = principal_eigen(&Arc::clone(&grid), &pot, EigenOptions::default())
        .unwrap()
        .value;
    assert_eq!(r.lambda1_gate, Some(direct));
}

#[test]
fn three_dimensional_coercive_run() {
    let out = solve_config(&cfg(
        "preset = coercive\nmu = auto\ndimension = 3\nnodes = 9\n",
    ));
    let r = &out.report;
    assert_eq!(r.exit_code, 0, "{:?}", r.error_message);
    assert_eq!(r.unknowns, 343);
    assert_eq!(r.solutions.len(), 1);
    assert!(r.solutions[0].u_min >= 0.0);
    assert!(!r.notes.iter().any(|n| n.contains("two-dimensional")));
}

#[test]
fn stage_failures_map_to_exit_codes() {
    // invalid exponents are option errors
    let r = solve_config(&cfg("mu = auto\nnodes = 17\ntheta = 1.5\n")).report;
    assert_eq!(
        (r.exit_code, r.error_stage.as_deref()),
        (2, Some("select_lambda"))
    );
    // a forced lambda with a nonpositive sphere minimum is a geometry failure
    let r = solve_config(&cfg("mu = auto\nnodes = 17\nlambda = 1\n")).report;
    assert_eq!(
        (r.exit_code, r.error_stage.as_deref()),
        (5, Some("select_lambda"))
    );
    // an iteration budget that is too small is a non-convergence
    let r = solve_config(&cfg("mu = auto\nnodes = 17\nmax_iter_mp = 3\n")).report;
    assert_eq!(
        (r.exit_code, r.error_stage.as_deref()),
        (4, Some("mountain_pass"))
    );
    // mu beyond the threshold fails the gate
    let r = solve_config(&cfg("mu = 500\nnodes = 17\n")).report;
    assert_eq!(
        (r.exit_code, r.error_stage.as_deref()),
        (3, Some("spectral"))
    );
    assert!(r.error_message.unwrap().contains("lambda1(-c - mu f) > 0"));
}
