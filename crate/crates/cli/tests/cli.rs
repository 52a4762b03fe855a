use std::path::Path;
use std::process::{Command, Output};

fn mpass(args: &[&str], config: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mpass"))
        .arg("solve")
        .arg("--config")
        .arg(config)
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("run.cfg");
    std::fs::write(
        &path,
        format!("{body}\nout = {}\n", dir.join("out").display()),
    )
    .unwrap();
    path
}

#[test]
fn gate_fail_exits_3_and_names_the_condition() {
    let dir = tempfile::tempdir().unwrap();
    let out = mpass(
        &[],
        &write_config(dir.path(), "preset = gate-fail\nmu = auto\nnodes = 25"),
    );
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("lambda1(-c - mu f) > 0"), "{stderr}");
    let csv = std::fs::read_to_string(dir.path().join("out/report.csv")).unwrap();
    assert!(csv.contains("status,error"));
    assert!(csv.contains("error_stage,spectral"));
}

#[test]
fn config_errors_exit_2_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "mu = 1\ncolour = blue\n").unwrap();
    let out = mpass(&[], &cfg);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2: unknown key 'colour'"));

    std::fs::write(&cfg, "# nothing\n").unwrap();
    let out = mpass(&[], &cfg);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing required keys: mu"));

    let out = mpass(&[], &dir.path().join("absent.cfg"));
    assert_eq!(out.status.code(), Some(2));

    let good = write_config(dir.path(), "mu = 1");
    let out = mpass(&["--preset", "nope"], &good);
    assert_eq!(out.status.code(), Some(2));
    let out = mpass(&["--mu-scan", "1:2"], &good);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn coercive_preset_gives_one_solution() {
    let dir = tempfile::tempdir().unwrap();
    let out = mpass(
        &[],
        &write_config(dir.path(), "preset = coercive\nmu = auto\nnodes = 33"),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let o = dir.path().join("out");
    assert!(o.join("u1.txt").exists() && o.join("profile_u1.txt").exists());
    assert!(!o.join("u2.txt").exists());
    let text = std::fs::read_to_string(o.join("report.txt")).unwrap();
    assert!(text.contains("single-solution"));
    assert!(text.contains("uniqueness"));
    assert!(text.contains("timings (s)"));
}

#[test]
fn overrides_reach_the_config_echo() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "preset = coercive\nmu = auto\nnodes = 17");
    let other = dir.path().join("elsewhere");
    let out = mpass(
        &[
            "--seed",
            "5",
            "--theta",
            "0.25",
            "--p",
            "1.25",
            "--lambda",
            "2",
            "--out",
            other.to_str().unwrap(),
        ],
        &cfg,
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(other.join("report.csv")).unwrap();
    for line in [
        "config.seed,5",
        "config.theta,0.25",
        "config.p,1.25",
        "config.lambda,2.0",
        "lambda,2.0",
    ] {
        assert!(csv.lines().any(|l| l == line), "{line}");
    }
}

#[test]
fn mu_scan_tabulates_the_gate_eigenvalue() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mu = auto\nnodes = 25");
    let out = mpass(&["--mu-scan", "0:150:11"], &cfg);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("out/mu_scan.txt")).unwrap();
    let rows: Vec<(f64, f64)> = text
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| {
            let v: Vec<f64> = l.split_whitespace().map(|t| t.parse().unwrap()).collect();
            (v[0], v[1])
        })
        .collect();
    assert_eq!(rows.len(), 11);
    assert!(rows.windows(2).all(|w| w[1].1 < w[0].1));
    assert!(rows[0].1 > 0.0 && rows[10].1 < 0.0);
    assert!(text.starts_with("# gamma1(-c, f) = "));
}

#[test]
fn custom_fields_resolve_relative_to_the_config() {
    let dir = tempfile::tempdir().unwrap();
    // 5x5 grid: 3x3 interior values, c = -1, f = 1
    let field = |v: f64| format!("2 5 5\n1.0 1.0\n{}", format!("{v}\n").repeat(9));
    std::fs::write(dir.path().join("c.txt"), field(-1.0)).unwrap();
    std::fs::write(dir.path().join("f.txt"), field(1.0)).unwrap();
    let cfg = write_config(
        dir.path(),
        "preset = custom\nmu = 1\nnodes = 5\nc_file = c.txt\nf_file = f.txt",
    );
    let out = mpass(&[], &cfg);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn identical_runs_give_identical_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "mu = auto\nnodes = 33\nseed = 2");
    let mut csvs = Vec::new();
    for _ in 0..2 {
        assert_eq!(mpass(&[], &cfg).status.code(), Some(0));
        csvs.push(std::fs::read(dir.path().join("out/report.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}
