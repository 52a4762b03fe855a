use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use mpass_core::config::{parse_config, RunConfig};
use mpass_core::scenario::{run_mu_scan, run_scenario, EXIT_CONFIG};

#[derive(Parser)]
#[command(
    name = "mpass",
    version,
    about = "Two positive solutions of -Δu = c(x)u + μ|∇u|² + f(x)"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the solver on a `key = value` configuration file.
    Solve(SolveArgs),
}

#[derive(clap::Args)]
struct SolveArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    /// A number, or `auto` to search.
    #[arg(long)]
    lambda: Option<String>,
    /// Tabulate λ₁(−c − μf) at `n` values of μ in [lo, hi] instead of solving.
    #[arg(long, value_name = "LO:HI:N")]
    mu_scan: Option<String>,
}

fn load(args: &SolveArgs) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| format!("{}: {e}", args.config.display()))?;
    let mut cfg = parse_config(&text).map_err(|e| format!("{}: {e}", args.config.display()))?;
    // coefficient files are relative to the config file
    let base = args.config.parent().unwrap_or(Path::new("."));
    for p in [&mut cfg.c_file, &mut cfg.f_file].into_iter().flatten() {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    let overrides = [
        ("preset", args.preset.clone()),
        ("out", args.out.as_ref().map(|p| p.display().to_string())),
        ("seed", args.seed.map(|s| s.to_string())),
        ("theta", args.theta.map(|x| x.to_string())),
        ("p", args.p.map(|x| x.to_string())),
        ("lambda", args.lambda.clone()),
    ];
    for (key, value) in overrides {
        if let Some(v) = value {
            cfg.apply(key, &v).map_err(|e| format!("--{key}: {e}"))?;
        }
    }
    cfg.validate().map_err(|e| e.to_string())?;
    Ok(cfg)
}

fn parse_scan(s: &str) -> Result<(f64, f64, usize), String> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || format!("--mu-scan expects lo:hi:n, got '{s}'");
    let [lo, hi, n] = parts[..] else {
        return Err(bad());
    };
    Ok((
        lo.parse().map_err(|_| bad())?,
        hi.parse().map_err(|_| bad())?,
        n.parse().map_err(|_| bad())?,
    ))
}

fn solve(args: SolveArgs) -> Result<i32, String> {
    let cfg = load(&args)?;
    if let Some(scan) = &args.mu_scan {
        let (lo, hi, n) = parse_scan(scan)?;
        let table = run_mu_scan(&cfg, lo, hi, n)?;
        std::fs::create_dir_all(&cfg.out).map_err(|e| e.to_string())?;
        let path = cfg.out.join("mu_scan.txt");
        std::fs::write(&path, table.to_text()).map_err(|e| format!("{}: {e}", path.display()))?;
        print!("{}", table.to_text());
        return Ok(0);
    }
    let out = run_scenario(&cfg).map_err(|e| format!("writing {}: {e}", cfg.out.display()))?;
    print!("{}", out.report.to_text(&out.timings));
    if let Some(msg) = &out.report.error_message {
        eprintln!("error: {msg}");
    }
    Ok(out.exit_code())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Solve(args) => solve(args).unwrap_or_else(|e| {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }),
    };
    ExitCode::from(code as u8)
}
