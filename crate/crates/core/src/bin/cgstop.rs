use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use cgstop::criteria::{tau_sweep, CriterionKind};
use cgstop::error::{Error, Result};
use cgstop::experiment::{run_experiment, write_outputs, ExperimentConfig, ExperimentResult, ProblemKind};
use cgstop::verify;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cgstop", version, about = "CG stopping criteria benchmark for high-order FEM")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one experiment and write trace.csv, summary.csv, mesh.txt, config.echo.
    Run(Common),
    /// Replay the recorded trace for a grid of 1/tau values.
    SweepTau {
        #[command(flatten)]
        common: Common,
        /// `start:end:count` grid of 1/tau.
        #[arg(long, default_value = "3:30:50")]
        grid: String,
    },
    /// Run the quick property checks.
    Verify,
}

#[derive(Args)]
struct Common {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    degree: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    delay: Option<usize>,
    /// e.g. `c1,c3,c5,c7:1e-8`
    #[arg(long)]
    criteria: Option<String>,
    #[arg(long)]
    sample_every: Option<usize>,
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Serial execution (no thread pool).
    #[arg(long)]
    sequential: bool,
    /// Any other key, as `key=value`; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => ExperimentConfig::from_toml(&fs::read_to_string(p)?)?,
            None => ExperimentConfig::defaults(ProblemKind::Test1),
        };
        if let Some(p) = &self.problem {
            cfg.set("problem", p)?;
        }
        let mut set = |k: &str, v: Option<String>| v.map_or(Ok(()), |v| cfg.set(k, &v));
        set("degree", self.degree.map(|v| v.to_string()))?;
        set("tau", self.tau.map(|v| v.to_string()))?;
        set("delay", self.delay.map(|v| v.to_string()))?;
        set("criteria", self.criteria.clone())?;
        set("sample_every", self.sample_every.map(|v| v.to_string()))?;
        set("out_dir", self.out_dir.as_ref().map(|p| p.display().to_string()))?;
        if self.sequential {
            cfg.set("parallel", "false")?;
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("expected key=value, got `{kv}`")))?;
            cfg.set(k.trim(), v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_summary(r: &ExperimentResult) {
    println!(
        "{} N={} elements={} dofs={} e_dis={:.4e} iterations={}",
        r.config.problem,
        r.config.degree,
        r.problem.disc().num_triangles(),
        r.problem.num_free(),
        r.reference.e_dis,
        r.trace.iterations
    );
    if let Some(w) = &r.warmup {
        println!("warm-up: {} iterations, recycle basis of dimension {}", w.iterations, w.basis_dim);
    }
    println!("{:<10} {:>6} {:>10} {:>6}", "criterion", "k*", "quality", "+d");
    for v in &r.verdicts {
        match (v.k_star, v.quality_ratio) {
            (Some(k), Some(q)) => println!("{:<10} {:>6} {:>10.4} {:>6}", v.config.kind, k, q, v.extra_delay_iters),
            _ => println!("{:<10} {:>6} {:>10}", v.config.kind, "-", "did not fire"),
        }
    }
    for v in &r.violations {
        eprintln!("invariant violated: {v}");
    }
}

fn parse_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    let bad = || Error::Config(format!("grid `{s}` is not start:end:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let a: f64 = parts[0].parse().map_err(|_| bad())?;
    let b: f64 = parts[1].parse().map_err(|_| bad())?;
    let n: usize = parts[2].parse().map_err(|_| bad())?;
    if !(a > 1.0 && b >= a && n > 0) {
        return Err(bad());
    }
    Ok(cgstop::criteria::linspace(a, b, n))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Run(common) => {
            let cfg = common.config()?;
            let t = Instant::now();
            let r = run_experiment(&cfg)?;
            write_outputs(&r, &cfg.out_dir)?;
            print_summary(&r);
            println!("wrote {} in {:.1}s", cfg.out_dir.display(), t.elapsed().as_secs_f64());
            Ok(r.violations.is_empty())
        }
        Cmd::SweepTau { common, grid } => {
            let mut cfg = common.config()?;
            let grid = parse_grid(&grid)?;
            // Record with the smallest tau so the trace passes every firing point.
            cfg.tau = 1.0 / grid.iter().cloned().fold(f64::MIN, f64::max);
            let r = run_experiment(&cfg)?;
            let kinds: Vec<CriterionKind> = cfg.criteria.iter().copied().filter(|k| !matches!(k, CriterionKind::C7 { .. })).collect();
            let sweep = tau_sweep(&kinds, &grid, cfg.delay, &r.rows, &r.trace.increments, r.reference.e_dis);
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(["inv_tau", "criterion", "iterations", "quality_ratio"])?;
            for (it, kind, k, q) in &sweep {
                w.write_record([
                    format!("{it:.6}"),
                    kind.to_string(),
                    k.map_or_else(String::new, |k| k.to_string()),
                    q.map_or_else(|| "did not fire".into(), |q| format!("{q:.6}")),
                ])?;
            }
            fs::create_dir_all(&cfg.out_dir)?;
            let path = cfg.out_dir.join("tau_sweep.csv");
            fs::write(&path, w.into_inner().map_err(|e| e.into_error())?)?;
            write_outputs(&r, &cfg.out_dir)?;
            for (it, kind, _, q) in sweep.iter().filter(|s| s.0 == grid[0] || s.0 == *grid.last().unwrap()) {
                println!("1/tau={it:<8.3} {kind:<4} {}", q.map_or("did not fire".into(), |q| format!("{q:.5}")));
            }
            println!("wrote {}", path.display());
            Ok(true)
        }
        Cmd::Verify => {
            let mut ok = true;
            for c in verify::run_checks() {
                println!("{} {:<40} {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
                ok &= c.passed;
            }
            Ok(ok)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
