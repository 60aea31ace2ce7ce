//! `gowers-lab`: batch runner for the sieve, measure, verification and
//! corner experiments. Every run writes a JSON report (and a CSV where the
//! result is a table) into `--out`.
//!
//! Exit status: 0 when every verdict passes, 1 on a failed verdict or a
//! numerical inconsistency, 2 on configuration errors.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use config::{ConfigError, Resolver};

#[derive(Parser)]
#[command(name = "gowers-lab", version, about = "Weighted Gowers norms and corners in the primes")]
struct Cli {
    /// Flat key=value file (or an earlier JSON report); flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; falls back to GOWERS_LAB_THREADS.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Directory receiving the JSON and CSV outputs.
    #[arg(long, global = true, default_value = "reports")]
    out: PathBuf,
    /// Include wall-clock time in the JSON report (breaks byte-identical reruns).
    #[arg(long, global = true)]
    record_timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Prime and Möbius tables up to `limit`.
    Sieve(Params),
    /// The Green–Tao measure with summary statistics.
    Measure(Params),
    /// Numerical checks of the norm and measure properties.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Corner enumeration, density scans and the reduction to Z_N.
    #[command(subcommand)]
    Corners(CornersCmd),
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Linear forms condition.
    Lf(Params),
    /// Gowers–Cauchy–Schwarz on random tuples.
    Gcs(Params),
    /// Triangle inequality and homogeneity of the box norm.
    Norm(Params),
    /// Box-norm control of the counting form across an N-grid.
    Vn(Params),
    /// Pairings of products of dual functions against normalised probes.
    Dual(Params),
}

#[derive(Subcommand)]
enum CornersCmd {
    /// Count corners in one point set.
    Count(Params),
    /// Normalised counts across an N-grid.
    Scan(Params),
    /// W-trick reduction and pullback check.
    Reduce(Params),
}

/// Every parameter is read as text so flag and file values share one parser.
#[derive(Args, Default, Clone)]
pub struct Params {
    #[arg(long = "n")]
    pub n: Option<String>,
    #[arg(long = "d")]
    pub d: Option<String>,
    #[arg(long, alias = "omega")]
    pub omega_cutoff: Option<String>,
    #[arg(long = "b")]
    pub b: Option<String>,
    /// Truncation level R (default: max(N^{1/(d 2^{d+5})}, N^{1/10})).
    #[arg(long = "r")]
    pub r: Option<String>,
    #[arg(long)]
    pub delta1: Option<String>,
    #[arg(long)]
    pub delta2: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub trials: Option<String>,
    #[arg(long)]
    pub samples: Option<String>,
    /// exact | sampled
    #[arg(long)]
    pub mode: Option<String>,
    /// Forms as `a1,..,at,b;...` rows.
    #[arg(long)]
    pub forms: Option<String>,
    /// random | unit | green-tao
    #[arg(long)]
    pub measure: Option<String>,
    #[arg(long)]
    pub face: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    /// full | random
    #[arg(long)]
    pub rule: Option<String>,
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub input: Option<String>,
    #[arg(long = "k")]
    pub k: Option<String>,
    #[arg(long)]
    pub probes: Option<String>,
    #[arg(long)]
    pub limit: Option<String>,
    #[arg(long)]
    pub slack: Option<String>,
    #[arg(long)]
    pub stability_slack: Option<String>,
    #[arg(long)]
    pub window: Option<String>,
    #[arg(long)]
    pub weighted: Option<String>,
    #[arg(long)]
    pub max_spread: Option<String>,
}

/// Result of one subcommand.
pub struct Outcome {
    pub passed: bool,
    pub report: Value,
    pub csv: Option<String>,
}

pub enum RunError {
    Config(ConfigError),
    Lib(gowers_lab::Error),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<gowers_lab::Error> for RunError {
    fn from(e: gowers_lab::Error) -> Self {
        RunError::Lib(e)
    }
}

fn configure_threads(cli: Option<usize>) -> Result<(), ConfigError> {
    let n = match cli {
        Some(n) => Some(n),
        None => match std::env::var("GOWERS_LAB_THREADS") {
            Ok(s) => Some(
                s.trim()
                    .parse::<usize>()
                    .map_err(|e| ConfigError::new("threads", format!("GOWERS_LAB_THREADS={s:?}: {e}")))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = n {
        if n == 0 {
            return Err(ConfigError::new("threads", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| ConfigError::new("threads", e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads(cli.threads) {
        eprintln!("{e}");
        return ExitCode::from(2);
    }
    let file = match &cli.config {
        None => Ok(Default::default()),
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))
            .and_then(|t| config::parse_file(&t)),
    };
    let mut res = match file {
        Ok(f) => Resolver::new(f),
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    let (name, label, params, run): (&str, &str, &Params, commands::Runner) = match &cli.command {
        Command::Sieve(p) => ("sieve", "sieve", p, commands::sieve),
        Command::Measure(p) => ("measure", "measure", p, commands::measure),
        Command::Verify(VerifyCmd::Lf(p)) => ("verify-lf", "verify lf", p, commands::verify_lf),
        Command::Verify(VerifyCmd::Gcs(p)) => ("verify-gcs", "verify gcs", p, commands::verify_gcs),
        Command::Verify(VerifyCmd::Norm(p)) => ("verify-norm", "verify norm", p, commands::verify_norm),
        Command::Verify(VerifyCmd::Vn(p)) => ("verify-vn", "verify vn", p, commands::verify_vn),
        Command::Verify(VerifyCmd::Dual(p)) => ("verify-dual", "verify dual", p, commands::verify_dual),
        Command::Corners(CornersCmd::Count(p)) => ("corners-count", "corners count", p, commands::corners_count),
        Command::Corners(CornersCmd::Scan(p)) => ("corners-scan", "corners scan", p, commands::corners_scan),
        Command::Corners(CornersCmd::Reduce(p)) => ("corners-reduce", "corners reduce", p, commands::corners_reduce),
    };
    let start = Instant::now();
    let outcome = match run(&mut res, params, cli.record_timing) {
        Ok(o) => o,
        Err(RunError::Config(e)) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
        Err(RunError::Lib(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(match e {
                gowers_lab::Error::Numerical(_) | gowers_lab::Error::Consistency(_) => 1,
                _ => 2,
            });
        }
    };
    let mut config: serde_json::Map<String, Value> = res.effective.into_iter().collect();
    config.insert("subcommand".into(), json!(label));
    let mut envelope = json!({
        "version": gowers_lab::REPORT_VERSION,
        "subcommand": label,
        "config": config,
        "verdict": if outcome.passed { "pass" } else { "fail" },
        "report": outcome.report,
    });
    if cli.record_timing {
        envelope["wall_ms"] = json!(start.elapsed().as_secs_f64() * 1e3);
    }
    if let Err(e) = write_outputs(&cli.out, name, &envelope, outcome.csv.as_deref()) {
        eprintln!("error writing reports to {}: {e}", cli.out.display());
        return ExitCode::from(1);
    }
    println!("{label}: {}", if outcome.passed { "pass" } else { "fail" });
    if outcome.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn write_outputs(dir: &std::path::Path, name: &str, report: &Value, csv: Option<&str>) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut text = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
    text.push('\n');
    std::fs::write(dir.join(format!("{name}.json")), text)?;
    if let Some(csv) = csv {
        std::fs::write(dir.join(format!("{name}.csv")), csv)?;
    }
    Ok(())
}
