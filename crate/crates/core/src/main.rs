use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand};

use lake_core::config::SolverConfig;
use lake_core::dynamics::run;
use lake_core::elliptic::{elliptic_estimate_probe, probe_samples, StreamOperator};
use lake_core::experiment::{sweep, SweepPlan};
use lake_core::io::{diagnostics_csv, probe_csv, snapshot_text, sweep_csv, write_atomic};
use lake_core::verify::{run_suite, CRITERIA};
use lake_core::LakeError;

const EXIT_INVARIANT: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

#[derive(Parser)]
#[command(name = "lake", version, about = "Degenerate viscous lake equations on the unit disk")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one configured scenario; writes diagnostics and snapshots.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `output_dir`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Vanishing-viscosity sweep against the inviscid reference.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated, strictly decreasing viscosities (overrides `sweep.mu`).
        #[arg(long, value_delimiter = ',')]
        mu: Option<Vec<f64>>,
        /// Report CSV (default `<output_dir>/sweep.csv`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Full invariant suite; exit status 0 only if every check passes.
    Verify {
        /// Artifact directory.
        #[arg(long, default_value = "verify_out")]
        out: PathBuf,
        /// Comma-separated criterion numbers (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Option<Vec<u8>>,
        /// Skip the second pass that checks byte-identical artifacts.
        #[arg(long)]
        no_determinism: bool,
    },
    /// Elliptic estimate probe on pseudo-random right-hand sides.
    Probe {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "3,4,6")]
        p: Vec<f64>,
        #[arg(long, default_value_t = 5)]
        samples: usize,
        /// Probe CSV (default `<output_dir>/probe.csv`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn exit_code(e: &LakeError) -> u8 {
    match e {
        LakeError::Config(_) | LakeError::InvalidParameter { .. } | LakeError::Io(_) => EXIT_CONFIG,
        _ => EXIT_NUMERICAL,
    }
}

fn load(path: &Path) -> Result<SolverConfig, LakeError> {
    SolverConfig::from_file(path)
}

fn cmd_run(config: &Path, out: Option<PathBuf>) -> Result<u8, LakeError> {
    let cfg = load(config)?;
    let dir = out.unwrap_or_else(|| cfg.output_dir.clone());
    let hash = cfg.hash();
    let result = run(&cfg)?;
    write_atomic(&dir.join("diagnostics.csv"), diagnostics_csv(&result.series, &hash).as_bytes())?;
    for (k, s) in result.trajectory.iter().enumerate() {
        let name = format!("snapshot_{k:04}.field");
        write_atomic(&dir.join(name), snapshot_text(s, &hash)?.as_bytes())?;
    }
    println!(
        "run: {} snapshots, {} steps to t = {} -> {}",
        result.trajectory.len(),
        result.series.rows.len().saturating_sub(1),
        result.trajectory.last().map(|s| s.t).unwrap_or(0.0),
        dir.display()
    );
    Ok(0)
}

fn cmd_sweep(config: &Path, mu: Option<Vec<f64>>, out: Option<PathBuf>) -> Result<u8, LakeError> {
    let cfg = load(config)?;
    let mut plan = SweepPlan::from_config(&cfg);
    if let Some(m) = mu {
        plan.mu_list = m;
    }
    let path = out.unwrap_or_else(|| cfg.output_dir.join("sweep.csv"));
    let report = sweep(&plan)?;
    write_atomic(&path, sweep_csv(&report, &cfg.hash()).as_bytes())?;
    for (mu, err) in &report.failed {
        eprintln!("sweep: run with mu = {mu:e} failed: {err}");
    }
    println!("sweep: {} viscosities -> {}", report.mu_list.len(), path.display());
    Ok(if report.complete() { 0 } else { EXIT_NUMERICAL })
}

fn cmd_verify(out: &Path, only: Option<Vec<u8>>, no_determinism: bool) -> Result<u8, LakeError> {
    let ids = only.unwrap_or_else(|| CRITERIA.to_vec());
    if let Some(bad) = ids.iter().find(|i| !CRITERIA.contains(i)) {
        return Err(LakeError::Config(vec![format!("unknown criterion {bad}")]));
    }
    let report = run_suite(&ids, !no_determinism)?;
    for a in &report.artifacts {
        write_atomic(&out.join(&a.name), a.contents.as_bytes())?;
    }
    print!("{}", report.summary());
    Ok(if report.passed() { 0 } else { EXIT_INVARIANT })
}

fn cmd_probe(config: &Path, p: Vec<f64>, samples: usize, out: Option<PathBuf>) -> Result<u8, LakeError> {
    let cfg = load(config)?;
    let bath = cfg.build_bathymetry()?;
    let grid = Arc::clone(bath.grid());
    let op = StreamOperator::new(bath)?;
    let fields = probe_samples(&grid, samples, cfg.seed);
    let rows = elliptic_estimate_probe(&op, &fields, &p)?;
    let path = out.unwrap_or_else(|| cfg.output_dir.join("probe.csv"));
    write_atomic(&path, probe_csv(&rows, &cfg.hash()).as_bytes())?;
    println!("probe: {} rows -> {}", rows.len(), path.display());
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out } => cmd_run(&config, out),
        Command::Sweep { config, mu, out } => cmd_sweep(&config, mu, out),
        Command::Verify {
            out,
            only,
            no_determinism,
        } => cmd_verify(&out, only, no_determinism),
        Command::Probe {
            config,
            p,
            samples,
            out,
        } => cmd_probe(&config, p, samples, out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("lake: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
