//! Batch front end for the `fermi-scatter` laboratory: strict TOML configs,
//! command dispatch, seeded runs and artifact directories.
//!
//! Exit codes: 0 pass, 2 fail with a report, 1 error (bad config, I/O,
//! numerical error outside the command's own failure modes).

pub mod artifacts;
pub mod commands;
pub mod config;

use std::path::{Path, PathBuf};

use clap::Parser;
use serde_json::{json, Value};

use artifacts::{run_dir, to_json, write_field, write_table};
use commands::{Context, Outcome};
use config::{Parameters, RunConfig};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_FAIL: i32 = 2;

#[derive(Debug, Clone, Parser)]
#[command(name = "fermi-scatter", about = "Linear response, Strichartz and scattering checks for Fermi gases near equilibrium")]
pub struct Cli {
    /// TOML run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides `master_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Overrides `output_dir`.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Run the solver even when the hypothesis audit fails; recorded in the report.
    #[arg(long)]
    pub override_audit: bool,
}

/// Where a finished run left its files.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub exit_code: i32,
    pub dir: Option<PathBuf>,
    pub message: String,
}

fn dispatch(cfg: &RunConfig, ctx: Context) -> Result<Outcome, fermi_scatter::Error> {
    match &cfg.parameters {
        Parameters::MultiplierScan(p) => commands::multiplier_scan(p),
        Parameters::InvertibilityCheck(p) => commands::invertibility_check(p),
        Parameters::HypothesisAudit(p) => commands::hypothesis(p),
        Parameters::StrichartzScan(p) => commands::strichartz_scan(p),
        Parameters::OptimalityProbe(p) => commands::optimality_probe(p),
        Parameters::WaveSeries(p) => commands::wave_series(p, ctx),
        Parameters::Solve(p) if cfg.command == config::Command::ScatterCheck => commands::scatter_check(p, ctx),
        Parameters::Solve(p) => commands::solve(p, ctx),
    }
}

fn emit(root: &Path, cfg: &RunConfig, resolved: Value, outcome: Outcome, override_audit: bool) -> std::io::Result<RunReport> {
    let now = chrono::Utc::now();
    let dir = run_dir(root, cfg.command.name(), &now.format("%Y%m%dT%H%M%S%.3fZ").to_string())?;
    let mut files = Vec::new();
    for t in &outcome.tables {
        let p = write_table(&dir, t)?;
        files.push(p.strip_prefix(&dir).unwrap_or(&p).display().to_string());
    }
    for f in &outcome.fields {
        let (b, m) = write_field(&dir, f)?;
        for p in [b, m] {
            files.push(p.strip_prefix(&dir).unwrap_or(&p).display().to_string());
        }
    }
    let exit_code = if outcome.pass { EXIT_PASS } else { EXIT_FAIL };
    let report = json!({
        "command": cfg.command.name(),
        "spec_version": cfg.spec_version,
        "timestamp": now.to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        "pass": outcome.pass,
        "exit_code": exit_code,
        "override_audit": override_audit,
        "config": resolved,
        "result": outcome.result,
        "artifacts": files,
    });
    std::fs::write(dir.join("report.json"), to_json(&report))?;
    let message = format!("{}: {}", cfg.command.name(), if outcome.pass { "pass" } else { "FAIL" });
    Ok(RunReport { exit_code, dir: Some(dir), message })
}

/// Loads the config, applies command-line overrides, runs the command and
/// writes `<output>/<command>-<timestamp>/`.
pub fn run(cli: &Cli) -> RunReport {
    let error = |message: String| RunReport { exit_code: EXIT_ERROR, dir: None, message };
    let mut cfg = match config::load(&cli.config) {
        Ok(c) => c,
        Err(e) => return error(e.to_string()),
    };
    if let Some(s) = cli.seed {
        cfg.master_seed = s;
    }
    if let Some(w) = cli.workers {
        cfg.workers = Some(w);
    }
    let root = cli.output.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("runs"));
    cfg.output_dir = Some(root.clone());
    let override_audit = cli.override_audit
        || matches!(&cfg.parameters, Parameters::Solve(p) if p.override_audit);
    let mut resolved = serde_json::to_value(&cfg).expect("config serialises");
    resolved["override_audit"] = json!(override_audit);

    let ctx = Context { seed: cfg.master_seed, override_audit };
    let outcome = match cfg.workers {
        Some(0) => return error("config error: `workers` must be positive".into()),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(&cfg, ctx)),
            Err(e) => return error(format!("cannot start {n} workers: {e}")),
        },
        None => dispatch(&cfg, ctx),
    };
    match outcome {
        Ok(o) => emit(&root, &cfg, resolved, o, override_audit)
            .unwrap_or_else(|e| error(format!("cannot write artifacts under {}: {e}", root.display()))),
        Err(e) => error(format!("{}: error: {e}", cfg.command.name())),
    }
}
