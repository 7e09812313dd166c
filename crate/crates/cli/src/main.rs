use std::fs::File;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use seta_core::experiment::{metrics_path, write_summary, SweepSpec};
use seta_core::{run_experiment, sweep, Error, ExperimentConfig, MethodName, Result};

/// Loss-guided dataset pruning experiments.
///
/// Exit codes: 0 success, 1 configuration or usage error, 2 runtime failure.
#[derive(Debug, Parser)]
#[command(name = "seta", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment config, one metrics file per seed.
    Run {
        /// Experiment config (JSON). Built-in defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a sweep file and write summary.csv.
    Sweep {
        /// Sweep file (JSON) with `base`, `grid` and/or `configs`.
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
        /// Runs executed concurrently.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
    },
}

/// Flags override the corresponding config-file fields.
#[derive(Debug, Clone, Default, Args)]
struct Overrides {
    /// Selection method: seta, full, static_random, dynamic_random, mean_loss_prune [default: seta]
    #[arg(long)]
    method: Option<MethodName>,
    /// Down-sampling ratio, also the baseline subset ratio [default: 0.6]
    #[arg(long)]
    r: Option<f64>,
    /// Number of loss clusters [default: 10]
    #[arg(long)]
    k: Option<usize>,
    /// Window scale, window width is ceil(alpha * k) [default: 0.5]
    #[arg(long)]
    alpha: Option<f64>,
    /// Training epochs [default: 30]
    #[arg(long)]
    epochs: Option<usize>,
    /// Run a single seed instead of the config's seed list [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory [default: runs]
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(m) = self.method {
            cfg.method = m;
        }
        if let Some(r) = self.r {
            cfg.seta.r = r;
            cfg.baseline.r = r;
        }
        if let Some(k) = self.k {
            cfg.seta.k = k;
        }
        if let Some(alpha) = self.alpha {
            cfg.seta.alpha = alpha;
        }
        if let Some(epochs) = self.epochs {
            cfg.epochs = epochs;
        }
        if let Some(seed) = self.seed {
            cfg.seeds = vec![seed];
        }
    }
}

fn run(config: Option<&Path>, overrides: &Overrides) -> Result<()> {
    let mut cfg = match config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    overrides.apply(&mut cfg);
    if let Some(out) = &overrides.out {
        cfg.output_dir = out.clone();
    }
    for metrics in run_experiment(&cfg)? {
        let f = &metrics.footer;
        println!(
            "{} seed {}: rho_bar {:.4}, final_acc {:.4} -> {}",
            f.method.as_str(),
            f.seed,
            f.rho_bar,
            f.final_acc,
            metrics_path(&cfg.output_dir, f.seed).display()
        );
    }
    Ok(())
}

fn run_sweep(config: &Path, overrides: &Overrides, jobs: usize) -> Result<()> {
    let mut spec = SweepSpec::load(config)?;
    let out = overrides
        .out
        .clone()
        .or_else(|| spec.base.as_ref().map(|b| b.output_dir.clone()))
        .unwrap_or_else(|| PathBuf::from("runs"));
    if let Some(base) = &mut spec.base {
        base.output_dir = out.clone();
    }
    if overrides.out.is_some() {
        for (i, cfg) in spec.configs.iter_mut().enumerate() {
            cfg.output_dir = out.join(format!("config{i}"));
        }
    }
    let mut configs = spec.expand();
    for cfg in &mut configs {
        overrides.apply(cfg);
    }
    let rows = sweep(&configs, jobs)?;
    std::fs::create_dir_all(&out)?;
    let summary = out.join("summary.csv");
    write_summary(File::create(&summary)?, &rows)?;
    let failed = rows.iter().filter(|r| r.outcome.is_err()).count();
    for row in rows.iter().filter(|r| r.outcome.is_err()) {
        if let Err(msg) = &row.outcome {
            eprintln!("failed: {} seed {}: {msg}", row.method.as_str(), row.seed);
        }
    }
    println!("{} runs, {failed} failed -> {}", rows.len(), summary.display());
    if failed > 0 {
        return Err(Error::Data(format!("{failed} of {} runs failed", rows.len())));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match &cli.command {
        Command::Run { config, overrides } => run(config.as_deref(), overrides),
        Command::Sweep { config, overrides, jobs } => run_sweep(config, overrides, *jobs),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
