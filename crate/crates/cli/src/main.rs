use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use modarray::error::{Error, Result};
use modarray::harness::{
    dump_selection, emit_aggregates, emit_csv, run_config_study, run_experiment, run_sweep_fig6, trial_seed,
    validate_invariants, ConfigStudy, ExperimentConfig,
};
use modarray::schedulers::Scheduler;

/// Multi-user scheduling simulator for modular near-field arrays.
#[derive(Debug, Parser)]
#[command(name = "simulate", version)]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Base seed; overrides `base_seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Interference against angle for users at equal distance.
    SweepFig6 {
        /// Distances in meters.
        #[arg(long, value_delimiter = ',', default_value = "10,30,60,150")]
        distances: Vec<f64>,
        #[arg(long, default_value_t = -60.0, allow_hyphen_values = true)]
        theta_min: f64,
        #[arg(long, default_value_t = 60.0)]
        theta_max: f64,
        #[arg(long, default_value_t = 0.1)]
        theta_step: f64,
    },
    /// Sum-SE of the fixed-aperture layouts with 128 antennas.
    ConfigStudy {
        /// SNR in dB (default: last configured SNR point).
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<f64>,
    },
    /// User positions and selection flags of a single trial.
    DumpSelection {
        #[arg(long, allow_hyphen_values = true)]
        snr: f64,
        #[arg(long)]
        scheduler: String,
        /// Trial index whose drop is dumped.
        #[arg(long, default_value_t = 0)]
        trial: u64,
    },
    /// Runs the invariant battery.
    Validate,
}

fn load_config(cli: &Cli, required: bool) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None if required => return Err(Error::config("--config", "a configuration file is required")),
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.base_seed = seed;
    }
    Ok(cfg)
}

fn report(path: &Path) {
    eprintln!("wrote {}", path.display());
}

fn run(cli: &Cli) -> Result<()> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Error::config("--threads", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::config("--threads", e.to_string()))?;
    }
    match &cli.command {
        None => {
            let cfg = load_config(cli, true)?;
            let rows = run_experiment(&cfg)?;
            let results = cfg.output_dir.join("results.csv");
            let aggregates = cfg.output_dir.join("aggregates.csv");
            emit_csv(&rows, &results)?;
            emit_aggregates(&rows, &aggregates)?;
            report(&results);
            report(&aggregates);
        }
        Some(Command::SweepFig6 {
            distances,
            theta_min,
            theta_max,
            theta_step,
        }) => {
            let cfg = load_config(cli, false)?;
            if !(*theta_step > 0.0) || theta_min > theta_max {
                return Err(Error::config("--theta-step", "need theta_step > 0 and theta_min <= theta_max"));
            }
            let count = ((theta_max - theta_min) / theta_step + 1e-9).floor() as usize + 1;
            let grid: Vec<f64> = (0..count).map(|i| theta_min + i as f64 * theta_step).collect();
            let path = cfg.output_dir.join("sweep_fig6.csv");
            run_sweep_fig6(&cfg.array, distances, &grid, &path)?;
            report(&path);
        }
        Some(Command::ConfigStudy { snr }) => {
            let cfg = load_config(cli, false)?;
            let mut study = ConfigStudy::from_experiment(&cfg);
            if let Some(snr) = snr {
                study.snr_db = *snr;
            }
            let path = cfg.output_dir.join("config_study.csv");
            for row in run_config_study(&study, Some(&path))? {
                println!(
                    "N={:<3} M={:<3} S={:<6} sum-SE {:.3}",
                    row.n_modules,
                    row.antennas_per_module,
                    row.separation,
                    row.mean()
                );
            }
            report(&path);
        }
        Some(Command::DumpSelection { snr, scheduler, trial }) => {
            let cfg = load_config(cli, false)?;
            let scheduler: Scheduler = scheduler.parse().map_err(|e: String| Error::config("--scheduler", e))?;
            let seed = trial_seed(cfg.base_seed, *trial);
            let path = cfg.output_dir.join(format!("selection_{scheduler}_trial{trial}.csv"));
            let out = dump_selection(&cfg, *snr, seed, scheduler, &path)?;
            println!(
                "{scheduler}: {} of {} users selected, sum-SE {:.3}",
                out.result.selected.len(),
                cfg.scenario.num_users,
                out.result.sum_se
            );
            report(&path);
        }
        Some(Command::Validate) => {
            let cfg = load_config(cli, false)?;
            let checks = validate_invariants(cfg.base_seed);
            let mut failed = 0;
            for c in &checks {
                println!("[{}] {}: {}", if c.passed { "pass" } else { "FAIL" }, c.name, c.detail);
                failed += usize::from(!c.passed);
            }
            if failed > 0 {
                return Err(Error::Numerical(format!("{failed} invariant check(s) failed")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
