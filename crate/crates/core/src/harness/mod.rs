//! Monte Carlo experiments over SNR points, trials and schedulers.

mod config;
mod output;
mod studies;
mod validate;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use config::{scenario_preset, ArrayPreset, ExperimentConfig, CONFIG_STUDY_LAYOUTS, DEFAULT_CARRIER_HZ};
pub use output::{aggregate, emit_aggregates, emit_csv, write_csv, Aggregate, CSV_HEADER};
pub use studies::{dump_selection, run_config_study, run_sweep_fig6, ConfigStudy, ConfigStudyRow};
pub use validate::{validate_invariants, Check};

use crate::channel::{channels, ChannelVector};
use crate::error::Result;
use crate::geometry::sample_users;
use crate::schedulers::{Scheduler, SchedulerOutcome};

/// One (scheduler, SNR, trial) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub scheduler: Scheduler,
    pub snr_db: f64,
    pub trial: u64,
    pub sum_se: f64,
    pub served_users: usize,
    pub runtime_ms: f64,
    pub seed: u64,
}

/// SplitMix64 finaliser; a bijection on `u64`.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of trial `trial`; distinct trials get distinct seeds.
pub fn trial_seed(base_seed: u64, trial: u64) -> u64 {
    base_seed ^ splitmix64(trial)
}

/// User drop and channels of the trial with the given seed.
pub fn trial_channels(cfg: &ExperimentConfig, seed: u64) -> Result<Vec<ChannelVector>> {
    let mut scenario = cfg.scenario.clone();
    scenario.seed = seed;
    let users = sample_users(&scenario, &mut ChaCha8Rng::seed_from_u64(seed))?;
    Ok(channels(&cfg.array, &users, cfg.amplitude))
}

/// Runs one scheduler on one drop. Greedy draws its permutation from an
/// independent stream of the trial seed.
pub fn run_cell(
    cfg: &ExperimentConfig,
    channels: &[ChannelVector],
    scheduler: Scheduler,
    snr_db: f64,
    seed: u64,
) -> Result<SchedulerOutcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    scheduler.run(
        channels,
        &cfg.scheduler_cfg,
        &mut rng,
        cfg.transmit_power(snr_db),
        cfg.noise_power,
    )
}

fn run_trial(cfg: &ExperimentConfig, trial: u64) -> Result<Vec<ResultRow>> {
    let seed = trial_seed(cfg.base_seed, trial);
    let ch = trial_channels(cfg, seed)?;
    let mut rows = Vec::with_capacity(cfg.snr_db.len() * cfg.schedulers.len());
    for &snr_db in &cfg.snr_db {
        for &scheduler in &cfg.schedulers {
            let out = run_cell(cfg, &ch, scheduler, snr_db, seed)?;
            rows.push(ResultRow {
                scheduler,
                snr_db,
                trial,
                sum_se: out.result.sum_se,
                served_users: out.result.served_users(),
                runtime_ms: out.runtime * 1e3,
                seed,
            });
        }
    }
    Ok(rows)
}

/// All cells of the experiment, ordered by scheduler (config order), SNR
/// (config order) and trial. Trials run in parallel on the current rayon pool.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<ResultRow>> {
    cfg.validate()?;
    // warm-up trial, discarded
    run_trial(cfg, 0)?;
    let per_trial: Vec<Vec<ResultRow>> = (0..cfg.trials)
        .into_par_iter()
        .map(|t| run_trial(cfg, t))
        .collect::<Result<_>>()?;
    let mut rows: Vec<ResultRow> = per_trial.into_iter().flatten().collect();
    let sched_pos = |s: Scheduler| cfg.schedulers.iter().position(|&x| x == s).unwrap_or(usize::MAX);
    let snr_pos = |v: f64| cfg.snr_db.iter().position(|&x| x == v).unwrap_or(usize::MAX);
    rows.sort_by_key(|r| (sched_pos(r.scheduler), snr_pos(r.snr_db), r.trial));
    Ok(rows)
}
