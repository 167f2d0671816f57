//! Single-trial selection dumps, the interference sweep and the
//! fixed-aperture configuration study.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use super::{run_cell, trial_channels, trial_seed, write_csv, ExperimentConfig, CONFIG_STUDY_LAYOUTS};
use crate::error::{Error, Result};
use crate::geometry::{apertures, ArrayConfig, ScenarioConfig};
use crate::interference::interference_sweep;
use crate::schedulers::{Scheduler, SchedulerConfig, SchedulerOutcome};

/// Writes `x,y,selected` for every user of one drop.
pub fn dump_selection(
    cfg: &ExperimentConfig,
    snr_db: f64,
    seed: u64,
    scheduler: Scheduler,
    path: &Path,
) -> Result<SchedulerOutcome> {
    cfg.validate()?;
    let ch = trial_channels(cfg, seed)?;
    let out = run_cell(cfg, &ch, scheduler, snr_db, seed)?;
    let mut selected = vec![false; ch.len()];
    for &k in &out.result.selected {
        selected[k] = true;
    }
    let mut text = String::from("x,y,selected\n");
    for (c, s) in ch.iter().zip(&selected) {
        let _ = writeln!(text, "{},{},{}", c.user.x(), c.user.y(), u8::from(*s));
    }
    write_csv(path, &text)?;
    Ok(out)
}

/// Interference seen from a user at `(r, 0)` by users at `(r, θ)`, one block
/// per distance; the plane-wave column is the same for every distance.
pub fn run_sweep_fig6(array: &ArrayConfig, distances: &[f64], theta_deg: &[f64], path: &Path) -> Result<()> {
    if distances.is_empty() || theta_deg.is_empty() {
        return Err(Error::config("sweep", "distances and angle grid must be non-empty"));
    }
    let grid: Vec<f64> = theta_deg.iter().map(|t| t.to_radians()).collect();
    let blocks: Vec<String> = distances
        .par_iter()
        .map(|&r| {
            let points = interference_sweep(array, r, &grid, true)?;
            let mut block = String::new();
            for (p, deg) in points.iter().zip(theta_deg) {
                let pw = p.iui_pw.expect("plane-wave reference requested");
                let _ = writeln!(block, "{r},{deg},{},{pw}", p.iui_sw);
            }
            Ok(block)
        })
        .collect::<Result<_>>()?;
    write_csv(path, &format!("r_m,theta_deg,iui_sw,iui_pw\n{}", blocks.concat()))
}

/// Settings of the fixed-aperture study; arrays come from [`CONFIG_STUDY_LAYOUTS`].
#[derive(Debug, Clone)]
pub struct ConfigStudy {
    pub scenario: ScenarioConfig,
    pub snr_db: f64,
    pub trials: u64,
    pub base_seed: u64,
    pub scheduler: Scheduler,
    pub scheduler_cfg: SchedulerConfig,
    pub carrier_hz: f64,
}

impl ConfigStudy {
    /// Study settings taken from an experiment config (last SNR point, SUS).
    pub fn from_experiment(cfg: &ExperimentConfig) -> Self {
        ConfigStudy {
            scenario: cfg.scenario.clone(),
            snr_db: *cfg.snr_db.last().unwrap_or(&25.0),
            trials: cfg.trials,
            base_seed: cfg.base_seed,
            scheduler: Scheduler::Sus,
            scheduler_cfg: cfg.scheduler_cfg,
            carrier_hz: cfg.array.carrier_frequency(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigStudyRow {
    pub n_modules: usize,
    pub antennas_per_module: usize,
    pub separation: f64,
    pub aperture_m: f64,
    /// Sum-SE per trial; trial `t` uses the same drop for every layout.
    pub sum_se: Vec<f64>,
}

impl ConfigStudyRow {
    pub fn mean(&self) -> f64 {
        self.sum_se.iter().sum::<f64>() / self.sum_se.len() as f64
    }
}

/// Mean sum-SE per layout at fixed `NM = 128`; writes
/// `n_modules,antennas_per_module,separation,aperture_m,trials,sum_se_mean,sum_se_std`.
pub fn run_config_study(study: &ConfigStudy, path: Option<&Path>) -> Result<Vec<ConfigStudyRow>> {
    let mut rows = Vec::with_capacity(CONFIG_STUDY_LAYOUTS.len());
    for (n, m, s) in CONFIG_STUDY_LAYOUTS {
        let array = ArrayConfig::new(n, m, s, study.carrier_hz)?;
        let exp = ExperimentConfig {
            array: array.clone(),
            scenario: study.scenario.clone(),
            snr_db: vec![study.snr_db],
            trials: study.trials,
            schedulers: vec![study.scheduler],
            scheduler_cfg: study.scheduler_cfg,
            base_seed: study.base_seed,
            ..ExperimentConfig::default()
        };
        exp.validate()?;
        let sum_se: Vec<f64> = (0..study.trials)
            .into_par_iter()
            .map(|t| {
                let seed = trial_seed(study.base_seed, t);
                let ch = trial_channels(&exp, seed)?;
                Ok(run_cell(&exp, &ch, study.scheduler, study.snr_db, seed)?.result.sum_se)
            })
            .collect::<Result<_>>()?;
        rows.push(ConfigStudyRow {
            n_modules: n,
            antennas_per_module: m,
            separation: s,
            aperture_m: apertures(&array).total,
            sum_se,
        });
    }
    if let Some(path) = path {
        let mut text = String::from("n_modules,antennas_per_module,separation,aperture_m,trials,sum_se_mean,sum_se_std\n");
        for r in &rows {
            let mean = r.mean();
            let std = if r.sum_se.len() > 1 {
                (r.sum_se.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (r.sum_se.len() - 1) as f64).sqrt()
            } else {
                0.0
            };
            let _ = writeln!(
                text,
                "{},{},{},{},{},{},{}",
                r.n_modules,
                r.antennas_per_module,
                r.separation,
                r.aperture_m,
                r.sum_se.len(),
                mean,
                std
            );
        }
        write_csv(path, &text)?;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Region, Sampling};

    fn small_cfg() -> ExperimentConfig {
        ExperimentConfig::from_toml_str("trials = 2\nsnr_db = [20]\n[scenario]\nnum_users = 20").unwrap()
    }

    #[test]
    fn selection_dump_marks_selected_users() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sel.csv");
        let out = dump_selection(&small_cfg(), 20.0, 3, Scheduler::Rss, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x,y,selected");
        assert_eq!(lines.len(), 21);
        let flagged = lines[1..].iter().filter(|l| l.ends_with(",1")).count();
        assert_eq!(flagged, out.result.selected.len());
    }

    #[test]
    fn sweep_csv_blocks() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("fig6.csv");
        let array = ArrayConfig::new(32, 4, 13.0, 15e9).unwrap();
        run_sweep_fig6(&array, &[30.0, 150.0], &[0.0, 1.0, 2.0], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "r_m,theta_deg,iui_sw,iui_pw");
        assert_eq!(lines.len(), 7);
        assert!(lines[1].starts_with("30,0,1,1"));
        assert!(lines[4].starts_with("150,0,"));
        assert!(run_sweep_fig6(&array, &[], &[0.0], &path).is_err());
    }

    #[test]
    fn config_study_shape() {
        let study = ConfigStudy {
            scenario: ScenarioConfig {
                region: Region::Sector {
                    r_min: 10.0,
                    r_max: 60.0,
                    theta_min: -1.0,
                    theta_max: 1.0,
                },
                num_users: 10,
                sampling: Sampling::UniformArea,
                seed: 0,
            },
            snr_db: 10.0,
            trials: 2,
            base_seed: 1,
            scheduler: Scheduler::Sus,
            scheduler_cfg: SchedulerConfig::default(),
            carrier_hz: 15e9,
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("study.csv");
        let rows = run_config_study(&study, Some(&path)).unwrap();
        assert_eq!(rows.len(), 8);
        assert!(rows.iter().all(|r| r.sum_se.len() == 2 && r.mean() > 0.0));
        assert_eq!(std::fs::read_to_string(&path).unwrap().lines().count(), 9);
    }
}
