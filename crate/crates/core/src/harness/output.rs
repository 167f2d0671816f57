//! CSV emission and per-(scheduler, SNR) aggregates.

use std::fmt::Write as _;
use std::path::Path;

use super::ResultRow;
use crate::error::{Error, Result};
use crate::schedulers::Scheduler;

pub const CSV_HEADER: &str = "scheduler,snr_db,trial,sum_se,served_users,runtime_ms,seed";

/// Writes `body` to `path`, creating parent directories.
pub fn write_csv(path: &Path, body: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

pub fn emit_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.scheduler, r.snr_db, r.trial, r.sum_se, r.served_users, r.runtime_ms, r.seed
        );
    }
    write_csv(path, &out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    pub scheduler: Scheduler,
    pub snr_db: f64,
    pub count: usize,
    pub sum_se_mean: f64,
    pub sum_se_std: f64,
    pub served_mean: f64,
    pub served_std: f64,
    pub runtime_ms_mean: f64,
    pub runtime_ms_std: f64,
    pub runtime_ms_median: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Groups rows by (scheduler, SNR) in order of first appearance.
pub fn aggregate(rows: &[ResultRow]) -> Vec<Aggregate> {
    let mut keys: Vec<(Scheduler, f64)> = Vec::new();
    for r in rows {
        if !keys.iter().any(|&(s, v)| s == r.scheduler && v == r.snr_db) {
            keys.push((r.scheduler, r.snr_db));
        }
    }
    keys.into_iter()
        .map(|(scheduler, snr_db)| {
            let group: Vec<&ResultRow> = rows.iter().filter(|r| r.scheduler == scheduler && r.snr_db == snr_db).collect();
            let col = |f: fn(&ResultRow) -> f64| group.iter().map(|r| f(r)).collect::<Vec<f64>>();
            let (sum_se_mean, sum_se_std) = mean_std(&col(|r| r.sum_se));
            let (served_mean, served_std) = mean_std(&col(|r| r.served_users as f64));
            let runtimes = col(|r| r.runtime_ms);
            let (runtime_ms_mean, runtime_ms_std) = mean_std(&runtimes);
            Aggregate {
                scheduler,
                snr_db,
                count: group.len(),
                sum_se_mean,
                sum_se_std,
                served_mean,
                served_std,
                runtime_ms_mean,
                runtime_ms_std,
                runtime_ms_median: median(&runtimes),
            }
        })
        .collect()
}

const PLOT_SCRIPT: &str = r#"import csv
import sys
from collections import defaultdict

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else "aggregates.csv"
curves = defaultdict(list)
with open(path) as f:
    for row in csv.DictReader(f):
        curves[row["scheduler"]].append(
            (float(row["snr_db"]), float(row["sum_se_mean"]), float(row["served_mean"]))
        )

fig, (ax_se, ax_users) = plt.subplots(1, 2, figsize=(11, 4))
for name, pts in curves.items():
    pts.sort()
    snr = [p[0] for p in pts]
    ax_se.plot(snr, [p[1] for p in pts], marker="o", label=name.upper())
    ax_users.plot(snr, [p[2] for p in pts], marker="o", label=name.upper())
ax_se.set_xlabel("SNR [dB]")
ax_se.set_ylabel("Sum-SE [bits/s/Hz]")
ax_users.set_xlabel("SNR [dB]")
ax_users.set_ylabel("Served users")
for ax in (ax_se, ax_users):
    ax.grid(True)
    ax.legend()
fig.tight_layout()
fig.savefig(path.rsplit(".", 1)[0] + ".png", dpi=150)
"#;

/// Writes the aggregates CSV and a matplotlib script next to it (same stem,
/// `.py` extension) that plots sum-SE and served users against SNR.
pub fn emit_aggregates(rows: &[ResultRow], path: &Path) -> Result<()> {
    let mut out = String::from(
        "scheduler,snr_db,trials,sum_se_mean,sum_se_std,served_mean,served_std,runtime_ms_mean,runtime_ms_std,runtime_ms_median\n",
    );
    for a in aggregate(rows) {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            a.scheduler,
            a.snr_db,
            a.count,
            a.sum_se_mean,
            a.sum_se_std,
            a.served_mean,
            a.served_std,
            a.runtime_ms_mean,
            a.runtime_ms_std,
            a.runtime_ms_median
        );
    }
    write_csv(path, &out)?;
    write_csv(&path.with_extension("py"), PLOT_SCRIPT)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(s: Scheduler, snr: f64, trial: u64, se: f64, served: usize) -> ResultRow {
        ResultRow {
            scheduler: s,
            snr_db: snr,
            trial,
            sum_se: se,
            served_users: served,
            runtime_ms: 1.5,
            seed: 99,
        }
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nested/results.csv");
        emit_csv(&[row(Scheduler::Rss, 25.0, 0, 12.25, 3)], &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, format!("{CSV_HEADER}\nrss,25,0,12.25,3,1.5,99\n"));
    }

    #[test]
    fn aggregates_recompute_from_rows() {
        let rows = vec![
            row(Scheduler::Sus, 0.0, 0, 1.0, 1),
            row(Scheduler::Sus, 0.0, 1, 3.0, 3),
            row(Scheduler::Sus, 5.0, 0, 4.0, 2),
            row(Scheduler::Dbs, 0.0, 0, 2.0, 2),
        ];
        let agg = aggregate(&rows);
        assert_eq!(agg.len(), 3);
        assert_eq!((agg[0].scheduler, agg[0].snr_db, agg[0].count), (Scheduler::Sus, 0.0, 2));
        assert_eq!(agg[0].sum_se_mean, 2.0);
        assert!((agg[0].sum_se_std - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(agg[1].sum_se_std, 0.0);
        assert_eq!(agg[2].served_mean, 2.0);

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("agg.csv");
        emit_aggregates(&rows, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 4);
        assert!(text.lines().nth(1).unwrap().starts_with("sus,0,2,2,"));
        assert!(dir.path().join("agg.py").exists());
    }

    #[test]
    fn median_of_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
