//! Multi-run experiments: replications, parameter sweeps and paired
//! rate-control on/off comparisons.
//!
//! Replications run in parallel but results always come back in seed
//! order, so every table is deterministic.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::config::SimConfig;
use crate::engine::{run_simulation, EngineError};
use crate::metrics::MetricsReport;
use crate::scalar::Scalar;

/// Runs one replication per seed.
pub fn run_replications<F: Scalar>(
    config: &SimConfig,
    seeds: &[u64],
) -> Result<Vec<MetricsReport<F>>, EngineError> {
    seeds
        .par_iter()
        .map(|&seed| run_simulation(config, seed))
        .collect()
}

/// Sample mean and standard error; the error is zero for fewer than two
/// samples.
pub fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub parameter: String,
    pub value: String,
    pub replications: usize,
    pub mean_r: f64,
    pub stderr_r: f64,
    pub drop_percent: f64,
    pub stderr_drop: f64,
    /// Percent of originated packets delivered.
    pub success_percent: f64,
    pub stderr_success: f64,
}

impl SweepRow {
    /// Aggregates one sweep point.
    pub fn from_reports<F: Scalar>(
        parameter: &str,
        value: &str,
        reports: &[MetricsReport<F>],
    ) -> Self {
        let col = |f: fn(&MetricsReport<F>) -> f64| -> (f64, f64) {
            mean_and_stderr(&reports.iter().map(f).collect::<Vec<_>>())
        };
        let (mean_r, stderr_r) = col(|r| r.mean_r);
        let (drop_percent, stderr_drop) = col(|r| r.drop_percent);
        let (success_percent, stderr_success) = col(|r| 100.0 * r.success_rate);
        SweepRow {
            parameter: parameter.to_string(),
            value: value.to_string(),
            replications: reports.len(),
            mean_r,
            stderr_r,
            drop_percent,
            stderr_drop,
            success_percent,
            stderr_success,
        }
    }
}

/// Runs every seed at each value of `key` and reports one row per value,
/// ordered by achieved mean service ratio.
pub fn sweep<F: Scalar>(
    config: &SimConfig,
    seeds: &[u64],
    key: &str,
    values: &[String],
) -> Result<Vec<SweepRow>, EngineError> {
    let mut rows = Vec::with_capacity(values.len());
    for value in values {
        let mut point = config.clone();
        point.set(key, value)?;
        point.validate()?;
        let reports = run_replications::<F>(&point, seeds)?;
        rows.push(SweepRow::from_reports(key, value, &reports));
    }
    rows.sort_by(|a, b| a.mean_r.total_cmp(&b.mean_r));
    Ok(rows)
}

/// [`sweep`] over the service-ratio threshold.
pub fn sweep_service_ratio<F: Scalar>(
    config: &SimConfig,
    seeds: &[u64],
    ratio_thresholds: &[f64],
) -> Result<Vec<SweepRow>, EngineError> {
    let values: Vec<String> = ratio_thresholds.iter().map(|t| t.to_string()).collect();
    sweep::<F>(config, seeds, "ratio_threshold", &values)
}

pub const SWEEP_COLUMNS: [&str; 9] = [
    "parameter",
    "value",
    "replications",
    "mean_r",
    "drop_percent",
    "success_rate",
    "stderr_r",
    "stderr_drop",
    "stderr_success",
];

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = SWEEP_COLUMNS.join(",");
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}",
            r.parameter,
            r.value,
            r.replications,
            r.mean_r,
            r.drop_percent,
            r.success_percent,
            r.stderr_r,
            r.stderr_drop,
            r.stderr_success
        );
    }
    out
}

/// Same seed and topology with rate control on and off.
#[derive(Clone, Debug)]
pub struct ComparePair<F> {
    pub seed: u64,
    pub on: MetricsReport<F>,
    pub off: MetricsReport<F>,
}

pub fn compare<F: Scalar>(
    config: &SimConfig,
    seeds: &[u64],
) -> Result<Vec<ComparePair<F>>, EngineError> {
    let on = SimConfig {
        rate_control_enabled: true,
        ..config.clone()
    };
    let off = SimConfig {
        rate_control_enabled: false,
        ..config.clone()
    };
    seeds
        .par_iter()
        .map(|&seed| {
            Ok(ComparePair {
                seed,
                on: run_simulation(&on, seed)?,
                off: run_simulation(&off, seed)?,
            })
        })
        .collect()
}

pub const COMPARE_COLUMNS: [&str; 11] = [
    "seed",
    "rate_control",
    "drop_percent",
    "success_rate",
    "dropped_queue",
    "missed_deadline",
    "energy_prioritizer",
    "energy_sched_unit",
    "energy_congestion",
    "energy_implicit",
    "energy_tx_total",
];

pub fn compare_csv<F: Scalar>(pairs: &[ComparePair<F>]) -> String {
    let mut out = COMPARE_COLUMNS.join(",");
    out.push('\n');
    for pair in pairs {
        for (label, r) in [("on", &pair.on), ("off", &pair.off)] {
            let e = &r.energy;
            let _ = writeln!(
                out,
                "{},{},{:.6},{:.6},{},{},{:.6},{:.6},{:.6},{:.6},{:.6}",
                pair.seed,
                label,
                r.drop_percent,
                r.success_rate,
                r.counts.dropped_queue,
                r.counts.missed_deadline,
                e.prioritizer.to_f64_lossy(),
                e.scheduling_unit.to_f64_lossy(),
                e.congestion.to_f64_lossy(),
                e.implicit_congestion.to_f64_lossy(),
                e.transmission.to_f64_lossy(),
            );
        }
    }
    out
}
