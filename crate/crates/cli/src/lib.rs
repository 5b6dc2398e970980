//! Command implementations behind the `wsnsim` binary.
//!
//! Every command writes plain CSV or text files into an output directory,
//! creating it when missing. Outputs depend only on (config, seeds).

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use wsn_core::experiment::{compare, compare_csv, sweep, sweep_csv};
use wsn_core::metrics::metrics_csv;
use wsn_core::{SimConfig, Simulation, Topology};

pub const METRICS_FILE: &str = "metrics.csv";
pub const TIMESERIES_FILE: &str = "timeseries.csv";
pub const TOPOLOGY_FILE: &str = "topology.txt";
pub const TRACE_FILE: &str = "trace.txt";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const COMPARE_FILE: &str = "compare.csv";

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf> {
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(path)
}

fn topology(config: &SimConfig, seed: u64) -> Result<Topology> {
    Topology::generate(config, seed).with_context(|| format!("seed {seed}"))
}

/// One replication: metrics.csv, timeseries.csv and topology.txt, plus
/// trace.txt when `trace` is set.
pub fn cmd_run(config: &SimConfig, seed: u64, out: &Path, trace: bool) -> Result<Vec<PathBuf>> {
    let topo = Arc::new(topology(config, seed)?);
    let mut sim = Simulation::new(config.clone(), Arc::clone(&topo), seed)?;
    if trace {
        sim = sim.with_trace();
    }
    let report = sim
        .run()
        .with_context(|| format!("simulation failed for seed {seed}"))?;

    ensure_dir(out)?;
    let mut written = vec![
        write_file(
            out,
            METRICS_FILE,
            &metrics_csv(std::slice::from_ref(&report)),
        )?,
        write_file(out, TIMESERIES_FILE, &report.timeseries_csv())?,
        write_file(out, TOPOLOGY_FILE, &topo.to_text())?,
    ];
    if let Some(events) = &report.trace {
        written.push(write_file(out, TRACE_FILE, events)?);
    }
    Ok(written)
}

pub fn cmd_topology(config: &SimConfig, seed: u64, out: &Path) -> Result<PathBuf> {
    let topo = topology(config, seed)?;
    ensure_dir(out)?;
    write_file(out, TOPOLOGY_FILE, &topo.to_text())
}

pub fn cmd_sweep(
    config: &SimConfig,
    seeds: &[u64],
    key: &str,
    values: &[String],
    out: &Path,
) -> Result<PathBuf> {
    let rows = sweep::<f64>(config, seeds, key, values)
        .with_context(|| format!("sweep over {key} failed"))?;
    ensure_dir(out)?;
    write_file(out, SWEEP_FILE, &sweep_csv(&rows))
}

pub fn cmd_compare(config: &SimConfig, seeds: &[u64], out: &Path) -> Result<PathBuf> {
    let pairs = compare::<f64>(config, seeds).context("comparison failed")?;
    ensure_dir(out)?;
    write_file(out, COMPARE_FILE, &compare_csv(&pairs))
}

/// `N`, `N..M` (half-open) or `N..=M`.
pub fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    let spec = spec.trim();
    let parse = |s: &str| -> Result<u64> {
        s.trim()
            .parse()
            .with_context(|| format!("invalid seed {s:?} in {spec:?}"))
    };
    let seeds: Vec<u64> = if let Some((lo, hi)) = spec.split_once("..=") {
        (parse(lo)?..=parse(hi)?).collect()
    } else if let Some((lo, hi)) = spec.split_once("..") {
        (parse(lo)?..parse(hi)?).collect()
    } else {
        vec![parse(spec)?]
    };
    if seeds.is_empty() {
        bail!("seed range {spec:?} is empty");
    }
    Ok(seeds)
}

/// `KEY=v1,v2,...`
pub fn parse_sweep(spec: &str) -> Result<(String, Vec<String>)> {
    let Some((key, values)) = spec.split_once('=') else {
        bail!("sweep spec {spec:?} must look like KEY=v1,v2,...");
    };
    let values: Vec<String> = values
        .split(',')
        .map(|v| v.trim().to_string())
        .filter(|v| !v.is_empty())
        .collect();
    if key.trim().is_empty() || values.is_empty() {
        bail!("sweep spec {spec:?} needs a key and at least one value");
    }
    Ok((key.trim().to_string(), values))
}

/// `key=value`
pub fn parse_override(spec: &str) -> Result<(String, String)> {
    match spec.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_string(), v.trim().to_string())),
        _ => bail!("override {spec:?} must look like key=value"),
    }
}
