//! Executes a validated [`RunConfig`] into an output directory.

use std::path::Path;

use serde_json::json;

use kuramoto_core::dynamics::{integrate, sample_frequencies, sample_initial_conditions};
use kuramoto_core::ensemble::io::write_ensemble;
use kuramoto_core::ensemble::{
    all_units, cross_matrix, delta_omega_scan, omega_new_scan, run_ensemble, RunOptions, UnitScan,
};
use kuramoto_core::observables::{summarize, DEFAULT_FREQ_TOL};
use kuramoto_core::sweep::run_sweep;
use kuramoto_core::topology::RingIndex;
use kuramoto_core::Error;

use crate::config::{RunConfig, RunManifest, ScanMode, RUN_FILE};

/// Why a run did not finish cleanly.
#[derive(Debug)]
pub enum RunError {
    Config(String),
    /// Integration failed; any partial results are on disk.
    Numerical(String),
    Other(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => 2,
            RunError::Numerical(_) => 3,
            RunError::Other(_) => 1,
        }
    }
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RunError::Config(m) => write!(f, "config error: {m}"),
            RunError::Numerical(m) => write!(f, "numerical failure: {m}"),
            RunError::Other(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<Error> for RunError {
    fn from(e: Error) -> Self {
        match e {
            Error::Integration { .. } => RunError::Numerical(e.to_string()),
            Error::Io { .. } | Error::Json(_) | Error::Checkpoint { .. } => RunError::Other(e.to_string()),
            _ => RunError::Config(e.to_string()),
        }
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), RunError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| RunError::Other(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| RunError::Other(format!("{}: {e}", path.display())))
}

fn write_text(path: &Path, text: &str) -> Result<(), RunError> {
    std::fs::write(path, text).map_err(|e| RunError::Other(format!("{}: {e}", path.display())))
}

fn failures(count: usize, what: &str) -> Result<(), RunError> {
    if count == 0 {
        Ok(())
    } else {
        Err(RunError::Numerical(format!("{count} {what} failed to integrate; see outputs")))
    }
}

/// Runs `config`, writing every output under `out`.
pub fn execute(config: &RunConfig, out: &Path, workers: Option<usize>, verbose: bool) -> Result<(), RunError> {
    config.validate().map_err(|e| RunError::Config(e.0))?;
    std::fs::create_dir_all(out).map_err(|e| RunError::Other(format!("{}: {e}", out.display())))?;
    write_json(&out.join(RUN_FILE), &RunManifest::new(config.clone()))?;
    let log = |msg: String| {
        if verbose {
            eprintln!("{msg}");
        }
    };

    match config {
        RunConfig::Simulate {
            topology,
            freq_seed,
            ic_seed,
            sim,
            phase_stride,
        } => {
            let topo = topology.build()?;
            let omega = sample_frequencies(topology.n(), *freq_seed)?;
            let initial = sample_initial_conditions(topology.n(), *ic_seed)?;
            log(format!("simulating N = {} for {} samples", topology.n(), sim.sample_count()));
            let traj = integrate(&initial, &omega, &topo, sim)?;
            let summary = summarize(&traj, DEFAULT_FREQ_TOL)?;
            let meta = json!({
                "topology": topology,
                "freq_seed": freq_seed,
                "ic_seed": ic_seed,
                "sim": sim,
                "frequencies": omega.provenance,
            });
            traj.write_binary(&out.join("trajectory"), meta)?;
            traj.write_r_csv(&out.join("r.csv"))?;
            traj.write_frequency_csv(&out.join("frequencies.csv"))?;
            traj.write_phase_csv(&out.join("phases.csv"), *phase_stride)?;
            write_json(
                &out.join("summary.json"),
                &json!({
                    "R": summary.r_mean,
                    "r_std": summary.r_std,
                    "freq_sync": summary.freq_sync,
                    "omega_avg": summary.omega_avg,
                    "omega": omega.omega,
                }),
            )?;
            println!("R = {}", summary.r_mean);
            Ok(())
        }
        RunConfig::Ensemble {
            template,
            strategy,
            sim,
            settings,
        } => {
            let options = RunOptions {
                workers,
                freq_tol: settings.freq_tol,
                fingerprints: settings.fingerprints,
                attractor_tol: settings.attractor_tol,
                ..RunOptions::default()
            };
            log(format!("running {} samples", strategy.count));
            let run = run_ensemble(template, strategy, sim, &options)?;
            write_ensemble(out, &run.records, &run.stats)?;
            let s = &run.stats;
            println!("delta = {} chi = {} R_mean = {}", s.delta, s.chi, s.r_mean);
            if let Some(c) = s.attractor_count {
                println!("attractors >= {c}");
            }
            failures(s.failures.len(), "samples")
        }
        RunConfig::Sweep { plan } => {
            log(format!("sweeping {} grid points", plan.points()?.len()));
            let result = run_sweep(plan, Some(out), workers)?;
            let failed: usize = result.points.iter().map(|p| p.stats.failures.len()).sum();
            println!("{} grid points written to {}", result.points.len(), out.display());
            failures(failed, "samples")
        }
        RunConfig::Scan {
            template,
            sim,
            mode,
            units,
        } => {
            let n = template.n();
            let units: Vec<RingIndex> = match units {
                Some(u) => u.iter().map(|&i| RingIndex::new(i, n)).collect::<Result<_, _>>()?,
                None => all_units(n),
            };
            let options = RunOptions {
                workers,
                ..RunOptions::default()
            };
            log(format!("scanning {} units", units.len()));
            let scan = match mode {
                ScanMode::OmegaNew(v) => omega_new_scan(template, &units, *v, sim, &options)?,
                ScanMode::DeltaOmega(d) => delta_omega_scan(template, &units, d, sim, &options)?,
            };
            write_scan(out, &scan, template)?;
            println!("R_ref = {} max |dR| = {}", scan.r_ref, scan.max_abs());
            failures(scan.failures, "scan runs")
        }
        RunConfig::Cross {
            template,
            shuffles,
            networks,
            base_seed,
            sim,
        } => {
            let options = RunOptions {
                workers,
                ..RunOptions::default()
            };
            let m = cross_matrix(template, *shuffles, *networks, *base_seed, sim, &options)?;
            let mut csv = String::from("shuffle_seed");
            for s in &m.topology_seeds {
                csv.push_str(&format!(",network_{s}"));
            }
            csv.push('\n');
            for (seed, row) in m.shuffle_seeds.iter().zip(&m.r) {
                csv.push_str(&seed.to_string());
                for v in row {
                    csv.push_str(&format!(",{v}"));
                }
                csv.push('\n');
            }
            write_text(&out.join("cross.csv"), &csv)?;
            write_json(&out.join("cross.json"), &m)?;
            println!("argmax network per shuffle: {:?}", m.argmax_columns());
            failures(m.failures, "cells")
        }
    }
}

fn write_scan(out: &Path, scan: &UnitScan, template: &kuramoto_core::ensemble::SampleTemplate) -> Result<(), RunError> {
    let omega = template.frequencies()?;
    let mut csv = String::from("unit,omega");
    for c in &scan.columns {
        csv.push_str(&format!(",dR@{c}"));
    }
    csv.push('\n');
    for (u, row) in scan.units.iter().zip(&scan.delta_r) {
        csv.push_str(&format!("{u},{}", omega.omega[u - 1]));
        for v in row {
            csv.push_str(&format!(",{v}"));
        }
        csv.push('\n');
    }
    write_text(&out.join("scan.csv"), &csv)?;
    write_json(&out.join("scan.json"), scan)
}
