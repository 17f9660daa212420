//! Dispatch of a validated [`RunConfig`] to the library.

use std::io::Write;
use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;

use super::config::{Command, ConfigError, RunConfig};
use super::CliError;
use crate::bounds::{bounds_row, connectivity_constants};
use crate::experiments::sweep::{from_csv, to_csv, write_atomic};
use crate::experiments::{
    estimate, threshold_frontier, two_seam_experiment, with_workers, Campaign, FrontierConfig,
    SweepMode, SweepPoint, SweepRow, TwoSeamConfig,
};
use crate::oracle::certify::{certify_case, series_gap, walk_reports};
use crate::oracle::pauli::verify_propagation;
use crate::oracle::{certify, CertificationCase, CertificationReport};

fn failed(e: impl std::fmt::Display) -> CliError {
    CliError::Failed(e.to_string())
}

fn json_path(output: &Path) -> PathBuf {
    output.with_extension("json")
}

fn to_json(value: &impl Serialize) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(failed)
}

/// Rows of an existing output CSV, reused by fingerprint.
fn load_resume(cfg: &RunConfig) -> Result<Vec<SweepRow>, CliError> {
    let Some(path) = &cfg.run.output else {
        return Ok(Vec::new());
    };
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = std::fs::read_to_string(path).map_err(failed)?;
    let rows = from_csv(&text).map_err(|e| {
        CliError::Invalid(ConfigError {
            field: "run.output".into(),
            reason: format!("cannot resume from {}: {e}", path.display()),
        })
    })?;
    info!("resuming with {} rows from {}", rows.len(), path.display());
    Ok(rows)
}

/// Writes the CSV to the output path, or to stdout without one.
fn emit_csv(cfg: &RunConfig, csv: String, out: &mut String) -> Result<(), CliError> {
    match &cfg.run.output {
        Some(path) => {
            write_atomic(path, csv.as_bytes()).map_err(failed)?;
            info!("wrote {}", path.display());
        }
        None => out.push_str(&csv),
    }
    Ok(())
}

fn emit_rows(cfg: &RunConfig, rows: &[SweepRow], out: &mut String) -> Result<(), CliError> {
    emit_csv(cfg, to_csv(rows).map_err(failed)?, out)
}

/// Writes a JSON summary next to the CSV output and always echoes it.
fn emit_summary(cfg: &RunConfig, json: String, out: &mut String) -> Result<(), CliError> {
    if let Some(path) = &cfg.run.output {
        let path = json_path(path);
        write_atomic(&path, json.as_bytes()).map_err(failed)?;
        info!("wrote {}", path.display());
    }
    out.push_str(&json);
    Ok(())
}

/// Runs `cfg` and writes whatever belongs on standard output to `stdout`,
/// including the partial output of a failed run.
pub fn execute(cfg: &RunConfig, stdout: &mut dyn Write) -> Result<(), CliError> {
    let mut out = String::new();
    let result = match cfg.run.workers {
        Some(n) => with_workers(n, || dispatch(cfg, &mut out)),
        None => dispatch(cfg, &mut out),
    };
    stdout.write_all(out.as_bytes()).map_err(failed)?;
    result
}

fn dispatch(cfg: &RunConfig, out: &mut String) -> Result<(), CliError> {
    match cfg.command {
        Command::Bounds => run_bounds(cfg, out),
        Command::Simulate => run_simulate(cfg, out),
        Command::Sweep => run_sweep(cfg, out),
        Command::Threshold => run_threshold(cfg, out),
        Command::Frontier => run_frontier(cfg, out),
        Command::TwoSeam => run_two_seam(cfg, out),
        Command::OracleVerify => run_oracle(cfg, out),
    }
}

fn run_bounds(cfg: &RunConfig, out: &mut String) -> Result<(), CliError> {
    let b = &cfg.bounds;
    let params = connectivity_constants(b.ds, b.db)
        .map_err(failed)?
        .with_mu_2c(b.mu_2c)
        .with_overrides(b.overrides());
    let axis = b.p_b.expect("validated");
    let mut w = csv::Writer::from_writer(Vec::new());
    for p_b in axis.values() {
        let row = bounds_row(p_b, b.distance, b.h, &params).map_err(|e| {
            CliError::Invalid(ConfigError {
                field: "bounds.p_b".into(),
                reason: e.to_string(),
            })
        })?;
        w.serialize(row).map_err(failed)?;
    }
    let bytes = w.into_inner().map_err(failed)?;
    emit_csv(cfg, String::from_utf8(bytes).map_err(failed)?, out)
}

fn run_simulate(cfg: &RunConfig, out: &mut String) -> Result<(), CliError> {
    let spec = cfg.lattice_spec(cfg.lattice.distances[0])?;
    let params = cfg.noise_params()?;
    let est = estimate(&spec, params, cfg.run.shots, cfg.run.seed)?;
    let row = SweepRow::new(&SweepPoint { spec, params }, &est);
    if let Some(path) = &cfg.run.output {
        write_atomic(path, to_csv(&[row]).map_err(failed)?.as_bytes()).map_err(failed)?;
    }
    out.push_str(&to_json(&est)?);
    Ok(())
}

fn campaign(cfg: &RunConfig) -> Result<Campaign, CliError> {
    let (mode, axis) = cfg.sweep_mode()?;
    Ok(Campaign {
        mode,
        distances: cfg.lattice.distances.clone(),
        rounds: cfg.lattice.rounds,
        axis,
        shots: cfg.run.shots,
        seed: cfg.run.seed,
        bootstrap: cfg.run.bootstrap,
    })
}

fn run_sweep(cfg: &RunConfig, out: &mut String) -> Result<(), CliError> {
    let c = campaign(cfg)?;
    let points = crate::experiments::grid_points(c.mode, &c.distances, c.rounds, &c.axis)?;
    let rows = crate::experiments::sweep(&points, c.shots, c.seed, &load_resume(cfg)?)?;
    emit_rows(cfg, &rows, out)
}

#[derive(Serialize)]
struct ThresholdSummary<'a> {
    mode: SweepMode,
    distances: &'a [usize],
    fit: &'a crate::experiments::ThresholdFit,
}

fn run_threshold(cfg: &RunConfig, out: &mut String) -> Result<(), CliError> {
    let c = campaign(cfg)?;
    let res = c.run(&load_resume(cfg)?)?;
    emit_rows(cfg, &res.rows, out)?;
    let fit = res.fit?;
    emit_summary(
        cfg,
        to_json(&ThresholdSummary {
            mode: c.mode,
            distances: &c.distances,
            fit: &fit,
        })?,
        out,
    )
}

fn run_frontier(cfg: &RunConfig, out: &mut String) -> Result<(), CliError> {
    let fc = FrontierConfig {
        distances: cfg.lattice.distances.clone(),
        rounds: cfg.lattice.rounds,
        shots: cfg.run.shots,
        seed: cfg.run.seed,
        bootstrap: cfg.run.bootstrap,
        bulk_axis: cfg.grid.p_bulk.expect("validated"),
        seam_axis: cfg.grid.p_seam.expect("validated"),
        slice_fractions: cfg.grid.slice_fractions.clone(),
        slice_axis: cfg.grid.slice_p_seam.expect("validated"),
    };
    let frontier = threshold_frontier(&fc, &load_resume(cfg)?)?;
    emit_rows(cfg, &frontier.rows, out)?;
    emit_summary(cfg, to_json(&frontier)?, out)
}

#[derive(Serialize)]
struct TwoSeamSummary<'a> {
    p_bulk: f64,
    p_bulk_star: f64,
    #[serde(flatten)]
    result: &'a crate::experiments::TwoSeamResult,
}

fn run_two_seam(cfg: &RunConfig, out: &mut String) -> Result<(), CliError> {
    let resume = load_resume(cfg)?;
    let mut rows = Vec::new();
    let p_bulk_star = match cfg.grid.p_bulk_star {
        Some(p) => p,
        None => {
            let bulk = Campaign {
                mode: SweepMode::BulkOnly,
                distances: cfg.lattice.distances.clone(),
                rounds: cfg.lattice.rounds,
                axis: cfg.grid.p_bulk.expect("validated"),
                shots: cfg.run.shots,
                seed: cfg.run.seed,
                bootstrap: cfg.run.bootstrap,
            }
            .run(&resume)?;
            rows.extend(bulk.rows);
            bulk.fit?.p_c
        }
    };
    let p_bulk = cfg
        .grid
        .bulk_fraction
        .map_or(cfg.noise.p_bulk, |f| f * p_bulk_star);
    info!("two-seam runs at p_bulk = {p_bulk} (bulk threshold {p_bulk_star})");
    let tc = TwoSeamConfig {
        separations: cfg.lattice.separations.clone(),
        p_bulk,
        p_bulk_star,
        distances: cfg.lattice.distances.clone(),
        rounds: cfg.lattice.rounds,
        seam_axis: cfg.grid.p_seam.expect("validated"),
        shots: cfg.run.shots,
        seed: cfg.run.seed,
        bootstrap: cfg.run.bootstrap,
    };
    let result = two_seam_experiment(&tc, &resume)?;
    rows.extend(result.sweeps.iter().cloned());
    emit_rows(cfg, &rows, out)?;
    emit_summary(
        cfg,
        to_json(&TwoSeamSummary {
            p_bulk,
            p_bulk_star,
            result: &result,
        })?,
        out,
    )
}

fn run_oracle(cfg: &RunConfig, out: &mut String) -> Result<(), CliError> {
    let report = if cfg.lattice.distances.is_empty() {
        certify(cfg.run.shots, cfg.run.seed)?
    } else {
        let seam = match cfg.lattice.seams {
            0 => false,
            1 => true,
            _ => {
                return Err(CliError::Invalid(ConfigError {
                    field: "lattice.seams".into(),
                    reason: "oracle checks take 0 or 1 seam".into(),
                }))
            }
        };
        let cases = cfg
            .lattice
            .distances
            .iter()
            .map(|&distance| {
                let case = CertificationCase {
                    distance,
                    rounds: cfg.lattice.rounds.unwrap_or(distance),
                    seam,
                    p_bulk: cfg.noise.p_bulk,
                    p_seam: cfg.noise.p_seam,
                };
                certify_case(case, cfg.run.shots, cfg.run.seed)
            })
            .collect::<Result<Vec<_>, _>>()?;
        CertificationReport {
            cases,
            walks: walk_reports()?,
            series_gap: series_gap(),
            propagation: verify_propagation(),
        }
    };
    if let Some(path) = &cfg.run.output {
        write_atomic(&json_path(path), to_json(&report)?.as_bytes()).map_err(failed)?;
    }
    for line in report.lines() {
        out.push_str(&line);
        out.push('\n');
    }
    let passed = report.graphs_passed() && report.series_passed() && report.propagation;
    *out += &format!(
        "summary graphs={} walks={} series={} propagation={}\n",
        report.graphs_passed(),
        report.walks_passed(),
        report.series_passed(),
        report.propagation
    );
    if passed {
        Ok(())
    } else {
        let failing = report.cases.iter().filter(|c| !c.passed()).count();
        Err(CliError::Failed(format!(
            "certification failed on {failing} graphs"
        )))
    }
}
