//! Parameter grids, sweeps and their CSV form.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Instant;

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_with::{DeserializeFromStr, SerializeDisplay};

use super::estimate::{estimate_weighted, point_seed, FailureEstimate};
use super::ExperimentError;
use crate::lattice::{build_graph, LatticeSpec};
use crate::noise::{assign_probabilities, NoiseParams};

/// Inclusive linear grid `start:stop:count`. Serializes in that string form.
#[derive(Debug, Clone, Copy, PartialEq, SerializeDisplay, DeserializeFromStr)]
pub struct GridAxis {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl GridAxis {
    pub fn new(start: f64, stop: f64, count: usize) -> Result<Self, ExperimentError> {
        let axis = Self { start, stop, count };
        axis.validate()?;
        Ok(axis)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let bad = |reason: &str| Err(ExperimentError::InvalidGrid(format!("{self}: {reason}")));
        if self.count == 0 {
            return bad("count must be at least 1");
        }
        if !(self.start.is_finite() && self.stop.is_finite()) {
            return bad("bounds must be finite");
        }
        if self.count == 1 && self.start != self.stop {
            return bad("a single point needs start == stop");
        }
        if self.stop < self.start {
            return bad("stop must not be below start");
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let step = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.stop
                } else {
                    self.start + step * i as f64
                }
            })
            .collect()
    }
}

impl fmt::Display for GridAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.start, self.stop, self.count)
    }
}

impl FromStr for GridAxis {
    type Err = ExperimentError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || ExperimentError::InvalidGrid(format!("expected start:stop:count, got {s:?}"));
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [single] => {
                let v: f64 = single.trim().parse().map_err(|_| bad())?;
                GridAxis::new(v, v, 1)
            }
            [a, b, n] => GridAxis::new(
                a.trim().parse().map_err(|_| bad())?,
                b.trim().parse().map_err(|_| bad())?,
                n.trim().parse().map_err(|_| bad())?,
            ),
            _ => Err(bad()),
        }
    }
}

/// Which noise parameter is swept and how the other follows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SweepMode {
    /// No seam; sweep `p_bulk`.
    BulkOnly,
    /// One seam, `p_bulk = 0`; sweep `p_seam`.
    SeamOnly,
    /// One seam with `p_seam = ratio * p_bulk`; sweep `p_bulk`.
    RatioLocked { ratio: f64 },
    /// One seam at fixed `p_bulk`; sweep `p_seam`.
    FixedBulk { p_bulk: f64 },
    /// Two seams `h` apart at fixed `p_bulk`; sweep `p_seam` on both.
    TwoSeam { h: usize, p_bulk: f64 },
}

impl SweepMode {
    pub fn name(&self) -> &'static str {
        match self {
            SweepMode::BulkOnly => "bulk-only",
            SweepMode::SeamOnly => "seam-only",
            SweepMode::RatioLocked { .. } => "ratio-locked",
            SweepMode::FixedBulk { .. } => "fixed-bulk",
            SweepMode::TwoSeam { .. } => "two-seam",
        }
    }

    pub fn sweeps_bulk(&self) -> bool {
        matches!(self, SweepMode::BulkOnly | SweepMode::RatioLocked { .. })
    }

    /// Value of the swept parameter at a noise setting.
    pub fn swept_value(&self, params: NoiseParams) -> f64 {
        if self.sweeps_bulk() {
            params.p_bulk
        } else {
            params.p_seam
        }
    }

    pub fn point(
        &self,
        distance: usize,
        rounds: usize,
        x: f64,
    ) -> Result<SweepPoint, ExperimentError> {
        let (spec, p_bulk, p_seam) = match *self {
            SweepMode::BulkOnly => (LatticeSpec::without_seam(distance, rounds)?, x, 0.0),
            SweepMode::SeamOnly => (LatticeSpec::single_seam(distance, rounds)?, 0.0, x),
            SweepMode::RatioLocked { ratio } => {
                (LatticeSpec::single_seam(distance, rounds)?, x, ratio * x)
            }
            SweepMode::FixedBulk { p_bulk } => {
                (LatticeSpec::single_seam(distance, rounds)?, p_bulk, x)
            }
            SweepMode::TwoSeam { h, p_bulk } => {
                (LatticeSpec::double_seam(distance, rounds, h)?, p_bulk, x)
            }
        };
        Ok(SweepPoint {
            spec,
            params: NoiseParams::new(p_bulk, p_seam)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub spec: LatticeSpec,
    pub params: NoiseParams,
}

/// Points for every distance and grid value. `rounds = None` means `T = L`.
pub fn grid_points(
    mode: SweepMode,
    distances: &[usize],
    rounds: Option<usize>,
    axis: &GridAxis,
) -> Result<Vec<SweepPoint>, ExperimentError> {
    axis.validate()?;
    let mut out = Vec::with_capacity(distances.len() * axis.count);
    for &l in distances {
        for x in axis.values() {
            out.push(mode.point(l, rounds.unwrap_or(l), x)?);
        }
    }
    Ok(out)
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "L")]
    pub l: usize,
    #[serde(rename = "T")]
    pub t: usize,
    pub p_bulk: f64,
    pub p_seam: f64,
    pub h: Option<usize>,
    pub shots: u64,
    pub failures: u64,
    pub p_fail: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    pub fingerprint: String,
}

impl SweepRow {
    pub fn new(point: &SweepPoint, est: &FailureEstimate) -> Self {
        Self {
            l: point.spec.distance(),
            t: point.spec.rounds(),
            p_bulk: point.params.p_bulk,
            p_seam: point.params.p_seam,
            h: point.spec.separation(),
            shots: est.shots,
            failures: est.failures,
            p_fail: est.p_fail,
            ci_low: est.ci_low,
            ci_high: est.ci_high,
            seed: est.seed,
            fingerprint: est.fingerprint.clone(),
        }
    }

    pub fn estimate(&self) -> FailureEstimate {
        FailureEstimate::from_counts(
            self.failures,
            self.shots,
            self.seed,
            self.fingerprint.clone(),
        )
    }

    pub fn params(&self) -> NoiseParams {
        NoiseParams {
            p_bulk: self.p_bulk,
            p_seam: self.p_seam,
        }
    }
}

/// Estimates every point. Rows in `resume` with a matching fingerprint and
/// shot count are reused instead of recomputed.
pub fn sweep(
    points: &[SweepPoint],
    shots: u64,
    seed: u64,
    resume: &[SweepRow],
) -> Result<Vec<SweepRow>, ExperimentError> {
    let done = AtomicUsize::new(0);
    points
        .par_iter()
        .map(|point| {
            let s = point_seed(seed, &point.spec, point.params);
            let fp = super::estimate::fingerprint(&point.spec, point.params, s);
            if let Some(row) = resume
                .iter()
                .find(|r| r.fingerprint == fp && r.shots == shots)
            {
                done.fetch_add(1, Ordering::Relaxed);
                return Ok(row.clone());
            }
            let started = Instant::now();
            let weighted = assign_probabilities(&build_graph(&point.spec), point.params)?;
            let est = estimate_weighted(&weighted, shots, s)?;
            let secs = started.elapsed().as_secs_f64();
            info!(
                "point {}/{} L={} T={} p_bulk={} p_seam={}: {}/{} failed ({:.0} shots/s)",
                done.fetch_add(1, Ordering::Relaxed) + 1,
                points.len(),
                point.spec.distance(),
                point.spec.rounds(),
                point.params.p_bulk,
                point.params.p_seam,
                est.failures,
                shots,
                shots as f64 / secs.max(1e-9)
            );
            Ok(SweepRow::new(point, &est))
        })
        .collect()
}

pub fn to_csv(rows: &[SweepRow]) -> Result<String, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| ExperimentError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn from_csv(text: &str) -> Result<Vec<SweepRow>, ExperimentError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    r.deserialize()
        .map(|row| row.map_err(ExperimentError::from))
        .collect()
}

/// Writes via a temporary file in the same directory and renames it.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), ExperimentError> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    let mut tmp =
        tempfile::NamedTempFile::new_in(dir).map_err(|e| ExperimentError::Io(e.to_string()))?;
    tmp.write_all(contents)
        .map_err(|e| ExperimentError::Io(e.to_string()))?;
    tmp.persist(path)
        .map_err(|e| ExperimentError::Io(e.to_string()))?;
    Ok(())
}

/// Whether `p_fail` never drops along increasing swept value, allowing
/// overlapping confidence intervals.
pub fn monotone_within_ci(rows: &[SweepRow], mode: SweepMode) -> bool {
    let mut by_l: std::collections::BTreeMap<(usize, usize), Vec<&SweepRow>> = Default::default();
    for r in rows {
        by_l.entry((r.l, r.t)).or_default().push(r);
    }
    by_l.values_mut().all(|series| {
        series.sort_by(|a, b| {
            mode.swept_value(a.params())
                .total_cmp(&mode.swept_value(b.params()))
        });
        series
            .windows(2)
            .all(|w| w[1].p_fail >= w[0].p_fail || w[1].ci_high >= w[0].ci_low)
    })
}
