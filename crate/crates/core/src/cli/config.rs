//! Run configuration and its TOML form.

use std::collections::BTreeSet;
use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::bounds::{connectivity_constants, Overrides, DEFAULT_MU_2C};
use crate::experiments::fit::{MIN_FIT_POINTS, MIN_FIT_SIZES};
use crate::experiments::{grid_points, GridAxis, SweepMode};
use crate::lattice::LatticeSpec;
use crate::noise::NoiseParams;

/// Distances used when a campaign names none.
pub const DEFAULT_DISTANCES: [usize; 3] = [4, 6, 8];
/// Seam separations used by `two-seam` when none are given.
pub const DEFAULT_SEPARATIONS: [usize; 4] = [2, 3, 4, 5];
pub const DEFAULT_SHOTS: u64 = 10_000;
pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Bounds,
    Simulate,
    Sweep,
    Threshold,
    Frontier,
    TwoSeam,
    OracleVerify,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Command::Bounds => "bounds",
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Threshold => "threshold",
            Command::Frontier => "frontier",
            Command::TwoSeam => "two-seam",
            Command::OracleVerify => "oracle-verify",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModeName {
    BulkOnly,
    SeamOnly,
    RatioLocked,
    FixedBulk,
    TwoSeam,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LatticeConfig {
    /// Code distances; empty means the command's default.
    pub distances: Vec<usize>,
    /// Noisy rounds; `None` means `T = L`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rounds: Option<usize>,
    /// Number of seams: 0, 1 or 2.
    pub seams: usize,
    /// Seam separations for two-seam runs.
    pub separations: Vec<usize>,
}

impl Default for LatticeConfig {
    fn default() -> Self {
        Self {
            distances: Vec::new(),
            rounds: None,
            seams: 1,
            separations: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub p_bulk: f64,
    pub p_seam: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeName>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_bulk: Option<GridAxis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_seam: Option<GridAxis>,
    /// `p_seam = ratio_lock * p_bulk`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ratio_lock: Option<f64>,
    /// Frontier slices as fractions of the measured bulk threshold.
    pub slice_fractions: Vec<f64>,
    /// Seam grid on frontier slices; defaults to `p_seam`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slice_p_seam: Option<GridAxis>,
    /// Known bulk threshold; measured from `p_bulk` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_bulk_star: Option<f64>,
    /// Two-seam bulk noise as a fraction of the bulk threshold.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bulk_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BoundsConfig {
    pub ds: u32,
    pub db: u32,
    pub distance: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_b: Option<GridAxis>,
    pub h: usize,
    pub mu_2c: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_s_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_b_star: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha_2c: Option<f64>,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            ds: 2,
            db: 3,
            distance: 20,
            p_b: None,
            h: 2,
            mu_2c: DEFAULT_MU_2C,
            p_s_star: None,
            p_b_star: None,
            alpha_c: None,
            alpha_2c: None,
        }
    }
}

impl BoundsConfig {
    pub fn overrides(&self) -> Overrides {
        Overrides {
            p_s_star: self.p_s_star,
            p_b_star: self.p_b_star,
            alpha_c: self.alpha_c,
            alpha_2c: self.alpha_2c,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub shots: u64,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    pub bootstrap: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            shots: DEFAULT_SHOTS,
            seed: DEFAULT_SEED,
            workers: None,
            output: None,
            bootstrap: crate::experiments::fit::DEFAULT_BOOTSTRAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    #[serde(default)]
    pub lattice: LatticeConfig,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub bounds: BoundsConfig,
    #[serde(default)]
    pub run: RunSection,
}

/// A rejected configuration value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub field: String,
    pub reason: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.field, self.reason)
    }
}

fn invalid(field: &str, reason: impl fmt::Display) -> ConfigError {
    ConfigError {
        field: field.to_string(),
        reason: reason.to_string(),
    }
}

/// Rejects campaigns too small for a threshold fit.
fn check_fit_shape(
    distances: &[usize],
    axis: GridAxis,
    axis_field: &str,
) -> Result<(), ConfigError> {
    let sizes: BTreeSet<usize> = distances.iter().copied().collect();
    if sizes.len() < MIN_FIT_SIZES {
        return Err(invalid(
            "lattice.distances",
            format!(
                "a threshold fit needs {MIN_FIT_SIZES} distinct distances, got {}",
                sizes.len()
            ),
        ));
    }
    if axis.count < MIN_FIT_POINTS {
        return Err(invalid(
            axis_field,
            format!(
                "a threshold fit needs {MIN_FIT_POINTS} grid points, got {}",
                axis.count
            ),
        ));
    }
    Ok(())
}

impl RunConfig {
    pub fn new(command: Command) -> Self {
        Self {
            command,
            lattice: LatticeConfig::default(),
            noise: NoiseConfig::default(),
            grid: GridConfig::default(),
            bounds: BoundsConfig::default(),
            run: RunSection::default(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| invalid("config", e.message().replace('\n', " ")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Fills the command-dependent defaults so the echoed config is complete.
    pub fn resolve(&mut self) {
        let campaign = matches!(
            self.command,
            Command::Sweep | Command::Threshold | Command::Frontier | Command::TwoSeam
        );
        if campaign && self.lattice.distances.is_empty() {
            self.lattice.distances = DEFAULT_DISTANCES.to_vec();
        }
        if self.command == Command::TwoSeam && self.lattice.separations.is_empty() {
            self.lattice.separations = DEFAULT_SEPARATIONS.to_vec();
        }
        if self.command == Command::Frontier && self.grid.slice_fractions.is_empty() {
            self.grid.slice_fractions = vec![0.25, 0.5, 0.75];
        }
        if self.command == Command::Frontier && self.grid.slice_p_seam.is_none() {
            self.grid.slice_p_seam = self.grid.p_seam;
        }
        if matches!(self.command, Command::Sweep | Command::Threshold) && self.grid.mode.is_none() {
            self.grid.mode = self.inferred_mode();
        }
    }

    fn inferred_mode(&self) -> Option<ModeName> {
        if self.grid.ratio_lock.is_some() {
            return Some(ModeName::RatioLocked);
        }
        match (
            self.lattice.seams,
            self.grid.p_bulk.is_some(),
            self.grid.p_seam.is_some(),
        ) {
            (0, _, _) => Some(ModeName::BulkOnly),
            (2, _, true) => Some(ModeName::TwoSeam),
            (1, false, true) if self.noise.p_bulk == 0.0 => Some(ModeName::SeamOnly),
            (1, false, true) => Some(ModeName::FixedBulk),
            _ => None,
        }
    }

    /// Lattice for a single-point command.
    pub fn lattice_spec(&self, distance: usize) -> Result<LatticeSpec, ConfigError> {
        let rounds = self.lattice.rounds.unwrap_or(distance);
        let spec = match self.lattice.seams {
            0 => LatticeSpec::without_seam(distance, rounds),
            1 => LatticeSpec::single_seam(distance, rounds),
            2 => {
                let h = match self.lattice.separations.as_slice() {
                    [h] => *h,
                    _ => {
                        return Err(invalid(
                            "lattice.separations",
                            "two seams need exactly one separation",
                        ))
                    }
                };
                if h < 2 {
                    return Err(invalid(
                        "lattice.separations",
                        format!("h = {h} must be at least 2"),
                    ));
                }
                LatticeSpec::double_seam(distance, rounds, h)
            }
            n => {
                return Err(invalid(
                    "lattice.seams",
                    format!("{n} seams; expected 0, 1 or 2"),
                ))
            }
        };
        spec.map_err(|e| invalid("lattice", e))
    }

    pub fn noise_params(&self) -> Result<NoiseParams, ConfigError> {
        NoiseParams::new(self.noise.p_bulk, self.noise.p_seam).map_err(|e| {
            let field = if (0.0..0.5).contains(&self.noise.p_bulk) {
                "noise.p_seam"
            } else {
                "noise.p_bulk"
            };
            invalid(field, e)
        })
    }

    /// Sweep mode and swept axis of a `sweep` or `threshold` run.
    pub fn sweep_mode(&self) -> Result<(SweepMode, GridAxis), ConfigError> {
        let mode = self.grid.mode.ok_or_else(|| {
            invalid(
                "grid.mode",
                "cannot infer a mode; pass --mode or a single p_bulk/p_seam grid",
            )
        })?;
        let bulk_axis = || {
            self.grid
                .p_bulk
                .ok_or_else(|| invalid("grid.p_bulk", "a p_bulk grid is required"))
        };
        let seam_axis = || {
            self.grid
                .p_seam
                .ok_or_else(|| invalid("grid.p_seam", "a p_seam grid is required"))
        };
        Ok(match mode {
            ModeName::BulkOnly => (SweepMode::BulkOnly, bulk_axis()?),
            ModeName::SeamOnly => (SweepMode::SeamOnly, seam_axis()?),
            ModeName::RatioLocked => {
                let ratio = self
                    .grid
                    .ratio_lock
                    .ok_or_else(|| invalid("grid.ratio_lock", "ratio-locked mode needs a ratio"))?;
                if !(ratio.is_finite() && ratio >= 0.0) {
                    return Err(invalid(
                        "grid.ratio_lock",
                        format!("{ratio} must be finite and non-negative"),
                    ));
                }
                (SweepMode::RatioLocked { ratio }, bulk_axis()?)
            }
            ModeName::FixedBulk => (
                SweepMode::FixedBulk {
                    p_bulk: self.noise.p_bulk,
                },
                seam_axis()?,
            ),
            ModeName::TwoSeam => {
                let h = match self.lattice.separations.as_slice() {
                    [h] => *h,
                    _ => {
                        return Err(invalid(
                            "lattice.separations",
                            "two-seam sweeps need exactly one separation",
                        ))
                    }
                };
                if h < 2 {
                    return Err(invalid(
                        "lattice.separations",
                        format!("h = {h} must be at least 2"),
                    ));
                }
                (
                    SweepMode::TwoSeam {
                        h,
                        p_bulk: self.noise.p_bulk,
                    },
                    seam_axis()?,
                )
            }
        })
    }

    fn check_grid(field: &str, axis: Option<GridAxis>) -> Result<(), ConfigError> {
        if let Some(a) = axis {
            a.validate().map_err(|e| invalid(field, e))?;
            if !(a.start >= 0.0 && a.stop < 0.5) {
                return Err(invalid(field, format!("{a} must lie in [0, 0.5)")));
            }
        }
        Ok(())
    }

    /// Checks every precondition the command will rely on.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let run = &self.run;
        if run.workers == Some(0) {
            return Err(invalid("run.workers", "must be at least 1"));
        }
        // Config files store integers as i64.
        if run.seed > i64::MAX as u64 {
            return Err(invalid("run.seed", "must not exceed 9223372036854775807"));
        }
        if run.shots > i64::MAX as u64 {
            return Err(invalid("run.shots", "must not exceed 9223372036854775807"));
        }
        if self.command != Command::Bounds && run.shots == 0 {
            return Err(invalid("run.shots", "must be at least 1"));
        }
        if matches!(
            self.command,
            Command::Threshold | Command::Frontier | Command::TwoSeam
        ) && run.bootstrap == 0
        {
            return Err(invalid("run.bootstrap", "must be at least 1"));
        }
        Self::check_grid("grid.p_bulk", self.grid.p_bulk)?;
        Self::check_grid("grid.p_seam", self.grid.p_seam)?;
        Self::check_grid("grid.slice_p_seam", self.grid.slice_p_seam)?;
        let distances = &self.lattice.distances;
        match self.command {
            Command::Bounds => {
                let b = &self.bounds;
                connectivity_constants(b.ds, b.db).map_err(|e| invalid("bounds.ds", e))?;
                if b.distance == 0 {
                    return Err(invalid("bounds.distance", "must be at least 1"));
                }
                if b.h < 2 {
                    return Err(invalid(
                        "bounds.h",
                        format!("h = {} must be at least 2", b.h),
                    ));
                }
                if b.mu_2c == 0 {
                    return Err(invalid("bounds.mu_2c", "must be positive"));
                }
                for (field, v) in [
                    ("bounds.p_s_star", b.p_s_star),
                    ("bounds.p_b_star", b.p_b_star),
                    ("bounds.alpha_c", b.alpha_c),
                    ("bounds.alpha_2c", b.alpha_2c),
                ] {
                    if v.is_some_and(|v| !(v.is_finite() && v > 0.0)) {
                        return Err(invalid(field, "must be positive and finite"));
                    }
                }
                let axis = b
                    .p_b
                    .ok_or_else(|| invalid("bounds.p_b", "a p_b grid is required"))?;
                axis.validate().map_err(|e| invalid("bounds.p_b", e))?;
                if axis.start < 0.0 || axis.stop >= 0.5 {
                    return Err(invalid(
                        "bounds.p_b",
                        format!("{axis} must lie in [0, 0.5)"),
                    ));
                }
            }
            Command::Simulate => {
                let [d] = distances.as_slice() else {
                    return Err(invalid(
                        "lattice.distances",
                        "simulate needs exactly one distance",
                    ));
                };
                self.lattice_spec(*d)?;
                self.noise_params()?;
            }
            Command::Sweep | Command::Threshold => {
                let (mode, axis) = self.sweep_mode()?;
                self.noise_params()?;
                if distances.is_empty() {
                    return Err(invalid(
                        "lattice.distances",
                        "at least one distance is required",
                    ));
                }
                if self.command == Command::Threshold {
                    let field = if mode.sweeps_bulk() {
                        "grid.p_bulk"
                    } else {
                        "grid.p_seam"
                    };
                    check_fit_shape(distances, axis, field)?;
                }
                grid_points(mode, distances, self.lattice.rounds, &axis)
                    .map_err(|e| invalid("grid", e))?;
            }
            Command::Frontier => {
                let bulk = self
                    .grid
                    .p_bulk
                    .ok_or_else(|| invalid("grid.p_bulk", "a p_bulk grid is required"))?;
                let seam = self
                    .grid
                    .p_seam
                    .ok_or_else(|| invalid("grid.p_seam", "a p_seam grid is required"))?;
                check_fit_shape(distances, bulk, "grid.p_bulk")?;
                check_fit_shape(distances, seam, "grid.p_seam")?;
                grid_points(SweepMode::BulkOnly, distances, self.lattice.rounds, &bulk)
                    .map_err(|e| invalid("grid.p_bulk", e))?;
                grid_points(SweepMode::SeamOnly, distances, self.lattice.rounds, &seam)
                    .map_err(|e| invalid("grid.p_seam", e))?;
                let slice = self.grid.slice_p_seam.ok_or_else(|| {
                    invalid("grid.slice_p_seam", "a slice p_seam grid is required")
                })?;
                check_fit_shape(distances, slice, "grid.slice_p_seam")?;
                if self
                    .grid
                    .slice_fractions
                    .iter()
                    .any(|f| !(*f > 0.0 && *f < 1.0))
                {
                    return Err(invalid(
                        "grid.slice_fractions",
                        "fractions must lie in (0, 1)",
                    ));
                }
            }
            Command::TwoSeam => {
                let seps = &self.lattice.separations;
                if seps.is_empty() {
                    return Err(invalid(
                        "lattice.separations",
                        "at least one separation is required",
                    ));
                }
                for &h in seps {
                    if h < 2 {
                        return Err(invalid(
                            "lattice.separations",
                            format!("h = {h} must be at least 2"),
                        ));
                    }
                    for &d in distances {
                        LatticeSpec::double_seam(d, self.lattice.rounds.unwrap_or(d), h)
                            .map_err(|e| invalid("lattice.separations", e))?;
                    }
                }
                let seam = self
                    .grid
                    .p_seam
                    .ok_or_else(|| invalid("grid.p_seam", "a p_seam grid is required"))?;
                check_fit_shape(distances, seam, "grid.p_seam")?;
                match (self.grid.p_bulk_star, self.grid.p_bulk) {
                    (None, None) => {
                        return Err(invalid(
                            "grid.p_bulk_star",
                            "give p_bulk_star or a p_bulk grid to measure it",
                        ))
                    }
                    (None, Some(bulk)) => check_fit_shape(distances, bulk, "grid.p_bulk")?,
                    _ => {}
                }
                if let Some(p) = self.grid.p_bulk_star {
                    if !(p > 0.0 && p < 0.5) {
                        return Err(invalid(
                            "grid.p_bulk_star",
                            format!("{p} must lie in (0, 0.5)"),
                        ));
                    }
                }
                if let Some(f) = self.grid.bulk_fraction {
                    if !(0.0..1.0).contains(&f) {
                        return Err(invalid(
                            "grid.bulk_fraction",
                            format!("{f} must lie in [0, 1)"),
                        ));
                    }
                } else {
                    self.noise_params()?;
                }
            }
            Command::OracleVerify => {
                for &d in distances {
                    self.lattice_spec(d)?;
                }
                if !distances.is_empty() {
                    self.noise_params()?;
                }
            }
        }
        Ok(())
    }
}
