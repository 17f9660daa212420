//! The `seamsim` command line: flag parsing, config merging and dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub mod config;
mod execute;

pub use config::{Command, ConfigError, ModeName, RunConfig};
pub use execute::execute;

use crate::experiments::{ExperimentError, FitError, GridAxis};
use crate::oracle::OracleError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NO_CROSSING: i32 = 3;
pub const EXIT_BUDGET: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("kind=usage reason={0:?}")]
    Usage(String),
    #[error("kind=invalid field={} reason={:?}", .0.field, .0.reason)]
    Invalid(ConfigError),
    #[error("kind=no-crossing reason={0:?}")]
    NoCrossing(String),
    #[error("kind=budget reason={0:?}")]
    Budget(String),
    #[error("kind=failed reason={0:?}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Invalid(_) => EXIT_INVALID,
            CliError::NoCrossing(_) => EXIT_NO_CROSSING,
            CliError::Budget(_) => EXIT_BUDGET,
            CliError::Failed(_) => EXIT_FAILURE,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Invalid(e)
    }
}

impl From<FitError> for CliError {
    fn from(e: FitError) -> Self {
        match e {
            FitError::NoCrossing { .. } => CliError::NoCrossing(e.to_string()),
            FitError::TooFewSizes(_) | FitError::TooFewPoints(_) => {
                CliError::Invalid(ConfigError {
                    field: "grid".into(),
                    reason: e.to_string(),
                })
            }
            FitError::NotConverged(_) => CliError::Failed(e.to_string()),
        }
    }
}

impl From<ExperimentError> for CliError {
    fn from(e: ExperimentError) -> Self {
        match e {
            ExperimentError::Fit(f) => f.into(),
            ExperimentError::Lattice(_)
            | ExperimentError::Noise(_)
            | ExperimentError::InvalidGrid(_) => CliError::Invalid(ConfigError {
                field: "config".into(),
                reason: e.to_string(),
            }),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::BudgetExceeded { .. } => CliError::Budget(e.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "seamsim",
    version,
    about = "Surface-code seam noise: bounds, simulation and threshold campaigns"
)]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Print the resolved configuration as TOML and exit.
    #[arg(long, global = true)]
    pub print_config: bool,
    #[arg(long, global = true, env = "SEAMSIM_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub shots: Option<u64>,
    /// CSV output path; fit summaries go next to it as `.json`.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Sub>,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Evaluate the analytical failure bounds on a grid of p_b.
    Bounds(BoundsArgs),
    /// Estimate the failure rate at one noise point.
    Simulate(LatticeArgs),
    /// Estimate the failure rate over a grid.
    Sweep(SweepArgs),
    /// Sweep and fit the crossing of the failure curves.
    Threshold(SweepArgs),
    /// Measure the (p_bulk, p_seam) threshold frontier.
    Frontier(FrontierArgs),
    /// Seam threshold against the separation of two seams.
    TwoSeam(TwoSeamArgs),
    /// Check the simulator and decoder against brute-force references.
    OracleVerify(LatticeArgs),
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long = "Ds")]
    pub ds: Option<u32>,
    #[arg(long = "Db")]
    pub db: Option<u32>,
    #[arg(long = "L")]
    pub distance: Option<usize>,
    /// Grid of p_b values, `start:stop:count`.
    #[arg(long = "p-b")]
    pub p_b: Option<GridAxis>,
    #[arg(long)]
    pub h: Option<usize>,
    #[arg(long = "mu-2c")]
    pub mu_2c: Option<u64>,
    #[arg(long = "p-s-star")]
    pub p_s_star: Option<f64>,
    #[arg(long = "p-b-star")]
    pub p_b_star: Option<f64>,
    #[arg(long = "alpha-c")]
    pub alpha_c: Option<f64>,
    #[arg(long = "alpha-2c")]
    pub alpha_2c: Option<f64>,
}

#[derive(Debug, Args)]
pub struct LatticeArgs {
    #[arg(long = "L", value_delimiter = ',')]
    pub distances: Vec<usize>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long = "p-bulk")]
    pub p_bulk: Option<f64>,
    #[arg(long = "p-seam")]
    pub p_seam: Option<f64>,
    /// Number of seams: 0, 1 or 2.
    #[arg(long)]
    pub seams: Option<usize>,
    /// Seam separation when there are two seams.
    #[arg(long)]
    pub h: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long = "Ls", value_delimiter = ',')]
    pub distances: Vec<usize>,
    #[arg(long)]
    pub rounds: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<ModeName>,
    #[arg(long = "ratio-lock")]
    pub ratio_lock: Option<f64>,
    /// A grid sweeps p_bulk; a single value fixes it.
    #[arg(long = "p-bulk")]
    pub p_bulk: Option<GridAxis>,
    /// A grid sweeps p_seam; a single value fixes it.
    #[arg(long = "p-seam")]
    pub p_seam: Option<GridAxis>,
    #[arg(long)]
    pub seams: Option<usize>,
    #[arg(long)]
    pub h: Option<usize>,
    #[arg(long)]
    pub bootstrap: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FrontierArgs {
    #[arg(long = "Ls", value_delimiter = ',')]
    pub distances: Vec<usize>,
    #[arg(long)]
    pub rounds: Option<usize>,
    /// Bulk-only grid.
    #[arg(long = "p-bulk")]
    pub p_bulk: Option<GridAxis>,
    /// Seam-only grid.
    #[arg(long = "p-seam")]
    pub p_seam: Option<GridAxis>,
    /// Slice positions as fractions of the measured bulk threshold.
    #[arg(long, value_delimiter = ',')]
    pub slices: Vec<f64>,
    /// Seam grid on the slices.
    #[arg(long = "slice-p-seam")]
    pub slice_p_seam: Option<GridAxis>,
    #[arg(long)]
    pub bootstrap: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TwoSeamArgs {
    /// Seam separations, each at least 2.
    #[arg(long, value_delimiter = ',')]
    pub h: Vec<usize>,
    #[arg(long = "Ls", value_delimiter = ',')]
    pub distances: Vec<usize>,
    #[arg(long)]
    pub rounds: Option<usize>,
    /// A single value fixes p_bulk; a grid measures the bulk threshold.
    #[arg(long = "p-bulk")]
    pub p_bulk: Option<GridAxis>,
    #[arg(long = "p-seam")]
    pub p_seam: Option<GridAxis>,
    #[arg(long = "p-bulk-star")]
    pub p_bulk_star: Option<f64>,
    /// Fixed p_bulk as a fraction of the bulk threshold.
    #[arg(long = "bulk-fraction")]
    pub bulk_fraction: Option<f64>,
    #[arg(long)]
    pub bootstrap: Option<usize>,
}

/// A single value sets the fixed noise, a grid sets the swept axis.
fn apply_axis(axis: Option<GridAxis>, fixed: &mut f64, grid: &mut Option<GridAxis>) {
    match axis {
        Some(a) if a.count == 1 => *fixed = a.start,
        Some(a) => *grid = Some(a),
        None => {}
    }
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn set_vec<T>(slot: &mut Vec<T>, value: Vec<T>) {
    if !value.is_empty() {
        *slot = value;
    }
}

impl Cli {
    fn subcommand_name(&self) -> Option<Command> {
        Some(match self.command.as_ref()? {
            Sub::Bounds(_) => Command::Bounds,
            Sub::Simulate(_) => Command::Simulate,
            Sub::Sweep(_) => Command::Sweep,
            Sub::Threshold(_) => Command::Threshold,
            Sub::Frontier(_) => Command::Frontier,
            Sub::TwoSeam(_) => Command::TwoSeam,
            Sub::OracleVerify(_) => Command::OracleVerify,
        })
    }

    /// Layers the flags over `base`.
    fn apply(self, mut cfg: RunConfig) -> RunConfig {
        if let Some(c) = self.subcommand_name() {
            cfg.command = c;
        }
        let run = &mut cfg.run;
        if self.workers.is_some() {
            run.workers = self.workers;
        }
        set(&mut run.seed, self.seed);
        set(&mut run.shots, self.shots);
        if self.output.is_some() {
            run.output = self.output;
        }
        let (lat, noise, grid) = (&mut cfg.lattice, &mut cfg.noise, &mut cfg.grid);
        match self.command {
            None => {}
            Some(Sub::Bounds(a)) => {
                let b = &mut cfg.bounds;
                set(&mut b.ds, a.ds);
                set(&mut b.db, a.db);
                set(&mut b.distance, a.distance);
                set(&mut b.h, a.h);
                set(&mut b.mu_2c, a.mu_2c);
                if a.p_b.is_some() {
                    b.p_b = a.p_b;
                }
                b.p_s_star = a.p_s_star.or(b.p_s_star);
                b.p_b_star = a.p_b_star.or(b.p_b_star);
                b.alpha_c = a.alpha_c.or(b.alpha_c);
                b.alpha_2c = a.alpha_2c.or(b.alpha_2c);
            }
            Some(Sub::Simulate(a)) | Some(Sub::OracleVerify(a)) => {
                set_vec(&mut lat.distances, a.distances);
                lat.rounds = a.rounds.or(lat.rounds);
                set(&mut noise.p_bulk, a.p_bulk);
                set(&mut noise.p_seam, a.p_seam);
                set(&mut lat.seams, a.seams);
                if let Some(h) = a.h {
                    lat.separations = vec![h];
                }
            }
            Some(Sub::Sweep(a)) | Some(Sub::Threshold(a)) => {
                set_vec(&mut lat.distances, a.distances);
                lat.rounds = a.rounds.or(lat.rounds);
                grid.mode = a.mode.or(grid.mode);
                grid.ratio_lock = a.ratio_lock.or(grid.ratio_lock);
                apply_axis(a.p_bulk, &mut noise.p_bulk, &mut grid.p_bulk);
                apply_axis(a.p_seam, &mut noise.p_seam, &mut grid.p_seam);
                set(&mut lat.seams, a.seams);
                if let Some(h) = a.h {
                    lat.separations = vec![h];
                    if a.seams.is_none() {
                        lat.seams = 2;
                    }
                }
                set(&mut cfg.run.bootstrap, a.bootstrap);
            }
            Some(Sub::Frontier(a)) => {
                set_vec(&mut lat.distances, a.distances);
                lat.rounds = a.rounds.or(lat.rounds);
                grid.p_bulk = a.p_bulk.or(grid.p_bulk);
                grid.p_seam = a.p_seam.or(grid.p_seam);
                set_vec(&mut grid.slice_fractions, a.slices);
                grid.slice_p_seam = a.slice_p_seam.or(grid.slice_p_seam);
                set(&mut cfg.run.bootstrap, a.bootstrap);
            }
            Some(Sub::TwoSeam(a)) => {
                set_vec(&mut lat.separations, a.h);
                set_vec(&mut lat.distances, a.distances);
                lat.rounds = a.rounds.or(lat.rounds);
                apply_axis(a.p_bulk, &mut noise.p_bulk, &mut grid.p_bulk);
                grid.p_seam = a.p_seam.or(grid.p_seam);
                grid.p_bulk_star = a.p_bulk_star.or(grid.p_bulk_star);
                grid.bulk_fraction = a.bulk_fraction.or(grid.bulk_fraction);
                set(&mut cfg.run.bootstrap, a.bootstrap);
            }
        }
        cfg
    }
}

/// What the command line asked for once parsed.
#[derive(Debug, Clone, PartialEq)]
pub enum Parsed {
    Run(RunConfig),
    PrintConfig(RunConfig),
    /// Help or version text.
    Info(String),
}

/// Parses flags, layers them over the config file (if any), fills defaults
/// and validates.
pub fn parse_and_validate<I, T>(argv: I) -> Result<Parsed, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp
                | ErrorKind::DisplayVersion
                | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    Ok(Parsed::Info(e.to_string()))
                }
                _ => {
                    let line = e
                        .to_string()
                        .lines()
                        .next()
                        .unwrap_or("")
                        .trim_start_matches("error: ")
                        .to_string();
                    Err(CliError::Usage(line))
                }
            };
        }
    };
    let base = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                CliError::Invalid(ConfigError {
                    field: "config".into(),
                    reason: format!("{}: {e}", path.display()),
                })
            })?;
            RunConfig::from_toml(&text)?
        }
        None => {
            let command = cli
                .subcommand_name()
                .ok_or_else(|| CliError::Usage("no subcommand and no --config".into()))?;
            RunConfig::new(command)
        }
    };
    let print = cli.print_config;
    let mut cfg = cli.apply(base);
    cfg.resolve();
    cfg.validate()?;
    Ok(if print {
        Parsed::PrintConfig(cfg)
    } else {
        Parsed::Run(cfg)
    })
}

/// Full command-line entry point. Errors are written to `stderr` as one line.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let result = parse_and_validate(argv).and_then(|parsed| match parsed {
        Parsed::Info(text) => write!(stdout, "{text}").map_err(|e| CliError::Failed(e.to_string())),
        Parsed::PrintConfig(cfg) => {
            write!(stdout, "{}", cfg.to_toml()).map_err(|e| CliError::Failed(e.to_string()))
        }
        Parsed::Run(cfg) => execute(&cfg, stdout),
    });
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "seamsim: error {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &str) -> Result<Parsed, CliError> {
        parse_and_validate(std::iter::once("seamsim").chain(args.split_whitespace()))
    }

    #[test]
    fn simulate_example_is_valid() {
        let Parsed::Run(cfg) = parse(
            "simulate --L 8 --rounds 8 --p-bulk 0.006 --p-seam 0.084 --shots 100000 --seed 7",
        )
        .unwrap() else {
            panic!()
        };
        assert_eq!(cfg.command, Command::Simulate);
        assert_eq!(
            (cfg.lattice.distances.clone(), cfg.lattice.rounds),
            (vec![8], Some(8))
        );
        assert_eq!((cfg.noise.p_bulk, cfg.noise.p_seam), (0.006, 0.084));
        assert_eq!((cfg.run.shots, cfg.run.seed), (100_000, 7));
    }

    #[test]
    fn separation_one_is_rejected() {
        let err = parse("two-seam --h 1 --p-bulk 0.004 --p-seam 0.06:0.13:8 --p-bulk-star 0.008")
            .unwrap_err();
        assert_eq!(err.exit_code(), EXIT_INVALID);
        assert!(
            err.to_string().contains("field=lattice.separations"),
            "{err}"
        );
    }

    #[test]
    fn ratio_lock_sweep_grid() {
        let Parsed::Run(cfg) =
            parse("sweep --ratio-lock 14 --p-bulk 0.004:0.010:7 --Ls 4,6").unwrap()
        else {
            panic!()
        };
        let (mode, axis) = cfg.sweep_mode().unwrap();
        let points =
            crate::experiments::grid_points(mode, &cfg.lattice.distances, None, &axis).unwrap();
        assert_eq!(points.len(), 14);
        for p in points {
            assert!((p.params.p_seam - 14.0 * p.params.p_bulk).abs() < 1e-15);
        }
    }

    #[test]
    fn unknown_flag_is_one_line_usage_error() {
        let err = parse("sweep --frobnicate 3").unwrap_err();
        assert_eq!(err.exit_code(), EXIT_INVALID);
        assert!(!err.to_string().contains('\n'));
        assert!(err.to_string().contains("frobnicate"));
    }

    #[test]
    fn type_mismatch_is_rejected() {
        let err = parse("simulate --L eight").unwrap_err();
        assert_eq!(err.exit_code(), EXIT_INVALID);
    }
}
