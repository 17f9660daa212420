//! Threshold campaigns: single sweeps with a fit, the two-parameter
//! threshold frontier, and the two-seam separation study.

use argmin::core::{CostFunction, Executor};
use argmin::solver::brent::BrentOpt;
use serde::{Deserialize, Serialize};

use super::fit::{fit_points, fit_threshold, FitError, FitOptions, ThresholdFit};
use super::sweep::{grid_points, sweep, GridAxis, SweepMode, SweepRow};
use super::ExperimentError;
use crate::bounds::{
    connectivity_constants, sag_single_seam, sag_two_seam, BoundParams, Overrides,
};
use crate::noise::BULK_GATES_PER_QUBIT;

const Z_95: f64 = super::estimate::Z_95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Campaign {
    pub mode: SweepMode,
    pub distances: Vec<usize>,
    /// `None` means `T = L`.
    pub rounds: Option<usize>,
    pub axis: GridAxis,
    pub shots: u64,
    pub seed: u64,
    /// Bootstrap resamples for the threshold uncertainty.
    pub bootstrap: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CampaignResult {
    pub rows: Vec<SweepRow>,
    pub fit: Result<ThresholdFit, FitError>,
}

impl Campaign {
    pub fn run(&self, resume: &[SweepRow]) -> Result<CampaignResult, ExperimentError> {
        let points = grid_points(self.mode, &self.distances, self.rounds, &self.axis)?;
        let rows = sweep(&points, self.shots, self.seed, resume)?;
        let fit = fit_threshold(
            &fit_points(&rows, self.mode),
            FitOptions {
                seed: self.seed,
                bootstrap: self.bootstrap,
            },
        );
        Ok(CampaignResult { rows, fit })
    }
}

/// Minimises a one-dimensional function on `[lo, hi]`.
fn minimise_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    struct Wrap<F>(F);
    impl<F: Fn(f64) -> f64> CostFunction for Wrap<F> {
        type Param = f64;
        type Output = f64;
        fn cost(&self, p: &f64) -> Result<f64, argmin::core::Error> {
            Ok((self.0)(*p))
        }
    }
    let solver = BrentOpt::new(lo, hi).set_tolerance(1e-12, 1e-14);
    Executor::new(Wrap(&f), solver)
        .configure(|s| s.max_iters(500))
        .run()
        .ok()
        .and_then(|r| r.state().best_param)
        .unwrap_or(lo)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierConfig {
    pub distances: Vec<usize>,
    pub rounds: Option<usize>,
    pub shots: u64,
    pub seed: u64,
    pub bootstrap: usize,
    /// Bulk sweep without seam noise.
    pub bulk_axis: GridAxis,
    /// Seam sweep without bulk noise.
    pub seam_axis: GridAxis,
    /// Fixed-bulk slices at these fractions of the measured bulk threshold.
    pub slice_fractions: Vec<f64>,
    /// Seam sweep used on every slice.
    pub slice_axis: GridAxis,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierPoint {
    pub p_bulk: f64,
    pub p_seam: f64,
    /// Uncertainty of the fitted coordinate.
    pub sigma: f64,
    /// Which coordinate was fitted.
    pub fitted: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub p_bulk: f64,
    /// Sagged seam threshold with the effective corner constant.
    pub p_seam_effective: f64,
    /// Sagged seam threshold with the rigorous corner constant.
    pub p_seam_rigorous: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Frontier {
    pub points: Vec<FrontierPoint>,
    /// Slices whose fit failed, with the reason.
    pub omitted: Vec<(f64, String)>,
    pub p_bulk_star: f64,
    pub p_seam_star: f64,
    /// Smallest corner constant whose sagged curve lies on or below every
    /// interior frontier point.
    pub alpha_c_effective: f64,
    /// Weighted least-squares corner constant.
    pub alpha_c_least_squares: f64,
    pub monotone: bool,
    pub curve: Vec<CurvePoint>,
    #[serde(skip)]
    pub rows: Vec<SweepRow>,
}

/// Bound parameters with measured thresholds substituted, in units of
/// `p_b = 4 p_bulk` and `p_s = p_seam`.
pub fn measured_params(
    p_bulk_star: f64,
    p_seam_star: f64,
    alpha_c: Option<f64>,
    alpha_2c: Option<f64>,
) -> BoundParams {
    connectivity_constants(2, 3)
        .expect("valid dimensions")
        .with_overrides(Overrides {
            p_s_star: Some(p_seam_star),
            p_b_star: Some(BULK_GATES_PER_QUBIT * p_bulk_star),
            alpha_c,
            alpha_2c,
        })
}

/// Corner constant at which the sagged curve passes through `(p_bulk, p_seam)`.
fn alpha_through(p_bulk: f64, p_seam: f64, params: &BoundParams) -> Option<f64> {
    let p_b = BULK_GATES_PER_QUBIT * p_bulk;
    if p_b <= 0.0 || p_b >= params.p_b_star() || p_seam <= 0.0 {
        return None;
    }
    let k = p_b * params.p_s_star().sqrt() / (1.0 - (p_b / params.p_b_star()).sqrt());
    Some(((params.p_s_star() / p_seam).sqrt() - 1.0) / k)
}

fn sagged(p_bulk: f64, alpha: f64, p_bulk_star: f64, p_seam_star: f64) -> f64 {
    let params = measured_params(p_bulk_star, p_seam_star, Some(alpha), None);
    sag_single_seam(BULK_GATES_PER_QUBIT * p_bulk, &params).unwrap_or(0.0)
}

/// Whether consecutive points (sorted by `p_bulk`) never raise `p_seam`
/// beyond their combined 95% interval.
pub fn frontier_monotone(points: &[FrontierPoint]) -> bool {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a.p_bulk.total_cmp(&b.p_bulk));
    sorted.windows(2).all(|w| {
        let slack = Z_95 * (w[0].sigma.powi(2) + w[1].sigma.powi(2)).sqrt();
        w[1].p_seam <= w[0].p_seam + slack && w[1].p_bulk >= w[0].p_bulk
    })
}

/// Measures both single-parameter thresholds, then one seam threshold per
/// slice. Rows in `resume` are reused by fingerprint.
pub fn threshold_frontier(
    cfg: &FrontierConfig,
    resume: &[SweepRow],
) -> Result<Frontier, ExperimentError> {
    let campaign = |mode, axis: GridAxis| Campaign {
        mode,
        distances: cfg.distances.clone(),
        rounds: cfg.rounds,
        axis,
        shots: cfg.shots,
        seed: cfg.seed,
        bootstrap: cfg.bootstrap,
    };
    let bulk = campaign(SweepMode::BulkOnly, cfg.bulk_axis).run(resume)?;
    let seam = campaign(SweepMode::SeamOnly, cfg.seam_axis).run(resume)?;
    let bulk_fit = bulk.fit?;
    let seam_fit = seam.fit?;
    let mut rows = bulk.rows;
    rows.extend(seam.rows);

    let mut points = vec![
        FrontierPoint {
            p_bulk: 0.0,
            p_seam: seam_fit.p_c,
            sigma: seam_fit.sigma,
            fitted: "p_seam".into(),
        },
        FrontierPoint {
            p_bulk: bulk_fit.p_c,
            p_seam: 0.0,
            sigma: bulk_fit.sigma,
            fitted: "p_bulk".into(),
        },
    ];
    let mut omitted = Vec::new();
    for &frac in &cfg.slice_fractions {
        let p_bulk = frac * bulk_fit.p_c;
        let res = campaign(SweepMode::FixedBulk { p_bulk }, cfg.slice_axis).run(resume)?;
        rows.extend(res.rows);
        match res.fit {
            Ok(fit) => points.push(FrontierPoint {
                p_bulk,
                p_seam: fit.p_c,
                sigma: fit.sigma,
                fitted: "p_seam".into(),
            }),
            Err(e) => omitted.push((p_bulk, e.to_string())),
        }
    }
    points.sort_by(|a, b| a.p_bulk.total_cmp(&b.p_bulk));

    let (p_bulk_star, p_seam_star) = (bulk_fit.p_c, seam_fit.p_c);
    let params = measured_params(p_bulk_star, p_seam_star, None, None);
    let interior: Vec<&FrontierPoint> = points
        .iter()
        .filter(|p| alpha_through(p.p_bulk, p.p_seam, &params).is_some())
        .collect();
    let alpha_c_effective = interior
        .iter()
        .filter_map(|p| alpha_through(p.p_bulk, p.p_seam, &params))
        .fold(0.0f64, f64::max);
    let alpha_c_least_squares = minimise_1d(
        |alpha| {
            interior
                .iter()
                .map(|p| {
                    ((sagged(p.p_bulk, alpha, p_bulk_star, p_seam_star) - p.p_seam)
                        / p.sigma.max(1e-12))
                    .powi(2)
                })
                .sum()
        },
        0.0,
        params.alpha_c as f64,
    );
    let curve = (0..=40)
        .map(|i| {
            let p_bulk = p_bulk_star * i as f64 / 41.0;
            CurvePoint {
                p_bulk,
                p_seam_effective: sagged(p_bulk, alpha_c_effective, p_bulk_star, p_seam_star),
                p_seam_rigorous: sagged(p_bulk, params.alpha_c as f64, p_bulk_star, p_seam_star),
            }
        })
        .collect();
    Ok(Frontier {
        monotone: frontier_monotone(&points),
        points,
        omitted,
        p_bulk_star,
        p_seam_star,
        alpha_c_effective,
        alpha_c_least_squares,
        curve,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSeamConfig {
    pub separations: Vec<usize>,
    /// Bulk noise held fixed while the seams are swept.
    pub p_bulk: f64,
    /// Bulk threshold used to express `p_bulk` as a fraction.
    pub p_bulk_star: f64,
    pub distances: Vec<usize>,
    pub rounds: Option<usize>,
    pub seam_axis: GridAxis,
    pub shots: u64,
    pub seed: u64,
    pub bootstrap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSeamRow {
    pub h: usize,
    pub p_c: Option<f64>,
    pub sigma: Option<f64>,
    /// Sag predicted with the fitted hop constant.
    pub predicted: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSeamResult {
    pub rows: Vec<TwoSeamRow>,
    /// Single-seam threshold at the same bulk noise.
    pub single_seam: ThresholdFit,
    pub alpha_2c: f64,
    pub monotone: bool,
    pub largest_h_agrees: bool,
    #[serde(skip)]
    pub sweeps: Vec<SweepRow>,
}

/// Single-seam and two-seam thresholds at fixed bulk noise, and the hop
/// constant fitted to their sag. Rows in `resume` are reused by fingerprint.
pub fn two_seam_experiment(
    cfg: &TwoSeamConfig,
    resume: &[SweepRow],
) -> Result<TwoSeamResult, ExperimentError> {
    let campaign = |mode| Campaign {
        mode,
        distances: cfg.distances.clone(),
        rounds: cfg.rounds,
        axis: cfg.seam_axis,
        shots: cfg.shots,
        seed: cfg.seed,
        bootstrap: cfg.bootstrap,
    };
    let single = campaign(SweepMode::FixedBulk { p_bulk: cfg.p_bulk }).run(resume)?;
    let single_seam = single.fit?;
    let mut sweeps = single.rows;
    let mut rows = Vec::new();
    for &h in &cfg.separations {
        let res = campaign(SweepMode::TwoSeam {
            h,
            p_bulk: cfg.p_bulk,
        })
        .run(resume)?;
        sweeps.extend(res.rows);
        rows.push(match res.fit {
            Ok(fit) => TwoSeamRow {
                h,
                p_c: Some(fit.p_c),
                sigma: Some(fit.sigma),
                predicted: None,
                error: None,
            },
            Err(e) => TwoSeamRow {
                h,
                p_c: None,
                sigma: None,
                predicted: None,
                error: Some(e.to_string()),
            },
        });
    }

    let p_1s = single_seam.p_c;
    let p_b = BULK_GATES_PER_QUBIT * cfg.p_bulk;
    let predict = |h: usize, alpha: f64| {
        let params = measured_params(cfg.p_bulk_star, p_1s, None, Some(alpha));
        sag_two_seam(p_b, h, &params, p_1s).unwrap_or(0.0)
    };
    let alpha_2c = minimise_1d(
        |alpha| {
            rows.iter()
                .filter_map(|r| {
                    Some(((predict(r.h, alpha) - r.p_c?) / r.sigma?.max(1e-12)).powi(2))
                })
                .sum()
        },
        0.0,
        200.0,
    );
    for r in rows.iter_mut() {
        r.predicted = Some(predict(r.h, alpha_2c));
    }

    let fitted: Vec<(usize, f64, f64)> = rows
        .iter()
        .filter_map(|r| Some((r.h, r.p_c?, r.sigma?)))
        .collect();
    let monotone = fitted
        .windows(2)
        .all(|w| w[1].1 + Z_95 * (w[0].2.powi(2) + w[1].2.powi(2)).sqrt() >= w[0].1);
    let largest_h_agrees = fitted
        .iter()
        .max_by_key(|r| r.0)
        .is_some_and(|&(_, p_c, sigma)| {
            (p_c - p_1s).abs() <= Z_95 * (sigma.powi(2) + single_seam.sigma.powi(2)).sqrt()
        });
    Ok(TwoSeamResult {
        rows,
        single_seam,
        alpha_2c,
        monotone,
        largest_h_agrees,
        sweeps,
    })
}
