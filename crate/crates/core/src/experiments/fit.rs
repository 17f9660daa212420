//! Threshold extraction by a quadratic finite-size-scaling fit
//! `p_fail = A + B x + C x^2` with `x = (p - p_c) L^(1/nu)`.

use std::collections::BTreeMap;

use argmin::core::{CostFunction, Executor};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::sweep::{SweepMode, SweepRow};

/// Exponent used when the free fit is ill-conditioned.
pub const FALLBACK_NU: f64 = 1.5;
pub const DEFAULT_BOOTSTRAP: usize = 200;
/// Fewest distinct distances a fit accepts.
pub const MIN_FIT_SIZES: usize = 3;
/// Fewest distinct grid values a fit accepts.
pub const MIN_FIT_POINTS: usize = 5;
const NU_RANGE: (f64, f64) = (0.3, 5.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least 3 distinct distances, got {0}")]
    TooFewSizes(usize),
    #[error("need at least 5 distinct grid values, got {0}")]
    TooFewPoints(usize),
    #[error("failure curves of L = {small} and L = {large} do not cross inside the grid")]
    NoCrossing { small: usize, large: usize },
    #[error("fit did not converge: {0}")]
    NotConverged(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitPoint {
    #[serde(rename = "L")]
    pub l: usize,
    pub p: f64,
    pub shots: u64,
    pub failures: u64,
}

impl FitPoint {
    pub fn p_fail(&self) -> f64 {
        self.failures as f64 / self.shots as f64
    }

    /// Binomial variance of `p_fail`, kept away from zero.
    fn variance(&self) -> f64 {
        let n = self.shots as f64;
        let p = (self.failures as f64 + 1.0) / (n + 2.0);
        p * (1.0 - p) / n
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFit {
    pub p_c: f64,
    pub sigma: f64,
    pub nu: f64,
    pub nu_fixed: bool,
    /// `[A, B, C]`
    pub coefficients: [f64; 3],
    pub chi2: f64,
    pub dof: usize,
    pub points: Vec<FitPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub bootstrap: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            bootstrap: DEFAULT_BOOTSTRAP,
            seed: 0,
        }
    }
}

/// Fit points from sweep rows, using the swept variable of `mode` as `p`.
pub fn fit_points(rows: &[SweepRow], mode: SweepMode) -> Vec<FitPoint> {
    rows.iter()
        .map(|r| FitPoint {
            l: r.l,
            p: mode.swept_value(r.params()),
            shots: r.shots,
            failures: r.failures,
        })
        .collect()
}

/// Weighted least squares for `[A, B, C]` at fixed `(p_c, nu)`; returns
/// coefficients and chi-squared.
fn solve_quadratic(points: &[FitPoint], p_c: f64, nu: f64) -> Option<([f64; 3], f64)> {
    let mut m = Matrix3::<f64>::zeros();
    let mut rhs = Vector3::<f64>::zeros();
    let rows: Vec<(Vector3<f64>, f64, f64)> = points
        .iter()
        .map(|pt| {
            let x = (pt.p - p_c) * (pt.l as f64).powf(1.0 / nu);
            (
                Vector3::new(1.0, x, x * x),
                pt.p_fail(),
                1.0 / pt.variance(),
            )
        })
        .collect();
    for (phi, y, w) in &rows {
        m += phi * phi.transpose() * *w;
        rhs += phi * (*y * *w);
    }
    let coef = m.lu().solve(&rhs)?;
    let chi2 = rows
        .iter()
        .map(|(phi, y, w)| w * (y - phi.dot(&coef)).powi(2))
        .sum();
    Some(([coef[0], coef[1], coef[2]], chi2))
}

struct Chi2<'a> {
    points: &'a [FitPoint],
    hull: (f64, f64),
    fixed_nu: Option<f64>,
}

impl Chi2<'_> {
    fn unpack(&self, param: &[f64]) -> (f64, f64) {
        match self.fixed_nu {
            Some(nu) => (param[0], nu),
            None => (param[0], param[1].exp()),
        }
    }
}

impl CostFunction for Chi2<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, param: &Self::Param) -> Result<f64, argmin::core::Error> {
        let (p_c, nu) = self.unpack(param);
        if p_c < self.hull.0 || p_c > self.hull.1 || nu < NU_RANGE.0 || nu > NU_RANGE.1 {
            return Ok(f64::MAX);
        }
        Ok(solve_quadratic(self.points, p_c, nu).map_or(f64::MAX, |(_, chi2)| chi2))
    }
}

fn minimise(
    points: &[FitPoint],
    hull: (f64, f64),
    fixed_nu: Option<f64>,
    p_c0: f64,
    nu0: f64,
) -> Result<(f64, f64), FitError> {
    let span = hull.1 - hull.0;
    let simplex = match fixed_nu {
        Some(_) => vec![vec![p_c0], vec![p_c0 + 0.05 * span]],
        None => vec![
            vec![p_c0, nu0.ln()],
            vec![p_c0 + 0.05 * span, nu0.ln()],
            vec![p_c0, nu0.ln() + 0.3],
        ],
    };
    let solver = NelderMead::new(simplex)
        .with_sd_tolerance(1e-12)
        .map_err(|e| FitError::NotConverged(e.to_string()))?;
    let problem = Chi2 {
        points,
        hull,
        fixed_nu,
    };
    let result = Executor::new(problem, solver)
        .configure(|s| s.max_iters(2000))
        .run()
        .map_err(|e| FitError::NotConverged(e.to_string()))?;
    let best = result
        .state()
        .best_param
        .clone()
        .ok_or_else(|| FitError::NotConverged("no parameter".into()))?;
    let problem = Chi2 {
        points,
        hull,
        fixed_nu,
    };
    Ok(problem.unpack(&best))
}

/// Interpolated crossing of the smallest and largest distance curves.
fn crossing_guess(points: &[FitPoint]) -> Result<f64, FitError> {
    let mut by_l: BTreeMap<usize, BTreeMap<u64, f64>> = BTreeMap::new();
    for pt in points {
        by_l.entry(pt.l)
            .or_default()
            .insert(pt.p.to_bits(), pt.p_fail());
    }
    let (&small, small_curve) = by_l.iter().next().expect("non-empty");
    let (&large, large_curve) = by_l.iter().next_back().expect("non-empty");
    let mut diffs: Vec<(f64, f64)> = small_curve
        .iter()
        .filter_map(|(bits, ys)| {
            large_curve
                .get(bits)
                .map(|yl| (f64::from_bits(*bits), yl - ys))
        })
        .collect();
    diffs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut last_below: Option<(f64, f64)> = None;
    for &(p, d) in &diffs {
        if d < 0.0 {
            last_below = Some((p, d));
        } else if d > 0.0 {
            if let Some((p0, d0)) = last_below {
                return Ok(p0 + (p - p0) * (-d0) / (d - d0));
            }
        }
    }
    Err(FitError::NoCrossing { small, large })
}

struct Solution {
    p_c: f64,
    nu: f64,
    coefficients: [f64; 3],
    chi2: f64,
}

fn fit_once(
    points: &[FitPoint],
    hull: (f64, f64),
    fixed_nu: Option<f64>,
    p_c0: f64,
    nu0: f64,
) -> Result<Solution, FitError> {
    let (p_c, nu) = minimise(points, hull, fixed_nu, p_c0, nu0)?;
    let (coefficients, chi2) = solve_quadratic(points, p_c, nu)
        .ok_or_else(|| FitError::NotConverged("singular design".into()))?;
    Ok(Solution {
        p_c,
        nu,
        coefficients,
        chi2,
    })
}

fn ill_conditioned(sol: &Solution, hull: (f64, f64)) -> bool {
    let span = hull.1 - hull.0;
    let near_edge = |v: f64, lo: f64, hi: f64, tol: f64| v <= lo + tol || v >= hi - tol;
    !sol.chi2.is_finite()
        || near_edge(sol.p_c, hull.0, hull.1, 1e-6 * span)
        || near_edge(sol.nu, NU_RANGE.0, NU_RANGE.1, 0.05)
        || sol.coefficients[1] <= 0.0
}

pub fn fit_threshold(points: &[FitPoint], opts: FitOptions) -> Result<ThresholdFit, FitError> {
    let sizes: std::collections::BTreeSet<usize> = points.iter().map(|p| p.l).collect();
    if sizes.len() < MIN_FIT_SIZES {
        return Err(FitError::TooFewSizes(sizes.len()));
    }
    let grid: std::collections::BTreeSet<u64> = points.iter().map(|p| p.p.to_bits()).collect();
    if grid.len() < MIN_FIT_POINTS {
        return Err(FitError::TooFewPoints(grid.len()));
    }
    let hull = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.p), hi.max(p.p))
        });
    let guess = crossing_guess(points)?;

    let free = fit_once(points, hull, None, guess, FALLBACK_NU);
    let (sol, fixed_nu) = match free {
        Ok(sol) if !ill_conditioned(&sol, hull) => (sol, None),
        _ => (
            fit_once(points, hull, Some(FALLBACK_NU), guess, FALLBACK_NU)?,
            Some(FALLBACK_NU),
        ),
    };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut samples = Vec::with_capacity(opts.bootstrap);
    for _ in 0..opts.bootstrap {
        let resampled: Vec<FitPoint> = points
            .iter()
            .map(|pt| {
                let failures = Binomial::new(pt.shots, pt.p_fail())
                    .expect("valid binomial")
                    .sample(&mut rng);
                FitPoint { failures, ..*pt }
            })
            .collect();
        if let Ok(s) = fit_once(&resampled, hull, fixed_nu, sol.p_c, sol.nu) {
            samples.push(s.p_c);
        }
    }
    let sigma = if samples.len() >= 2 {
        let mean = samples.iter().sum::<f64>() / samples.len() as f64;
        (samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (samples.len() - 1) as f64)
            .sqrt()
    } else {
        0.0
    };
    // keep the uncertainty strictly positive
    let sigma = sigma.max(1e-9 * (hull.1 - hull.0));
    let params = if fixed_nu.is_some() { 4 } else { 5 };
    Ok(ThresholdFit {
        p_c: sol.p_c,
        sigma,
        nu: sol.nu,
        nu_fixed: fixed_nu.is_some(),
        coefficients: sol.coefficients,
        chi2: sol.chi2,
        dof: points.len().saturating_sub(params),
        points: points.to_vec(),
    })
}
