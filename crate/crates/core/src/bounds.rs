//! Closed-form failure bounds obtained by counting self-avoiding walks that
//! move along a seam and make excursions into the surrounding bulk.
//!
//! The polynomial prefactors of the bounds are set to 1, so the values are
//! meaningful for threshold locations and curve shapes, not as absolute
//! probabilities. Evaluators return values above 1 unchanged.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Empirical bulk threshold per local gate used by the decoupled model.
pub const DEFAULT_P_BULK_STAR: f64 = 0.01;
/// Empirical seam threshold per Bell pair used by the decoupled model.
pub const DEFAULT_P_SEAM_STAR: f64 = 0.10;
/// Default count of ways to hop from one seam to the other.
pub const DEFAULT_MU_2C: u64 = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("need 1 <= D_s < D_b (got D_s = {ds}, D_b = {db})")]
    InvalidDimensions { ds: u32, db: u32 },
    #[error("excursion series diverges: p_b = {p_b} >= p_b* = {p_b_star}")]
    Divergent { p_b: f64, p_b_star: f64 },
    #[error("seam separation h = {0} must be at least 2")]
    InvalidSeparation(usize),
    #[error("probability {0} must be non-negative")]
    NegativeProbability(f64),
}

/// Values that replace the derived constants in curve evaluations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Overrides {
    pub p_s_star: Option<f64>,
    pub p_b_star: Option<f64>,
    pub alpha_c: Option<f64>,
    pub alpha_2c: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundParams {
    pub ds: u32,
    pub db: u32,
    /// `2 D_s - 1`
    pub mu_s: u64,
    /// `2 D_b - 1`
    pub mu_b: u64,
    /// `4 D_s (D_b - D_s)`
    pub mu_c: u64,
    pub mu_2c: u64,
    /// `1 / (4 mu_s^2)`
    pub p_s_star: Ratio<u64>,
    /// `1 / (4 mu_b^2)`
    pub p_b_star: Ratio<u64>,
    /// `8 mu_c`
    pub alpha_c: u64,
    /// `8 mu_2c`
    pub alpha_2c: u64,
    pub overrides: Overrides,
}

/// Walk-extension count `2D - 1` on the `D`-dimensional hypercubic lattice.
pub fn walk_branching(d: u32) -> u64 {
    2 * d as u64 - 1
}

/// Homogeneous threshold bound `1 / (4 (2D - 1)^2)`.
pub fn homogeneous_threshold(d: u32) -> Ratio<u64> {
    let mu = walk_branching(d);
    Ratio::new(1, 4 * mu * mu)
}

pub fn connectivity_constants(ds: u32, db: u32) -> Result<BoundParams, BoundsError> {
    if ds == 0 || ds >= db {
        return Err(BoundsError::InvalidDimensions { ds, db });
    }
    let mu_c = 4 * ds as u64 * (db - ds) as u64;
    Ok(BoundParams {
        ds,
        db,
        mu_s: walk_branching(ds),
        mu_b: walk_branching(db),
        mu_c,
        mu_2c: DEFAULT_MU_2C,
        p_s_star: homogeneous_threshold(ds),
        p_b_star: homogeneous_threshold(db),
        alpha_c: 8 * mu_c,
        alpha_2c: 8 * DEFAULT_MU_2C,
        overrides: Overrides::default(),
    })
}

fn ratio_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

impl BoundParams {
    pub fn with_mu_2c(mut self, mu_2c: u64) -> Self {
        self.mu_2c = mu_2c;
        self.alpha_2c = 8 * mu_2c;
        self
    }

    pub fn with_overrides(mut self, overrides: Overrides) -> Self {
        self.overrides = overrides;
        self
    }

    /// `a = mu_c / mu_s`
    pub fn corner_ratio(&self) -> Ratio<u64> {
        Ratio::new(self.mu_c, self.mu_s)
    }

    pub fn p_s_star(&self) -> f64 {
        self.overrides
            .p_s_star
            .unwrap_or_else(|| ratio_f64(self.p_s_star))
    }

    pub fn p_b_star(&self) -> f64 {
        self.overrides
            .p_b_star
            .unwrap_or_else(|| ratio_f64(self.p_b_star))
    }

    pub fn alpha_c(&self) -> f64 {
        self.overrides.alpha_c.unwrap_or(self.alpha_c as f64)
    }

    pub fn alpha_2c(&self) -> f64 {
        self.overrides.alpha_2c.unwrap_or(self.alpha_2c as f64)
    }

    fn check_convergent(&self, p_b: f64) -> Result<f64, BoundsError> {
        if p_b < 0.0 {
            return Err(BoundsError::NegativeProbability(p_b));
        }
        let p_b_star = self.p_b_star();
        if p_b >= p_b_star {
            return Err(BoundsError::Divergent { p_b, p_b_star });
        }
        Ok(1.0 - (p_b / p_b_star).sqrt())
    }

    /// `1 + alpha p_b sqrt(p_s*) / (1 - sqrt(p_b / p_b*))`
    pub fn excursion_factor(&self, p_b: f64, alpha_c: f64) -> Result<f64, BoundsError> {
        let denom = self.check_convergent(p_b)?;
        Ok(1.0 + alpha_c * p_b * self.p_s_star().sqrt() / denom)
    }
}

/// `(p / p*)^(L/2)` with `p* = 1 / (4 (2D - 1)^2)`.
pub fn homogeneous_bound(p: f64, d: u32, l: usize) -> f64 {
    (p / ratio_f64(homogeneous_threshold(d))).powf(l as f64 / 2.0)
}

/// Factor contributed by each appended seam edge, counting excursions.
pub fn seam_factor(p_s: f64, p_b: f64, params: &BoundParams) -> Result<f64, BoundsError> {
    if p_s < 0.0 {
        return Err(BoundsError::NegativeProbability(p_s));
    }
    let ex = params.excursion_factor(p_b, params.alpha_c())?;
    Ok((p_s / params.p_s_star()).sqrt() * ex)
}

/// The same factor summed term by term with the rigorous constants:
/// `mu_s 2 sqrt(p_s) + sum_l mu_c 2 sqrt(p_s) (2 sqrt(p_b))^2 (mu_b 2 sqrt(p_b))^l`.
pub fn seam_factor_series(p_s: f64, p_b: f64, params: &BoundParams, tol: f64) -> f64 {
    let link_s = 2.0 * p_s.sqrt();
    let link_b = 2.0 * p_b.sqrt();
    let head = params.mu_s as f64 * link_s;
    let first = params.mu_c as f64 * link_s * link_b * link_b;
    let ratio = params.mu_b as f64 * link_b;
    head + geometric_tail(first, ratio, tol)
}

/// Sums `first * ratio^l` for `l >= 0` term by term until terms drop below
/// `tol` relative to the running sum.
fn geometric_tail(first: f64, ratio: f64, tol: f64) -> f64 {
    assert!(ratio < 1.0, "series ratio {ratio} does not converge");
    let mut sum = 0.0;
    let mut comp = 0.0;
    let mut term = first;
    while term != 0.0 {
        let y = term - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if term.abs() <= tol * 1e-3 * sum.abs() {
            break;
        }
        term *= ratio;
    }
    sum
}

/// Single-seam threshold after the excursion sag.
pub fn sag_single_seam(p_b: f64, params: &BoundParams) -> Result<f64, BoundsError> {
    let ex = params.excursion_factor(p_b, params.alpha_c())?;
    Ok(params.p_s_star() / (ex * ex))
}

/// Three-term failure bound: pure seam, pure bulk, and chains with at least
/// one excursion. The cross sum runs over `1 <= gamma_S <= L` and keeps only
/// the terms with `C >= 1` excursions, i.e. `(1 + y)^gamma_S - 1`.
pub fn pfail_cross_bound(
    p_s: f64,
    p_b: f64,
    l: usize,
    params: &BoundParams,
) -> Result<f64, BoundsError> {
    if p_s < 0.0 {
        return Err(BoundsError::NegativeProbability(p_s));
    }
    let rs = p_s / params.p_s_star();
    let rb = p_b / params.p_b_star();
    let y = params.excursion_factor(p_b, params.alpha_c())? - 1.0;
    let half_l = l as f64 / 2.0;
    let mut total = rs.powf(half_l) + rb.powf(half_l);
    for gamma_s in 1..=l {
        let g = gamma_s as f64;
        let excursions = (1.0 + y).powi(gamma_s as i32) - 1.0;
        let bulk_exponent = ((l - gamma_s) as f64 / 2.0).max(0.0);
        total += rs.powf(g / 2.0) * excursions * rb.powf(bulk_exponent);
    }
    Ok(total)
}

/// Bound along the line `p_s / p_s* = p_b / p_b*`.
pub fn f_equal_ratio(
    p_b: f64,
    alpha_c: f64,
    l: usize,
    params: &BoundParams,
) -> Result<f64, BoundsError> {
    let ex = params.excursion_factor(p_b, alpha_c)?;
    let bracket = p_b / params.p_b_star() * ex * ex;
    Ok(bracket.powf(l as f64 / 2.0))
}

/// Failure model that treats bulk and seam as independent.
pub fn decoupled_model(
    p_bulk: f64,
    p_seam: f64,
    l: usize,
    p_bulk_star: f64,
    p_seam_star: f64,
) -> f64 {
    let half_l = l as f64 / 2.0;
    (p_bulk / p_bulk_star).powf(half_l) + (p_seam / p_seam_star).powf(half_l)
}

/// Seam threshold with a second seam at distance `h`, starting from a given
/// single-seam threshold.
pub fn sag_two_seam(
    p_b: f64,
    h: usize,
    params: &BoundParams,
    p_1s_star: f64,
) -> Result<f64, BoundsError> {
    if h < 2 {
        return Err(BoundsError::InvalidSeparation(h));
    }
    let denom = params.check_convergent(p_b)?;
    let hop = (p_b / params.p_b_star()).powf((h - 2) as f64 / 2.0);
    let bracket = 1.0 + params.alpha_2c() * p_1s_star.sqrt() * p_b / denom * hop;
    Ok(p_1s_star / (bracket * bracket))
}

/// Closed form of the per-edge factor with inter-seam hops:
/// `sqrt(p_s / p_1s*) [1 + alpha_2c sqrt(p_1s*) p_b (p_b/p_b*)^((h-2)/2) / (1 - sqrt(p_b/p_b*))]`.
pub fn two_seam_factor(
    p_s: f64,
    p_b: f64,
    h: usize,
    params: &BoundParams,
    p_1s_star: f64,
) -> Result<f64, BoundsError> {
    if h < 2 {
        return Err(BoundsError::InvalidSeparation(h));
    }
    let denom = params.check_convergent(p_b)?;
    let hop = (p_b / params.p_b_star()).powf((h - 2) as f64 / 2.0);
    let bracket = 1.0 + params.alpha_2c() * p_1s_star.sqrt() * p_b * hop / denom;
    Ok((p_s / p_1s_star).sqrt() * bracket)
}

/// Term-by-term version of [`two_seam_factor`] with the rigorous constants:
/// `sqrt(p_s / p_1s*) + mu_2c sqrt(4 p_s) (sqrt(4 p_b))^2 sum_{l >= h-2} (mu_b sqrt(4 p_b))^l`.
pub fn two_seam_factor_series(
    p_s: f64,
    p_b: f64,
    h: usize,
    params: &BoundParams,
    p_1s_star: f64,
    tol: f64,
) -> f64 {
    let link_s = (4.0 * p_s).sqrt();
    let link_b = (4.0 * p_b).sqrt();
    let ratio = params.mu_b as f64 * link_b;
    let first = params.mu_2c as f64 * link_s * link_b * link_b * ratio.powi(h as i32 - 2);
    (p_s / p_1s_star).sqrt() + geometric_tail(first, ratio, tol)
}

/// Root of `f` bracket `= 1` on `(0, p_b*)`: the sagged threshold along the
/// equal-ratio line.
pub fn sagged_equal_ratio_threshold(alpha_c: f64, params: &BoundParams) -> f64 {
    let p_b_star = params.p_b_star();
    let bracket = |p: f64| f_equal_ratio(p, alpha_c, 2, params).expect("inside convergence region");
    let (mut lo, mut hi) = (0.0, p_b_star * (1.0 - 1e-15));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if bracket(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One row of the `bounds` table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsRow {
    pub p_b: f64,
    pub p_s: f64,
    #[serde(rename = "L")]
    pub l: usize,
    /// Homogeneous bound on the seam alone.
    #[serde(rename = "eq2_seam")]
    pub seam_homogeneous: f64,
    /// Homogeneous bound on the bulk alone.
    #[serde(rename = "eq2_bulk")]
    pub bulk_homogeneous: f64,
    /// Cross bound with bulk excursions off the seam.
    #[serde(rename = "eq4")]
    pub cross_bound: f64,
    /// Cross bound on the equal-ratio line.
    #[serde(rename = "eq6")]
    pub equal_ratio_bound: f64,
    #[serde(rename = "eq7")]
    pub decoupled_model: f64,
    pub p_1s_star: f64,
    pub p_2s_star: f64,
}

/// Evaluates every bound at `p_b` with the seam on the equal-ratio line
/// `p_s = p_b p_s* / p_b*`. The decoupled model uses `p_bulk = p_b / 4` and
/// `p_seam = p_s`; the two-seam sag uses separation `h`. From `p_b = p_b*`
/// on, the excursion series diverges: the cross bounds are infinite and both
/// sagged thresholds are 0.
pub fn bounds_row(
    p_b: f64,
    l: usize,
    h: usize,
    params: &BoundParams,
) -> Result<BoundsRow, BoundsError> {
    if h < 2 {
        return Err(BoundsError::InvalidSeparation(h));
    }
    let p_s = p_b * params.p_s_star() / params.p_b_star();
    let divergent = |r: Result<f64, BoundsError>, at_divergence: f64| match r {
        Err(BoundsError::Divergent { .. }) => Ok(at_divergence),
        other => other,
    };
    let p_1s_star = divergent(sag_single_seam(p_b, params), 0.0)?;
    Ok(BoundsRow {
        p_b,
        p_s,
        l,
        seam_homogeneous: homogeneous_bound(p_s, params.ds, l),
        bulk_homogeneous: homogeneous_bound(p_b, params.db, l),
        cross_bound: divergent(pfail_cross_bound(p_s, p_b, l, params), f64::INFINITY)?,
        equal_ratio_bound: divergent(
            f_equal_ratio(p_b, params.alpha_c(), l, params),
            f64::INFINITY,
        )?,
        decoupled_model: decoupled_model(
            p_b / crate::noise::BULK_GATES_PER_QUBIT,
            p_s,
            l,
            DEFAULT_P_BULK_STAR,
            DEFAULT_P_SEAM_STAR,
        ),
        p_1s_star,
        p_2s_star: if p_1s_star == 0.0 {
            0.0
        } else {
            divergent(sag_two_seam(p_b, h, params, p_1s_star), 0.0)?
        },
    })
}
