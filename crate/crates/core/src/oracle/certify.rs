//! Certification matrix: the simulator and decoder checked against the
//! brute-force references on every enumerable graph, plus the walk-counting,
//! series and propagation checks.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::exact::{
    exact_failure_probability, failure_probability_by_patterns, failure_probability_by_syndromes,
};
use super::pauli::verify_propagation;
use super::saw::{class_bound_violations, ClassViolation, SeamGeometry};
use super::{MinWeightTable, OracleError, ENUMERATION_BUDGET};
use crate::bounds::{
    connectivity_constants, seam_factor, seam_factor_series, two_seam_factor,
    two_seam_factor_series,
};
use crate::decoder::Decoder;
use crate::experiments::{estimate_weighted, FailureEstimate};
use crate::lattice::{build_graph, LatticeSpec};
use crate::noise::{assign_probabilities, syndrome_of, NoiseParams, WeightedGraph};

/// Noise settings `(p_bulk, p_seam)` of the matrix.
pub const NOISE_SETTINGS: [(f64, f64); 3] = [(0.005, 0.05), (0.02, 0.10), (0.05, 0.25)];

/// Relative tolerance for closed form against term-by-term series.
pub const SERIES_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificationCase {
    pub distance: usize,
    pub rounds: usize,
    pub seam: bool,
    pub p_bulk: f64,
    pub p_seam: f64,
}

impl CertificationCase {
    pub fn weighted(&self) -> Result<WeightedGraph, OracleError> {
        let spec = if self.seam {
            LatticeSpec::single_seam(self.distance, self.rounds)
        } else {
            LatticeSpec::without_seam(self.distance, self.rounds)
        }
        .expect("matrix distances are valid");
        let params = NoiseParams::new(self.p_bulk, self.p_seam).expect("matrix noise is valid");
        Ok(assign_probabilities(&build_graph(&spec), params).expect("matrix noise is valid"))
    }
}

impl fmt::Display for CertificationCase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "L={} T={} seam={} p_bulk={} p_seam={}",
            self.distance, self.rounds, self.seam, self.p_bulk, self.p_seam
        )
    }
}

/// All `L in {2,3}`, `T in {0,1}`, with and without seam, at each noise setting.
pub fn certification_matrix() -> Vec<CertificationCase> {
    let mut out = Vec::new();
    for distance in [2, 3] {
        for rounds in [0, 1] {
            for seam in [false, true] {
                for (p_bulk, p_seam) in NOISE_SETTINGS {
                    out.push(CertificationCase {
                        distance,
                        rounds,
                        seam,
                        p_bulk,
                        p_seam,
                    });
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub case: CertificationCase,
    pub exact: f64,
    /// Relative gap between the pattern and syndrome routes, when the pattern
    /// route fits the budget.
    pub route_gap: Option<f64>,
    pub monte_carlo: FailureEstimate,
    /// `|MC - exact|` in units of the Wilson sigma.
    pub z_score: f64,
    pub syndromes_checked: usize,
    pub decode_mismatches: usize,
}

impl CaseReport {
    pub fn route_ok(&self) -> bool {
        self.route_gap.map_or(true, |g| g <= 1e-12)
    }

    pub fn monte_carlo_ok(&self) -> bool {
        self.z_score <= 3.0
    }

    pub fn decode_ok(&self) -> bool {
        self.decode_mismatches == 0 && self.syndromes_checked > 0
    }

    pub fn passed(&self) -> bool {
        self.route_ok() && self.monte_carlo_ok() && self.decode_ok()
    }
}

/// Counts syndromes where the decoder's cost differs from the minimum found
/// by enumeration, or whose correction does not reproduce the syndrome.
pub fn decode_mismatches(weighted: &WeightedGraph) -> Result<(usize, usize), OracleError> {
    let table = MinWeightTable::build(weighted)?;
    let graph = weighted.graph();
    let mut decoder = Decoder::new(weighted);
    let mut checked = 0;
    let mut bad = 0;
    for defects in table.reachable() {
        let best = table
            .lookup(weighted, &defects)
            .expect("reachable syndrome");
        let correction = decoder.decode(&defects);
        checked += 1;
        if correction.cost != best.cost || syndrome_of(graph, &correction.edges) != defects {
            bad += 1;
        }
    }
    Ok((checked, bad))
}

pub fn certify_case(
    case: CertificationCase,
    shots: u64,
    seed: u64,
) -> Result<CaseReport, OracleError> {
    let weighted = case.weighted()?;
    let exact = exact_failure_probability(&weighted)?;
    let route_gap =
        if weighted.graph().num_edges() as u64 <= ENUMERATION_BUDGET.trailing_zeros() as u64 {
            let a = failure_probability_by_patterns(&weighted)?;
            let b = failure_probability_by_syndromes(&weighted)?;
            Some((a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE))
        } else {
            None
        };
    let monte_carlo =
        estimate_weighted(&weighted, shots, seed).expect("shots >= 1 and decoder invariants hold");
    let z_score = (monte_carlo.p_fail - exact).abs() / monte_carlo.sigma();
    let (syndromes_checked, decode_mismatches) = decode_mismatches(&weighted)?;
    Ok(CaseReport {
        case,
        exact,
        route_gap,
        monte_carlo,
        z_score,
        syndromes_checked,
        decode_mismatches,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkReport {
    pub ds: u32,
    pub db: u32,
    pub max_len: usize,
    pub violations: Vec<ClassViolation>,
}

impl WalkReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Class-by-class walk counts against the counting bound: cubic bulk up to 7
/// edges, square bulk up to 10.
pub fn walk_reports() -> Result<Vec<WalkReport>, OracleError> {
    [(2u32, 3u32, 7usize), (1, 2, 10)]
        .into_iter()
        .map(|(ds, db, max_len)| {
            let params = connectivity_constants(ds, db).expect("valid dimensions");
            let geometry = SeamGeometry {
                ds: ds as usize,
                db: db as usize,
            };
            let violations = class_bound_violations(geometry, max_len, &params)?;
            Ok(WalkReport {
                ds,
                db,
                max_len,
                violations,
            })
        })
        .collect()
}

/// Largest relative gap between closed forms and their series, over a grid
/// of convergent noise values.
pub fn series_gap() -> f64 {
    let params = connectivity_constants(2, 3).expect("valid dimensions");
    let p_b_star = params.p_b_star();
    let p_1s_star = params.p_s_star();
    let mut worst: f64 = 0.0;
    for &fb in &[0.0, 0.05, 0.3, 0.6, 0.9] {
        let p_b = fb * p_b_star;
        for &p_s in &[1e-4, 0.01, 0.05, 0.2] {
            let a = seam_factor(p_s, p_b, &params).expect("convergent");
            let b = seam_factor_series(p_s, p_b, &params, SERIES_TOLERANCE);
            worst = worst.max((a - b).abs() / a.abs());
            for h in 2..=6 {
                let a = two_seam_factor(p_s, p_b, h, &params, p_1s_star).expect("convergent");
                let b = two_seam_factor_series(p_s, p_b, h, &params, p_1s_star, SERIES_TOLERANCE);
                worst = worst.max((a - b).abs() / a.abs());
            }
        }
    }
    worst
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificationReport {
    pub cases: Vec<CaseReport>,
    pub walks: Vec<WalkReport>,
    pub series_gap: f64,
    pub propagation: bool,
}

impl CertificationReport {
    /// The graph matrix: route agreement, Monte Carlo agreement and decode
    /// exactness on every case.
    pub fn graphs_passed(&self) -> bool {
        self.cases.iter().all(CaseReport::passed)
    }

    pub fn series_passed(&self) -> bool {
        self.series_gap <= SERIES_TOLERANCE
    }

    pub fn walks_passed(&self) -> bool {
        self.walks.iter().all(WalkReport::passed)
    }

    /// One `PASS`/`FAIL` line per check.
    pub fn lines(&self) -> Vec<String> {
        let tag = |ok: bool| if ok { "PASS" } else { "FAIL" };
        let mut out = Vec::new();
        for c in &self.cases {
            out.push(format!(
                "{} graph {} exact={:.6e} mc={:.6e} z={:.2} route_gap={} syndromes={} mismatches={}",
                tag(c.passed()),
                c.case,
                c.exact,
                c.monte_carlo.p_fail,
                c.z_score,
                c.route_gap.map_or("n/a".to_string(), |g| format!("{g:.1e}")),
                c.syndromes_checked,
                c.decode_mismatches
            ));
        }
        for w in &self.walks {
            let detail: Vec<String> = w
                .violations
                .iter()
                .map(|v| {
                    format!(
                        "(gS={},C={},segs={:?}: {}>{})",
                        v.class.gamma_s, v.class.excursions, v.class.segments, v.count, v.bound
                    )
                })
                .collect();
            out.push(format!(
                "{} walks Ds={} Db={} len<={} violations={} {}",
                tag(w.passed()),
                w.ds,
                w.db,
                w.max_len,
                w.violations.len(),
                detail.join(" ")
            ));
        }
        out.push(format!(
            "{} series max_rel_gap={:.2e}",
            tag(self.series_passed()),
            self.series_gap
        ));
        out.push(format!("{} propagation table", tag(self.propagation)));
        out
    }
}

/// Runs the whole matrix with `shots` Monte Carlo shots per graph.
pub fn certify(shots: u64, seed: u64) -> Result<CertificationReport, OracleError> {
    let cases = certification_matrix()
        .into_iter()
        .map(|c| certify_case(c, shots, seed))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CertificationReport {
        cases,
        walks: walk_reports()?,
        series_gap: series_gap(),
        propagation: verify_propagation(),
    })
}
