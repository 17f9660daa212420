//! Monte Carlo failure-rate estimation.

use std::ops::Range;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::ExperimentError;
use crate::decoder::Decoder;
use crate::lattice::{build_graph, LatticeSpec};
use crate::logical::{judge, JudgeError};
use crate::noise::{
    assign_probabilities, syndrome_into, DefectSet, ErrorPattern, NoiseParams, WeightedGraph,
};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Shots per parallel task. Results never depend on it.
const SHOTS_PER_TASK: u64 = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureEstimate {
    pub shots: u64,
    pub failures: u64,
    pub p_fail: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub seed: u64,
    pub fingerprint: String,
}

impl FailureEstimate {
    pub fn from_counts(failures: u64, shots: u64, seed: u64, fingerprint: String) -> Self {
        assert!(shots >= 1 && failures <= shots);
        let (ci_low, ci_high) = wilson_interval(failures, shots, Z_95);
        Self {
            shots,
            failures,
            p_fail: failures as f64 / shots as f64,
            ci_low,
            ci_high,
            seed,
            fingerprint,
        }
    }

    /// One standard deviation implied by the Wilson interval.
    pub fn sigma(&self) -> f64 {
        (self.ci_high - self.ci_low) / (2.0 * Z_95)
    }

    pub fn overlaps(&self, other: &FailureEstimate) -> bool {
        self.ci_low <= other.ci_high && other.ci_low <= self.ci_high
    }
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let denom = 1.0 + z2 / n_f;
    let centre = (p + z2 / (2.0 * n_f)) / denom;
    let half = z * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt() / denom;
    let lo = if k == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if k == n {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    (lo.min(p), hi.max(p))
}

fn canonical_config(spec: &LatticeSpec, params: NoiseParams) -> String {
    format!(
        "L={};T={};seams={:?};p_bulk={:016x};p_seam={:016x}",
        spec.distance(),
        spec.rounds(),
        spec.seam_columns(),
        params.p_bulk.to_bits(),
        params.p_seam.to_bits()
    )
}

/// Hex digest of lattice, noise and seed.
pub fn fingerprint(spec: &LatticeSpec, params: NoiseParams, seed: u64) -> String {
    let digest =
        Sha256::digest(format!("{};seed={seed}", canonical_config(spec, params)).as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// Per-point seed split from a campaign seed by hashing the point's config.
pub fn point_seed(campaign_seed: u64, spec: &LatticeSpec, params: NoiseParams) -> u64 {
    let digest = Sha256::digest(
        format!(
            "campaign={campaign_seed};{}",
            canonical_config(spec, params)
        )
        .as_bytes(),
    );
    u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"))
}

/// Failures among the given shots, each running sample, decode and judge.
pub fn count_failures(
    weighted: &WeightedGraph,
    seed: u64,
    shots: Range<u64>,
) -> Result<u64, JudgeError> {
    let graph = weighted.graph();
    let mut decoder = Decoder::new(weighted);
    let mut parity = vec![false; graph.num_vertices()];
    let mut defects = DefectSet::default();
    let mut pattern = ErrorPattern {
        flipped: Vec::new(),
        seed,
        shot: 0,
    };
    let mut failures = 0;
    for shot in shots {
        pattern.shot = shot;
        weighted.sample_into(seed, shot, &mut pattern.flipped);
        syndrome_into(graph, &pattern.flipped, &mut parity, &mut defects);
        let correction = decoder.decode(&defects);
        failures += judge(graph, &pattern, &correction)?.failed as u64;
    }
    Ok(failures)
}

/// Runs `shots` shots in parallel on the current rayon pool.
pub fn estimate_weighted(
    weighted: &WeightedGraph,
    shots: u64,
    seed: u64,
) -> Result<FailureEstimate, ExperimentError> {
    if shots == 0 {
        return Err(ExperimentError::NoShots);
    }
    let tasks = shots.div_ceil(SHOTS_PER_TASK);
    let failures = (0..tasks)
        .into_par_iter()
        .map(|t| {
            count_failures(
                weighted,
                seed,
                t * SHOTS_PER_TASK..((t + 1) * SHOTS_PER_TASK).min(shots),
            )
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    let spec = weighted.graph().spec();
    Ok(FailureEstimate::from_counts(
        failures,
        shots,
        seed,
        fingerprint(spec, weighted.params(), seed),
    ))
}

pub fn estimate(
    spec: &LatticeSpec,
    params: NoiseParams,
    shots: u64,
    seed: u64,
) -> Result<FailureEstimate, ExperimentError> {
    let weighted = assign_probabilities(&build_graph(spec), params)?;
    estimate_weighted(&weighted, shots, seed)
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<R: Send>(workers: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .expect("thread pool")
        .install(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn wilson_edges() {
        let (lo, hi) = wilson_interval(0, 100, Z_95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0 && hi < 0.05);
        let (lo, hi) = wilson_interval(100, 100, Z_95);
        assert!(lo > 0.95 && lo < 1.0);
        assert_eq!(hi, 1.0);
        let (lo, hi) = wilson_interval(37, 200, Z_95);
        assert!(lo < 0.185 && 0.185 < hi);
    }

    #[test]
    fn wilson_reference_value() {
        // 10 of 100: [0.0552, 0.1744]
        let (lo, hi) = wilson_interval(10, 100, Z_95);
        assert!(
            (lo - 0.05522).abs() < 1e-4 && (hi - 0.17437).abs() < 1e-4,
            "{lo} {hi}"
        );
    }

    #[test]
    fn wilson_coverage() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let trials = 10_000;
        for &(p, n) in &[(0.1, 1000u64), (0.02, 1000), (0.2, 300)] {
            let mut covered = 0;
            for _ in 0..trials {
                let k = (0..n).filter(|_| rng.gen::<f64>() < p).count() as u64;
                let (lo, hi) = wilson_interval(k, n, Z_95);
                covered += (lo <= p && p <= hi) as u32;
            }
            let rate = covered as f64 / trials as f64;
            assert!((rate - 0.95).abs() <= 0.01, "p={p} n={n}: {rate}");
        }
    }

    #[test]
    fn zero_noise_never_fails() {
        let spec = LatticeSpec::single_seam(4, 2).unwrap();
        let est = estimate(&spec, NoiseParams::new(0.0, 0.0).unwrap(), 500, 1).unwrap();
        assert_eq!((est.failures, est.p_fail), (0, 0.0));
    }

    #[test]
    fn independent_of_worker_count() {
        let spec = LatticeSpec::single_seam(4, 4).unwrap();
        let params = NoiseParams::new(0.006, 0.09).unwrap();
        let a = with_workers(1, || estimate(&spec, params, 3000, 5).unwrap());
        let b = with_workers(3, || estimate(&spec, params, 3000, 5).unwrap());
        assert_eq!(a, b);
        assert!(a.failures > 0);
    }

    #[test]
    fn fingerprints_separate_configs() {
        let spec = LatticeSpec::single_seam(4, 4).unwrap();
        let p = NoiseParams::new(0.006, 0.09).unwrap();
        let q = NoiseParams::new(0.006, 0.0900001).unwrap();
        assert_eq!(fingerprint(&spec, p, 1), fingerprint(&spec, p, 1));
        assert_ne!(fingerprint(&spec, p, 1), fingerprint(&spec, q, 1));
        assert_ne!(fingerprint(&spec, p, 1), fingerprint(&spec, p, 2));
        assert_ne!(point_seed(1, &spec, p), point_seed(1, &spec, q));
    }
}
