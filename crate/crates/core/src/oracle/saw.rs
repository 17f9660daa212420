//! Self-avoiding walks on the hypercubic lattice `Z^D` and their
//! decomposition into seam segments and bulk excursions.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::{OracleError, ENUMERATION_BUDGET};
use crate::bounds::BoundParams;

pub type Point = Vec<i32>;

/// How the first step of every enumerated walk is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StartConstraint {
    /// Any of the `2D` first steps.
    Free,
    /// First step is `+e_axis`.
    Axis(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SawEnumeration {
    pub count: u64,
    pub walks: Vec<Vec<Point>>,
}

fn step(p: &[i32], dir: usize) -> Point {
    let mut q = p.to_vec();
    let axis = dir / 2;
    q[axis] += if dir % 2 == 0 { 1 } else { -1 };
    q
}

/// All self-avoiding walks of `length` edges from the origin.
pub fn enumerate_saws(
    d: usize,
    length: usize,
    start: StartConstraint,
) -> Result<SawEnumeration, OracleError> {
    if d == 0 || length == 0 {
        return Err(OracleError::MalformedWalk(
            "need D >= 1 and length >= 1".into(),
        ));
    }
    if let StartConstraint::Axis(a) = start {
        if a >= d {
            return Err(OracleError::MalformedWalk(format!(
                "start axis {a} outside D = {d}"
            )));
        }
    }
    let first_choices = match start {
        StartConstraint::Free => 2 * d as u64,
        StartConstraint::Axis(_) => 1,
    };
    let a_priori = (2 * d as u64 - 1)
        .checked_pow(length as u32 - 1)
        .and_then(|x| x.checked_mul(first_choices))
        .unwrap_or(u64::MAX);
    if a_priori > ENUMERATION_BUDGET {
        return Err(OracleError::BudgetExceeded {
            needed: a_priori,
            budget: ENUMERATION_BUDGET,
        });
    }

    let origin = vec![0; d];
    let firsts: Vec<usize> = match start {
        StartConstraint::Free => (0..2 * d).collect(),
        StartConstraint::Axis(a) => vec![2 * a],
    };
    let mut walks = Vec::new();
    for dir in firsts {
        let mut path = vec![origin.clone(), step(&origin, dir)];
        let mut seen: HashSet<Point> = path.iter().cloned().collect();
        extend(d, length, &mut path, &mut seen, &mut walks);
    }
    Ok(SawEnumeration {
        count: walks.len() as u64,
        walks,
    })
}

fn extend(
    d: usize,
    length: usize,
    path: &mut Vec<Point>,
    seen: &mut HashSet<Point>,
    out: &mut Vec<Vec<Point>>,
) {
    if path.len() == length + 1 {
        out.push(path.clone());
        return;
    }
    let tip = path.last().unwrap().clone();
    for dir in 0..2 * d {
        let next = step(&tip, dir);
        if seen.contains(&next) {
            continue;
        }
        seen.insert(next.clone());
        path.push(next);
        extend(d, length, path, seen, out);
        let back = path.pop().unwrap();
        seen.remove(&back);
    }
}

/// Lattice `Z^{D_b}` whose seam is the subspace where coordinates
/// `D_s..D_b` are zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeamGeometry {
    pub ds: usize,
    pub db: usize,
}

impl SeamGeometry {
    pub fn on_seam(&self, p: &[i32]) -> bool {
        p[self.ds..].iter().all(|&c| c == 0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WalkClassification {
    pub gamma_s: usize,
    pub gamma_b: usize,
    /// Number of excursions `C`.
    pub excursions: usize,
    /// `l_0, l_1, .., l_C, l_{C+1}`: leading bulk segment, interior lengths
    /// of each excursion, trailing bulk segment.
    pub segments: Vec<usize>,
    pub corners: usize,
}

impl WalkClassification {
    pub fn bulk_segment_total(&self) -> usize {
        self.segments.iter().sum()
    }
}

/// Decomposes a walk into seam edges, excursions and bulk segments.
pub fn classify_walk(
    walk: &[Point],
    geometry: SeamGeometry,
) -> Result<WalkClassification, OracleError> {
    if geometry.ds == 0 || geometry.ds >= geometry.db {
        return Err(OracleError::MalformedWalk(format!(
            "bad seam geometry {geometry:?}"
        )));
    }
    if walk.len() < 2 {
        return Err(OracleError::MalformedWalk(
            "walk needs at least one edge".into(),
        ));
    }
    let mut seen = HashSet::new();
    for (i, p) in walk.iter().enumerate() {
        if p.len() != geometry.db {
            return Err(OracleError::MalformedWalk(format!(
                "vertex {i} has dimension {}",
                p.len()
            )));
        }
        if !seen.insert(p) {
            return Err(OracleError::MalformedWalk(format!(
                "vertex {i} revisits {p:?}"
            )));
        }
        if i > 0 {
            let dist: i32 = p.iter().zip(&walk[i - 1]).map(|(a, b)| (a - b).abs()).sum();
            if dist != 1 {
                return Err(OracleError::MalformedWalk(format!(
                    "step {i} is not a unit step"
                )));
            }
        }
    }

    let length = walk.len() - 1;
    let seam_idx: Vec<usize> = (0..walk.len())
        .filter(|&i| geometry.on_seam(&walk[i]))
        .collect();
    let Some((&first, &last)) = seam_idx.first().zip(seam_idx.last()) else {
        return Ok(WalkClassification {
            gamma_s: 0,
            gamma_b: length,
            excursions: 0,
            segments: vec![length, 0],
            corners: 0,
        });
    };
    let mut gamma_s = 0;
    let mut segments = vec![first];
    for pair in seam_idx.windows(2) {
        let gap = pair[1] - pair[0];
        if gap == 1 {
            gamma_s += 1;
        } else {
            segments.push(gap - 2);
        }
    }
    let excursions = segments.len() - 1;
    segments.push(length - last);
    Ok(WalkClassification {
        gamma_s,
        gamma_b: length - gamma_s,
        excursions,
        segments,
        corners: 2 * excursions,
    })
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// `(gamma_S choose C) a^C mu_s^gamma_S mu_b^(sum l_k)` for walks mixing
/// seam and bulk; `mu_s^gamma_S` or `mu_b^gamma_B` for walks confined to one
/// region.
pub fn class_bound(class: &WalkClassification, params: &BoundParams) -> f64 {
    let mu_s = params.mu_s as f64;
    let mu_b = params.mu_b as f64;
    if class.gamma_b == 0 {
        return mu_s.powi(class.gamma_s as i32);
    }
    if class.gamma_s == 0 && class.excursions == 0 {
        return mu_b.powi(class.gamma_b as i32);
    }
    let a = params.mu_c as f64 / mu_s;
    binomial(class.gamma_s, class.excursions)
        * a.powi(class.excursions as i32)
        * mu_s.powi(class.gamma_s as i32)
        * mu_b.powi(class.bulk_segment_total() as i32)
}

/// Number of enumerated walks per class.
pub fn class_counts(
    walks: &[Vec<Point>],
    geometry: SeamGeometry,
) -> Result<BTreeMap<WalkClassification, u64>, OracleError> {
    let mut counts = BTreeMap::new();
    for w in walks {
        *counts.entry(classify_walk(w, geometry)?).or_insert(0) += 1;
    }
    Ok(counts)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassViolation {
    pub class: WalkClassification,
    pub count: u64,
    pub bound: f64,
}

/// Classes of walks up to `max_len` edges (first step along the seam) whose
/// count exceeds [`class_bound`].
pub fn class_bound_violations(
    geometry: SeamGeometry,
    max_len: usize,
    params: &BoundParams,
) -> Result<Vec<ClassViolation>, OracleError> {
    let mut out = Vec::new();
    for len in 1..=max_len {
        let walks = enumerate_saws(geometry.db, len, StartConstraint::Axis(0))?.walks;
        for (class, count) in class_counts(&walks, geometry)? {
            let bound = class_bound(&class, params);
            if count as f64 > bound {
                out.push(ClassViolation {
                    class,
                    count,
                    bound,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::connectivity_constants;

    const SQUARE: SeamGeometry = SeamGeometry { ds: 1, db: 2 };
    const CUBIC: SeamGeometry = SeamGeometry { ds: 2, db: 3 };

    fn pts(v: &[[i32; 3]]) -> Vec<Point> {
        v.iter().map(|p| p.to_vec()).collect()
    }

    #[test]
    fn small_counts() {
        assert_eq!(
            enumerate_saws(2, 3, StartConstraint::Axis(0))
                .unwrap()
                .count,
            9
        );
        assert_eq!(
            enumerate_saws(2, 4, StartConstraint::Free).unwrap().count,
            100
        );
        assert_eq!(
            enumerate_saws(3, 3, StartConstraint::Free).unwrap().count,
            150
        );
        assert!(
            enumerate_saws(3, 5, StartConstraint::Axis(0))
                .unwrap()
                .count
                < 625
        );
        assert!(matches!(
            enumerate_saws(3, 12, StartConstraint::Axis(0)),
            Err(OracleError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn counts_respect_appending_bound() {
        for (d, max) in [(2, 10), (3, 7)] {
            for len in 1..=max {
                let n = enumerate_saws(d, len, StartConstraint::Axis(0))
                    .unwrap()
                    .count;
                assert!(n <= (2 * d as u64 - 1).pow(len as u32 - 1));
            }
        }
    }

    #[test]
    fn classification_examples() {
        let on_seam = classify_walk(&pts(&[[0, 0, 0], [1, 0, 0], [1, 1, 0]]), CUBIC).unwrap();
        assert_eq!(
            (on_seam.gamma_s, on_seam.gamma_b, on_seam.excursions),
            (2, 0, 0)
        );
        let hop =
            classify_walk(&pts(&[[0, 0, 0], [0, 0, 1], [1, 0, 1], [1, 0, 0]]), CUBIC).unwrap();
        assert_eq!((hop.excursions, hop.corners, hop.gamma_b), (1, 2, 3));
        assert_eq!(hop.segments, vec![0, 1, 0]);
        let tail =
            classify_walk(&pts(&[[0, 0, 0], [1, 0, 0], [1, 0, 1], [1, 0, 2]]), CUBIC).unwrap();
        assert_eq!(
            (tail.gamma_s, tail.excursions, tail.segments.clone()),
            (1, 0, vec![0, 2])
        );
        assert!(classify_walk(&pts(&[[0, 0, 0], [1, 0, 0], [0, 0, 0]]), CUBIC).is_err());
        assert!(classify_walk(&pts(&[[0, 0, 0], [2, 0, 0]]), CUBIC).is_err());
    }

    #[test]
    fn bulk_bookkeeping_identity() {
        for (geom, len) in [(SQUARE, 8), (CUBIC, 6)] {
            for w in enumerate_saws(geom.db, len, StartConstraint::Free)
                .unwrap()
                .walks
            {
                let c = classify_walk(&w, geom).unwrap();
                assert_eq!(c.gamma_b, 2 * c.excursions + c.bulk_segment_total());
                assert_eq!(c.gamma_s + c.gamma_b, len);
                assert_eq!(c.segments.len(), c.excursions + 2);
            }
        }
    }

    #[test]
    fn bound_fails_only_for_back_to_back_excursions() {
        for (geom, max) in [(SQUARE, 10), (CUBIC, 7)] {
            let params = connectivity_constants(geom.ds as u32, geom.db as u32).unwrap();
            let v = class_bound_violations(geom, max, &params).unwrap();
            assert!(
                v.iter()
                    .all(|x| x.class.excursions > x.class.gamma_s && x.bound == 0.0),
                "{v:?}"
            );
        }
        let params = connectivity_constants(2, 3).unwrap();
        let v = class_bound_violations(CUBIC, 7, &params).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(
            (v[0].class.gamma_s, v[0].class.excursions, v[0].count),
            (1, 2, 18)
        );
    }
}
