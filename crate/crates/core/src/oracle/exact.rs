//! Exhaustive references for small matching graphs.

use std::collections::HashMap;

use rayon::prelude::*;

use super::{NeumaierSum, OracleError, ENUMERATION_BUDGET};
use crate::decoder::{Correction, Decoder};
use crate::logical::judge;
use crate::noise::{syndrome_of, DefectSet, ErrorPattern, WeightedGraph, IMPASSABLE};

const CHUNKS: u64 = 64;

fn check_budget(needed_bits: usize) -> Result<(), OracleError> {
    let needed = 1u64.checked_shl(needed_bits as u32).unwrap_or(u64::MAX);
    if needed_bits >= 64 || needed > ENUMERATION_BUDGET {
        return Err(OracleError::BudgetExceeded {
            needed,
            budget: ENUMERATION_BUDGET,
        });
    }
    Ok(())
}

/// Bitmask of real endpoints per edge. Real vertex `v` is bit `v`.
fn endpoint_masks(weighted: &WeightedGraph) -> Vec<u64> {
    let g = weighted.graph();
    g.edges()
        .iter()
        .map(|e| {
            [e.u, e.v]
                .iter()
                .filter(|&&v| !g.is_boundary(v))
                .fold(0u64, |m, &v| m ^ (1 << v))
        })
        .collect()
}

fn defects_from_bits(bits: u64, num_real: usize) -> DefectSet {
    let vertices: Vec<usize> = (0..num_real).filter(|&v| bits >> v & 1 == 1).collect();
    let boundary_odd = vertices.len() % 2 == 1;
    DefectSet {
        vertices,
        boundary_odd,
    }
}

/// Exact failure probability by summing over every error pattern
/// (`2^#edges` terms) and running the full decode-and-judge pipeline on each.
pub fn failure_probability_by_patterns(weighted: &WeightedGraph) -> Result<f64, OracleError> {
    let g = weighted.graph();
    let e = g.num_edges();
    check_budget(e)?;
    let probs = weighted.probabilities();
    let total = 1u64 << e;
    let chunk = total.div_ceil(CHUNKS);
    let partials: Vec<f64> = (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut decoder = Decoder::new(weighted);
            let mut cache: HashMap<Vec<usize>, Correction> = HashMap::new();
            let mut acc = NeumaierSum::default();
            for pattern in (c * chunk)..((c + 1) * chunk).min(total) {
                let mut prob = 1.0;
                let mut flipped = Vec::new();
                for (k, &p) in probs.iter().enumerate() {
                    if pattern >> k & 1 == 1 {
                        prob *= p;
                        flipped.push(k);
                    } else {
                        prob *= 1.0 - p;
                    }
                }
                if prob == 0.0 {
                    continue;
                }
                let errors = ErrorPattern {
                    flipped,
                    seed: 0,
                    shot: pattern,
                };
                let defects = syndrome_of(g, &errors.flipped);
                let correction = cache
                    .entry(defects.vertices.clone())
                    .or_insert_with(|| decoder.decode(&defects));
                let failed = judge(g, &errors, correction)
                    .expect("decoder reproduces the syndrome")
                    .failed;
                if failed {
                    acc.add(prob);
                }
            }
            acc.total()
        })
        .collect();
    let mut acc = NeumaierSum::default();
    partials.into_iter().for_each(|p| acc.add(p));
    Ok(acc.total())
}

/// Joint distribution of (syndrome, logical-cut parity) by dynamic
/// programming over edges. Index `s | parity << V`.
pub fn syndrome_parity_distribution(weighted: &WeightedGraph) -> Result<Vec<f64>, OracleError> {
    let g = weighted.graph();
    let num_real = g.num_vertices() - 1;
    check_budget(num_real + 1)?;
    let masks = endpoint_masks(weighted);
    let cut_bit = 1u64 << num_real;
    let size = 1usize << (num_real + 1);
    let mut dist = vec![0.0; size];
    let mut next = vec![0.0; size];
    dist[0] = 1.0;
    for (k, &p) in weighted.probabilities().iter().enumerate() {
        if p == 0.0 {
            continue;
        }
        let flip = masks[k] | if g.in_logical_cut(k) { cut_bit } else { 0 };
        for s in 0..size {
            next[s] = (1.0 - p) * dist[s] + p * dist[s ^ flip as usize];
        }
        std::mem::swap(&mut dist, &mut next);
    }
    Ok(dist)
}

/// Exact failure probability from the syndrome/parity distribution: each
/// reachable syndrome is decoded once.
pub fn failure_probability_by_syndromes(weighted: &WeightedGraph) -> Result<f64, OracleError> {
    let g = weighted.graph();
    let num_real = g.num_vertices() - 1;
    let dist = syndrome_parity_distribution(weighted)?;
    let cut_bit = 1usize << num_real;
    let mut decoder = Decoder::new(weighted);
    let mut acc = NeumaierSum::default();
    for s in 0..cut_bit {
        if dist[s] == 0.0 && dist[s | cut_bit] == 0.0 {
            continue;
        }
        let defects = defects_from_bits(s as u64, num_real);
        let parity = g.logical_cut_parity(decoder.decode(&defects).edges.iter().copied());
        // failure when error parity differs from correction parity
        acc.add(dist[if parity { s } else { s | cut_bit }]);
    }
    Ok(acc.total())
}

/// Exact failure probability, by pattern enumeration when the edge count
/// fits the budget and by syndrome enumeration otherwise.
pub fn exact_failure_probability(weighted: &WeightedGraph) -> Result<f64, OracleError> {
    if 1u64
        .checked_shl(weighted.graph().num_edges() as u32)
        .is_some_and(|n| n <= ENUMERATION_BUDGET)
    {
        failure_probability_by_patterns(weighted)
    } else {
        failure_probability_by_syndromes(weighted)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinWeight {
    pub cost: i64,
    pub weight: f64,
    /// Witness edge set in increasing order.
    pub edges: Vec<usize>,
}

/// Minimum-cost edge set for every syndrome, by an XOR knapsack over all
/// edge subsets.
#[derive(Debug, Clone)]
pub struct MinWeightTable {
    num_real: usize,
    cost: Vec<i64>,
    witness: Vec<u128>,
}

impl MinWeightTable {
    pub fn build(weighted: &WeightedGraph) -> Result<Self, OracleError> {
        let g = weighted.graph();
        let num_real = g.num_vertices() - 1;
        check_budget(num_real)?;
        if g.num_edges() > 128 {
            return Err(OracleError::BudgetExceeded {
                needed: g.num_edges() as u64,
                budget: 128,
            });
        }
        let masks = endpoint_masks(weighted);
        let size = 1usize << num_real;
        let mut cost = vec![IMPASSABLE; size];
        let mut witness = vec![0u128; size];
        cost[0] = 0;
        for (k, &c) in weighted.costs().iter().enumerate() {
            if c == IMPASSABLE {
                continue;
            }
            let m = masks[k] as usize;
            let prev_cost = cost.clone();
            let prev_witness = witness.clone();
            for s in 0..size {
                let from = s ^ m;
                if prev_cost[from] == IMPASSABLE {
                    continue;
                }
                let cand = prev_cost[from] + c;
                if cand < cost[s] {
                    cost[s] = cand;
                    witness[s] = prev_witness[from] | 1u128 << k;
                }
            }
        }
        Ok(Self {
            num_real,
            cost,
            witness,
        })
    }

    pub fn num_syndromes(&self) -> usize {
        self.cost.len()
    }

    /// Syndromes reachable by some finite-cost edge set.
    pub fn reachable(&self) -> impl Iterator<Item = DefectSet> + '_ {
        (0..self.cost.len())
            .filter(|&s| self.cost[s] != IMPASSABLE)
            .map(|s| defects_from_bits(s as u64, self.num_real))
    }

    pub fn lookup(&self, weighted: &WeightedGraph, defects: &DefectSet) -> Option<MinWeight> {
        let s = defects.vertices.iter().fold(0usize, |m, &v| m | 1 << v);
        if self.cost[s] == IMPASSABLE {
            return None;
        }
        let edges: Vec<usize> = (0..128)
            .filter(|&k| self.witness[s] >> k & 1 == 1)
            .collect();
        Some(MinWeight {
            cost: self.cost[s],
            weight: weighted.weight_of(&edges),
            edges,
        })
    }
}

/// Minimum-cost edge set whose boundary equals `defects`, or `None` if no
/// finite-cost set has that boundary.
pub fn brute_force_min_weight(
    weighted: &WeightedGraph,
    defects: &DefectSet,
) -> Result<Option<MinWeight>, OracleError> {
    Ok(MinWeightTable::build(weighted)?.lookup(weighted, defects))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_graph, LatticeSpec};
    use crate::noise::{assign_probabilities, NoiseParams};

    fn weighted(l: usize, t: usize, seam: bool, pb: f64, ps: f64) -> WeightedGraph {
        let spec = if seam {
            LatticeSpec::single_seam(l, t)
        } else {
            LatticeSpec::without_seam(l, t)
        };
        assign_probabilities(
            &build_graph(&spec.unwrap()),
            NoiseParams::new(pb, ps).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn zero_noise_never_fails() {
        let w = weighted(3, 0, true, 0.0, 0.0);
        assert_eq!(failure_probability_by_patterns(&w).unwrap(), 0.0);
        assert_eq!(failure_probability_by_syndromes(&w).unwrap(), 0.0);
    }

    #[test]
    fn routes_agree() {
        for (l, t, seam) in [(2, 0, false), (2, 1, true), (3, 0, true), (3, 0, false)] {
            let w = weighted(l, t, seam, 0.02, 0.11);
            let a = failure_probability_by_patterns(&w).unwrap();
            let b = failure_probability_by_syndromes(&w).unwrap();
            assert!(
                (a - b).abs() <= 1e-13 * a.max(1e-300),
                "L={l} T={t}: {a} vs {b}"
            );
            assert!(a > 0.0 && a < 0.5);
        }
    }

    #[test]
    fn distribution_is_normalised() {
        let w = weighted(3, 1, true, 0.02, 0.1);
        let d = syndrome_parity_distribution(&w).unwrap();
        let mut acc = NeumaierSum::default();
        d.iter().for_each(|&p| acc.add(p));
        assert!((acc.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn budget_is_enforced() {
        let w = weighted(4, 1, false, 0.01, 0.01);
        assert!(matches!(
            failure_probability_by_patterns(&w),
            Err(OracleError::BudgetExceeded { .. })
        ));
        let big = weighted(6, 6, false, 0.01, 0.01);
        assert!(matches!(
            failure_probability_by_syndromes(&big),
            Err(OracleError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn min_weight_examples() {
        let w = weighted(3, 0, false, 0.01, 0.01);
        let g = w.graph();
        let table = MinWeightTable::build(&w).unwrap();
        let empty = table.lookup(&w, &DefectSet::default()).unwrap();
        assert_eq!((empty.cost, empty.edges.len()), (0, 0));
        let e = g.horizontal_edge(0, 0, 0);
        let defects = syndrome_of(g, &[e]);
        let one = table.lookup(&w, &defects).unwrap();
        assert_eq!(one.cost, w.costs()[e]);
        assert_eq!(syndrome_of(g, &one.edges), defects);
    }

    #[test]
    fn knapsack_matches_subset_enumeration() {
        let w = weighted(3, 0, true, 0.03, 0.2);
        let g = w.graph();
        let table = MinWeightTable::build(&w).unwrap();
        let e = g.num_edges();
        let mut best: HashMap<Vec<usize>, i64> = HashMap::new();
        for pattern in 0u64..1 << e {
            let flipped: Vec<usize> = (0..e).filter(|&k| pattern >> k & 1 == 1).collect();
            let cost = w.cost_of(&flipped);
            let key = syndrome_of(g, &flipped).vertices;
            let slot = best.entry(key).or_insert(i64::MAX);
            *slot = (*slot).min(cost);
        }
        assert_eq!(best.len(), table.reachable().count());
        for (vertices, cost) in best {
            let defects = DefectSet {
                boundary_odd: vertices.len() % 2 == 1,
                vertices,
            };
            assert_eq!(table.lookup(&w, &defects).unwrap().cost, cost);
        }
    }
}
