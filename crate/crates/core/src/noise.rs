//! Phenomenological noise: per-edge flip probabilities, log-odds weights, and
//! counter-based error sampling.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lattice::{EdgeKind, MatchingGraph, Orientation, Region};

/// Number of faulty local gates acting on each bulk qubit per round.
pub const BULK_GATES_PER_QUBIT: f64 = 4.0;

/// Fixed-point scale used to turn log-odds weights into integer path costs.
pub const WEIGHT_SCALE: f64 = (1u64 << 20) as f64;

/// Cost of an edge that can never flip.
pub const IMPASSABLE: i64 = i64::MAX;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("{name} = {value} must lie in [0, 0.5)")]
    OutOfRange { name: &'static str, value: f64 },
}

/// User-facing noise strengths: error per local gate and per Bell pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub p_bulk: f64,
    pub p_seam: f64,
}

impl NoiseParams {
    pub fn new(p_bulk: f64, p_seam: f64) -> Result<Self, NoiseError> {
        let params = Self { p_bulk, p_seam };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<(), NoiseError> {
        for (name, value) in [
            ("p_bulk", self.p_bulk),
            ("p_seam", self.p_seam),
            ("p_b", self.bulk_data()),
            ("p_s", self.seam_data()),
        ] {
            if !(0.0..0.5).contains(&value) {
                return Err(NoiseError::OutOfRange { name, value });
            }
        }
        Ok(())
    }

    /// Bulk data-qubit flip probability `p_b = 4 p_bulk`.
    pub fn bulk_data(&self) -> f64 {
        BULK_GATES_PER_QUBIT * self.p_bulk
    }

    /// Bulk measurement error probability `q_b = p_b`.
    pub fn bulk_syndrome(&self) -> f64 {
        self.bulk_data()
    }

    /// Seam data-qubit flip probability `p_s = p_seam`.
    pub fn seam_data(&self) -> f64 {
        self.p_seam
    }

    /// Seam measurement error probability `q_s = p_s`.
    pub fn seam_syndrome(&self) -> f64 {
        self.seam_data()
    }

    pub fn probability(&self, kind: EdgeKind) -> f64 {
        match (kind.region, kind.orientation) {
            (Region::Bulk, Orientation::Space) => self.bulk_data(),
            (Region::Bulk, Orientation::Time) => self.bulk_syndrome(),
            (Region::Seam, Orientation::Space) => self.seam_data(),
            (Region::Seam, Orientation::Time) => self.seam_syndrome(),
        }
    }
}

/// Log-odds weight `ln((1 - p) / p)`; infinite for `p = 0`.
pub fn log_odds_weight(p: f64) -> f64 {
    if p <= 0.0 {
        f64::INFINITY
    } else {
        ((1.0 - p) / p).ln()
    }
}

/// Integer path cost of a weight. Every finite cost is at least 1.
pub fn quantize(weight: f64) -> i64 {
    if weight.is_infinite() {
        IMPASSABLE
    } else {
        ((weight * WEIGHT_SCALE).round() as i64).max(1)
    }
}

/// Matching graph with probabilities, weights, and precomputed shortest paths
/// to the boundary. Immutable once built.
#[derive(Debug, Clone)]
pub struct WeightedGraph {
    graph: MatchingGraph,
    params: NoiseParams,
    probabilities: Vec<f64>,
    weights: Vec<f64>,
    costs: Vec<i64>,
    thresholds: Vec<u64>,
    boundary_distance: Vec<i64>,
    boundary_pred: Vec<usize>,
}

pub fn assign_probabilities(
    graph: &MatchingGraph,
    params: NoiseParams,
) -> Result<WeightedGraph, NoiseError> {
    params.validate()?;
    let probabilities: Vec<f64> = graph
        .edges()
        .iter()
        .map(|e| params.probability(e.kind))
        .collect();
    Ok(WeightedGraph::from_probabilities(
        graph.clone(),
        params,
        probabilities,
    ))
}

impl WeightedGraph {
    /// Builds from explicit per-edge probabilities, each in `[0, 0.5)`.
    pub fn from_probabilities(
        graph: MatchingGraph,
        params: NoiseParams,
        probabilities: Vec<f64>,
    ) -> Self {
        assert_eq!(probabilities.len(), graph.num_edges());
        assert!(
            probabilities.iter().all(|p| (0.0..0.5).contains(p)),
            "edge probability outside [0, 0.5)"
        );
        let weights: Vec<f64> = probabilities.iter().map(|&p| log_odds_weight(p)).collect();
        let costs: Vec<i64> = weights.iter().map(|&w| quantize(w)).collect();
        let thresholds = probabilities.iter().map(|&p| flip_threshold(p)).collect();
        let (boundary_distance, boundary_pred) =
            shortest_path_tree(&graph, &costs, graph.boundary());
        Self {
            graph,
            params,
            probabilities,
            weights,
            costs,
            thresholds,
            boundary_distance,
            boundary_pred,
        }
    }

    pub fn graph(&self) -> &MatchingGraph {
        &self.graph
    }

    pub fn params(&self) -> NoiseParams {
        self.params
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn costs(&self) -> &[i64] {
        &self.costs
    }

    /// Total log-odds weight of an edge set.
    pub fn weight_of(&self, edges: &[usize]) -> f64 {
        edges.iter().map(|&e| self.weights[e]).sum()
    }

    /// Total integer cost of an edge set.
    pub fn cost_of(&self, edges: &[usize]) -> i64 {
        edges.iter().map(|&e| self.costs[e]).sum()
    }

    /// Shortest-path cost from `v` to the boundary, `IMPASSABLE` if unreachable.
    #[inline]
    pub fn boundary_distance(&self, v: usize) -> i64 {
        self.boundary_distance[v]
    }

    /// Edge leading from `v` one step closer to the boundary.
    #[inline]
    pub fn boundary_pred(&self, v: usize) -> usize {
        self.boundary_pred[v]
    }

    /// Edges of the shortest path from `v` to the boundary.
    pub fn boundary_path(&self, mut v: usize, out: &mut Vec<usize>) {
        let b = self.graph.boundary();
        while v != b {
            let e = self.boundary_pred[v];
            assert!(e != usize::MAX, "vertex {v} cannot reach the boundary");
            out.push(e);
            v = self.graph.edges()[e].other(v);
        }
    }

    pub fn dump(&self) -> String {
        self.graph.dump(Some(&self.weights))
    }

    /// Fills `flipped` with the sampled error pattern of one shot.
    pub fn sample_into(&self, seed: u64, shot: u64, flipped: &mut Vec<usize>) {
        flipped.clear();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(shot);
        for (e, &threshold) in self.thresholds.iter().enumerate() {
            if rng.next_u64() < threshold {
                flipped.push(e);
            }
        }
    }
}

fn flip_threshold(p: f64) -> u64 {
    (p * 18_446_744_073_709_551_616.0) as u64
}

/// Dijkstra from `source` over integer costs, skipping impassable edges.
/// Returns distances and, per vertex, the edge towards the source.
pub(crate) fn shortest_path_tree(
    graph: &MatchingGraph,
    costs: &[i64],
    source: usize,
) -> (Vec<i64>, Vec<usize>) {
    let n = graph.num_vertices();
    let mut dist = vec![IMPASSABLE; n];
    let mut pred = vec![usize::MAX; n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0;
    heap.push(Reverse((0i64, source)));
    while let Some(Reverse((d, v))) = heap.pop() {
        if d > dist[v] {
            continue;
        }
        for &(w, e) in graph.neighbours(v) {
            if costs[e] == IMPASSABLE {
                continue;
            }
            let nd = d + costs[e];
            if nd < dist[w] {
                dist[w] = nd;
                pred[w] = e;
                heap.push(Reverse((nd, w)));
            }
        }
    }
    (dist, pred)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorPattern {
    /// Flipped edge indices in increasing order.
    pub flipped: Vec<usize>,
    pub seed: u64,
    pub shot: u64,
}

/// Samples every edge independently. A pure function of `(seed, shot, edge)`.
pub fn sample_errors(weighted: &WeightedGraph, seed: u64, shot: u64) -> ErrorPattern {
    let mut flipped = Vec::new();
    weighted.sample_into(seed, shot, &mut flipped);
    ErrorPattern {
        flipped,
        seed,
        shot,
    }
}

/// Real vertices with odd flipped-edge incidence, sorted.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefectSet {
    pub vertices: Vec<usize>,
    /// Parity at the virtual boundary vertex.
    pub boundary_odd: bool,
}

impl DefectSet {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Symmetric difference of two defect sets.
    pub fn symmetric_difference(&self, other: &DefectSet) -> DefectSet {
        let mut vertices = Vec::with_capacity(self.len() + other.len());
        let (mut i, mut j) = (0, 0);
        while i < self.vertices.len() || j < other.vertices.len() {
            match (self.vertices.get(i), other.vertices.get(j)) {
                (Some(a), Some(b)) if a == b => {
                    i += 1;
                    j += 1;
                }
                (Some(a), Some(b)) if a < b => {
                    vertices.push(*a);
                    i += 1;
                }
                (Some(_), Some(b)) => {
                    vertices.push(*b);
                    j += 1;
                }
                (Some(a), None) => {
                    vertices.push(*a);
                    i += 1;
                }
                (None, Some(b)) => {
                    vertices.push(*b);
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        DefectSet {
            vertices,
            boundary_odd: self.boundary_odd ^ other.boundary_odd,
        }
    }
}

pub fn syndrome_of(graph: &MatchingGraph, flipped: &[usize]) -> DefectSet {
    let mut parity = vec![false; graph.num_vertices()];
    let mut out = DefectSet::default();
    syndrome_into(graph, flipped, &mut parity, &mut out);
    out
}

/// Allocation-free syndrome extraction. `parity` must be all-false on entry
/// and is left all-false on return.
pub fn syndrome_into(
    graph: &MatchingGraph,
    flipped: &[usize],
    parity: &mut [bool],
    out: &mut DefectSet,
) {
    let edges = graph.edges();
    let boundary = graph.boundary();
    for &e in flipped {
        parity[edges[e].u] ^= true;
        parity[edges[e].v] ^= true;
    }
    out.vertices.clear();
    for &e in flipped {
        for v in [edges[e].u, edges[e].v] {
            if parity[v] && v != boundary {
                out.vertices.push(v);
                parity[v] = false;
            }
        }
    }
    out.boundary_odd = parity[boundary];
    parity[boundary] = false;
    for &e in flipped {
        parity[edges[e].u] = false;
        parity[edges[e].v] = false;
    }
    out.vertices.sort_unstable();
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{build_graph, LatticeSpec};

    fn weighted(l: usize, t: usize, p_bulk: f64, p_seam: f64) -> WeightedGraph {
        let g = build_graph(&LatticeSpec::single_seam(l, t).unwrap());
        assign_probabilities(&g, NoiseParams::new(p_bulk, p_seam).unwrap()).unwrap()
    }

    #[test]
    fn substitutions() {
        let p = NoiseParams::new(0.0075, 0.10).unwrap();
        assert!((p.bulk_data() - 0.03).abs() < 1e-15);
        assert_eq!(p.bulk_syndrome(), p.bulk_data());
        assert_eq!(p.seam_data(), 0.10);
        assert_eq!(p.seam_syndrome(), 0.10);
    }

    #[test]
    fn rejects_probabilities_at_half() {
        assert!(NoiseParams::new(0.125, 0.0).is_err());
        assert!(NoiseParams::new(0.0, 0.5).is_err());
        assert!(NoiseParams::new(-0.1, 0.0).is_err());
        assert!(NoiseParams::new(0.124, 0.499).is_ok());
    }

    #[test]
    fn weight_limits() {
        assert!(log_odds_weight(0.0).is_infinite());
        assert!(log_odds_weight(0.5 - 1e-12) > 0.0);
        assert!(log_odds_weight(0.5 - 1e-12) < 1e-10);
        assert!((log_odds_weight(0.1) - 9f64.ln()).abs() < 1e-15);
        assert_eq!(quantize(f64::INFINITY), IMPASSABLE);
        assert_eq!(quantize(1e-12), 1);
    }

    #[test]
    fn zero_noise_never_flips() {
        let w = weighted(4, 2, 0.0, 0.0);
        for shot in 0..100 {
            assert!(sample_errors(&w, 3, shot).flipped.is_empty());
        }
        assert!(w.costs().iter().all(|&c| c == IMPASSABLE));
    }

    #[test]
    fn sampling_is_deterministic_per_shot() {
        let w = weighted(5, 5, 0.01, 0.08);
        let a: Vec<_> = (0..50).map(|s| sample_errors(&w, 9, s)).collect();
        let b: Vec<_> = (0..50).rev().map(|s| sample_errors(&w, 9, s)).collect();
        for (x, y) in a.iter().zip(b.iter().rev()) {
            assert_eq!(x, y);
        }
        assert_ne!(sample_errors(&w, 9, 0), sample_errors(&w, 10, 0));
    }

    #[test]
    fn flip_rates_match_probability() {
        let g = build_graph(&LatticeSpec::without_seam(3, 0).unwrap());
        let w = WeightedGraph::from_probabilities(
            g.clone(),
            NoiseParams::new(0.0, 0.0).unwrap(),
            vec![0.1; g.num_edges()],
        );
        let shots = 1_000_000u64;
        let mut counts = vec![0u64; g.num_edges()];
        let mut buf = Vec::new();
        for shot in 0..shots {
            w.sample_into(1, shot, &mut buf);
            for &e in &buf {
                counts[e] += 1;
            }
        }
        let sigma = (0.1 * 0.9 / shots as f64).sqrt();
        for (e, &c) in counts.iter().enumerate() {
            let rate = c as f64 / shots as f64;
            assert!((rate - 0.1).abs() < 4.0 * sigma, "edge {e}: {rate}");
        }
    }

    #[test]
    fn syndrome_examples() {
        let g = build_graph(&LatticeSpec::without_seam(4, 0).unwrap());
        assert!(syndrome_of(&g, &[]).is_empty());
        let e = g.horizontal_edge(1, 1, 0);
        let s = syndrome_of(&g, &[e]);
        assert_eq!(
            s.vertices,
            vec![g.check_index(1, 1, 0), g.check_index(2, 1, 0)]
        );
        let path = [
            g.horizontal_edge(0, 1, 0),
            g.horizontal_edge(1, 1, 0),
            g.horizontal_edge(2, 1, 0),
        ];
        let s = syndrome_of(&g, &path);
        assert_eq!(
            s.vertices,
            vec![g.check_index(0, 1, 0), g.check_index(3, 1, 0)]
        );
        let s = syndrome_of(&g, &[g.vertical_edge(2, 0, 0)]);
        assert_eq!(s.vertices, vec![g.check_index(2, 0, 0)]);
        assert!(s.boundary_odd);
    }

    #[test]
    fn boundary_tree_matches_hand_values() {
        let w = weighted(4, 0, 0.01, 0.01);
        let g = w.graph();
        let c = quantize(log_odds_weight(0.04));
        assert_eq!(w.boundary_distance(g.check_index(0, 0, 0)), c);
        assert_eq!(w.boundary_distance(g.check_index(0, 1, 0)), 2 * c);
        let mut path = Vec::new();
        w.boundary_path(g.check_index(3, 1, 0), &mut path);
        assert_eq!(path.len(), 2);
    }
}
