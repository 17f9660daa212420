//! Exact minimum-weight perfect-matching decoder.
//!
//! Defects are joined by shortest paths over integer edge costs. Each defect
//! also gets a boundary image; images are joined to each other at zero cost,
//! so a perfect matching of defects plus images is a minimum-weight pairing in
//! which any defect may instead terminate on the boundary.
//!
//! Two exact reductions keep the matching problem small:
//! * a pair `(i, j)` with `d(i, j) >= b(i) + b(j)` is dropped, since sending
//!   both defects to the boundary is never worse, and the shortest-path search
//!   from `i` only expands vertices `v` with `d(i, v) < b(i) + b(v)`;
//! * defects are split into connected components of the retained pairs and
//!   each component is matched on its own, with image edges only mirroring
//!   retained pairs.

pub mod blossom;

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::noise::{DefectSet, WeightedGraph, IMPASSABLE};
use blossom::min_weight_perfect_matching;

const NONE: usize = usize::MAX;

/// Recovery edge set `{R}` with its total weight.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Correction {
    /// Edge indices in increasing order.
    pub edges: Vec<usize>,
    /// Total log-odds weight.
    pub weight: f64,
    /// Total integer cost.
    pub cost: i64,
}

/// Node `k < n` is defect `k`; node `n + k` is its boundary image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DefectGraph {
    pub defects: Vec<usize>,
    /// Shortest-path cost of each defect to the boundary.
    pub boundary_cost: Vec<i64>,
    /// `(i, j, cost)` with `i < j`, in increasing `(i, j)` order.
    pub pairs: Vec<(usize, usize, i64)>,
}

impl DefectGraph {
    pub fn num_nodes(&self) -> usize {
        2 * self.defects.len()
    }

    /// All edges of the matching instance: defect pairs, image pairs, and
    /// defect-to-image edges.
    pub fn matching_edges(&self) -> Vec<(usize, usize, i64)> {
        let n = self.defects.len();
        let mut out = Vec::with_capacity(2 * self.pairs.len() + n);
        for &(i, j, c) in &self.pairs {
            out.push((i, j, c));
            out.push((n + i, n + j, 0));
        }
        for (i, &b) in self.boundary_cost.iter().enumerate() {
            if b != IMPASSABLE {
                out.push((i, n + i, b));
            }
        }
        out
    }

    /// Line-oriented dump: `u v pair cost` and `u B boundary cost`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for &(i, j, c) in &self.pairs {
            let _ = writeln!(out, "{} {} pair {}", self.defects[i], self.defects[j], c);
        }
        for (i, &b) in self.boundary_cost.iter().enumerate() {
            if b != IMPASSABLE {
                let _ = writeln!(out, "{} B boundary {}", self.defects[i], b);
            }
        }
        out
    }
}

/// Pairing returned by the matcher: `partner[i]` is the other defect or
/// `None` when defect `i` is sent to the boundary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pairing {
    pub partner: Vec<Option<usize>>,
    pub cost: i64,
}

/// Exact minimum-cost pairing of a defect graph.
///
/// # Panics
/// If no pairing exists, which means some defect can reach neither the
/// boundary nor a partner.
pub fn blossom_match(dg: &DefectGraph) -> Pairing {
    let n = dg.defects.len();
    let mut partner = vec![None; n];
    let mut cost = 0i64;
    for component in components(n, &dg.pairs) {
        let (p, c) = match_component(dg, &component);
        cost += c;
        for (k, &i) in component.iter().enumerate() {
            partner[i] = p[k].map(|m| component[m]);
        }
    }
    Pairing { partner, cost }
}

fn components(n: usize, pairs: &[(usize, usize, i64)]) -> Vec<Vec<usize>> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], mut x: usize) -> usize {
        while p[x] != x {
            p[x] = p[p[x]];
            x = p[x];
        }
        x
    }
    for &(i, j, _) in pairs {
        let (a, b) = (find(&mut parent, i), find(&mut parent, j));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut slot = vec![NONE; n];
    let mut out: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        let r = find(&mut parent, i);
        if slot[r] == NONE {
            slot[r] = out.len();
            out.push(Vec::new());
        }
        out[slot[r]].push(i);
    }
    out
}

/// Matches one component; entries of the result index into `component`.
fn match_component(dg: &DefectGraph, component: &[usize]) -> (Vec<Option<usize>>, i64) {
    let k = component.len();
    if k == 1 {
        let b = dg.boundary_cost[component[0]];
        assert!(
            b != IMPASSABLE,
            "defect {} is isolated",
            dg.defects[component[0]]
        );
        return (vec![None], b);
    }
    let mut local = vec![NONE; dg.defects.len()];
    for (idx, &i) in component.iter().enumerate() {
        local[i] = idx;
    }
    let mut edges = Vec::new();
    for &(i, j, c) in &dg.pairs {
        if local[i] != NONE {
            edges.push((local[i], local[j], c));
            edges.push((k + local[i], k + local[j], 0));
        }
    }
    for (idx, &i) in component.iter().enumerate() {
        let b = dg.boundary_cost[i];
        if b != IMPASSABLE {
            edges.push((idx, k + idx, b));
        }
    }
    let (mate, cost) = min_weight_perfect_matching(2 * k, &edges)
        .unwrap_or_else(|e| panic!("defect graph has no perfect matching: {e}"));
    let partner = (0..k)
        .map(|i| if mate[i] < k { Some(mate[i]) } else { None })
        .collect();
    (partner, cost)
}

/// Reusable decoder state for one worker.
pub struct Decoder<'a> {
    weighted: &'a WeightedGraph,
    dist: Vec<i64>,
    pred: Vec<usize>,
    stamp: Vec<u32>,
    generation: u32,
    heap: BinaryHeap<Reverse<(i64, usize)>>,
    defect_slot: Vec<usize>,
    edge_flag: Vec<bool>,
    touched: Vec<usize>,
    potential: Vec<i64>,
    potential_touched: Vec<usize>,
}

impl<'a> Decoder<'a> {
    pub fn new(weighted: &'a WeightedGraph) -> Self {
        let n = weighted.graph().num_vertices();
        Self {
            weighted,
            dist: vec![IMPASSABLE; n],
            pred: vec![NONE; n],
            stamp: vec![0; n],
            generation: 0,
            heap: BinaryHeap::new(),
            defect_slot: vec![NONE; n],
            edge_flag: vec![false; weighted.graph().num_edges()],
            touched: Vec::new(),
            potential: vec![IMPASSABLE; n],
            potential_touched: Vec::new(),
        }
    }

    pub fn weighted(&self) -> &'a WeightedGraph {
        self.weighted
    }

    fn next_generation(&mut self) {
        self.generation = self.generation.wrapping_add(1);
        if self.generation == 0 {
            self.stamp.iter_mut().for_each(|s| *s = 0);
            self.generation = 1;
        }
    }

    #[inline]
    fn distance(&self, v: usize) -> i64 {
        if self.stamp[v] == self.generation {
            self.dist[v]
        } else {
            IMPASSABLE
        }
    }

    #[inline]
    fn relax(&mut self, v: usize, d: i64, via: usize) -> bool {
        if d < self.distance(v) {
            self.stamp[v] = self.generation;
            self.dist[v] = d;
            self.pred[v] = via;
            true
        } else {
            false
        }
    }

    /// Builds the defect graph. With `prune`, pairs that can never beat two
    /// boundary matches are left out; otherwise all reachable pairs appear.
    pub fn defect_graph(&mut self, defects: &DefectSet, prune: bool) -> DefectGraph {
        let w = self.weighted;
        let list = &defects.vertices;
        for (i, &v) in list.iter().enumerate() {
            self.defect_slot[v] = i;
        }
        let boundary_cost: Vec<i64> = list.iter().map(|&v| w.boundary_distance(v)).collect();
        let mut pairs = Vec::new();
        let use_potential = prune && boundary_cost.iter().all(|&b| b != IMPASSABLE);

        // Searches run from the last defect backwards. With the potential
        // h(v) = min over later defects j of d(v, j) - b(j), the search from
        // i only expands v while d(i, v) < b(i) - h(v): every vertex on a
        // shortest path to a useful partner j satisfies that bound.
        for i in (0..list.len()).rev() {
            let bi = boundary_cost[i];
            if i + 1 < list.len() {
                self.next_generation();
                self.heap.clear();
                self.relax(list[i], 0, NONE);
                self.heap.push(Reverse((0, list[i])));
                while let Some(Reverse((d, v))) = self.heap.pop() {
                    if d > self.distance(v) {
                        continue;
                    }
                    let j = self.defect_slot[v];
                    if j != NONE && j > i && (!prune || d < bi.saturating_add(boundary_cost[j])) {
                        pairs.push((i, j, d));
                    }
                    let expand = if use_potential {
                        let h = self.potential[v];
                        h != IMPASSABLE && d < bi - h
                    } else {
                        !prune || d < bi.saturating_add(w.boundary_distance(v))
                    };
                    if expand {
                        self.push_neighbours(v, d);
                    }
                }
            }
            if use_potential {
                self.add_to_potential(list[i], -bi);
            }
        }
        for &v in list {
            self.defect_slot[v] = NONE;
        }
        for &v in &self.potential_touched {
            self.potential[v] = IMPASSABLE;
        }
        self.potential_touched.clear();
        pairs.sort_unstable();
        DefectGraph {
            defects: list.clone(),
            boundary_cost,
            pairs,
        }
    }

    #[inline]
    fn push_neighbours(&mut self, v: usize, d: i64) {
        let w = self.weighted;
        let graph = w.graph();
        let boundary = graph.boundary();
        let costs = w.costs();
        for &(u, e) in graph.neighbours(v) {
            if u == boundary || costs[e] == IMPASSABLE {
                continue;
            }
            let nd = d + costs[e];
            if self.relax(u, nd, e) {
                self.heap.push(Reverse((nd, u)));
            }
        }
    }

    /// Lowers the potential field by a new source with offset `start`.
    fn add_to_potential(&mut self, src: usize, start: i64) {
        let w = self.weighted;
        let graph = w.graph();
        let boundary = graph.boundary();
        let costs = w.costs();
        self.heap.clear();
        if start < self.potential[src] {
            if self.potential[src] == IMPASSABLE {
                self.potential_touched.push(src);
            }
            self.potential[src] = start;
            self.heap.push(Reverse((start, src)));
        }
        while let Some(Reverse((d, v))) = self.heap.pop() {
            if d > self.potential[v] {
                continue;
            }
            for &(u, e) in graph.neighbours(v) {
                if u == boundary || costs[e] == IMPASSABLE {
                    continue;
                }
                let nd = d + costs[e];
                if nd < self.potential[u] {
                    if self.potential[u] == IMPASSABLE {
                        self.potential_touched.push(u);
                    }
                    self.potential[u] = nd;
                    self.heap.push(Reverse((nd, u)));
                }
            }
        }
    }

    /// Shortest path between two real vertices avoiding the boundary vertex.
    fn path_between(&mut self, src: usize, dst: usize, out: &mut Vec<usize>) {
        self.next_generation();
        self.heap.clear();
        self.relax(src, 0, NONE);
        self.heap.push(Reverse((0, src)));
        while let Some(Reverse((d, v))) = self.heap.pop() {
            if d > self.distance(v) {
                continue;
            }
            if v == dst {
                break;
            }
            self.push_neighbours(v, d);
        }
        assert!(
            self.distance(dst) != IMPASSABLE,
            "no path between {src} and {dst}"
        );
        let edges = self.weighted.graph().edges();
        let mut v = dst;
        while v != src {
            let e = self.pred[v];
            out.push(e);
            v = edges[e].other(v);
        }
    }

    pub fn decode(&mut self, defects: &DefectSet) -> Correction {
        if defects.is_empty() {
            return Correction::default();
        }
        let dg = self.defect_graph(defects, true);
        let pairing = blossom_match(&dg);
        self.read_out(&dg, &pairing)
    }

    /// Symmetric difference of the matched paths.
    pub fn read_out(&mut self, dg: &DefectGraph, pairing: &Pairing) -> Correction {
        let mut path = Vec::new();
        for (i, p) in pairing.partner.iter().enumerate() {
            path.clear();
            match *p {
                Some(j) if j > i => self.path_between(dg.defects[i], dg.defects[j], &mut path),
                Some(_) => continue,
                None => self.weighted.boundary_path(dg.defects[i], &mut path),
            }
            for &e in &path {
                if !self.edge_flag[e] {
                    self.touched.push(e);
                }
                self.edge_flag[e] ^= true;
            }
        }
        let mut edges: Vec<usize> = Vec::with_capacity(self.touched.len());
        for &e in &self.touched {
            if self.edge_flag[e] {
                edges.push(e);
            }
            self.edge_flag[e] = false;
        }
        self.touched.clear();
        edges.sort_unstable();
        let weight = self.weighted.weight_of(&edges);
        let cost = self.weighted.cost_of(&edges);
        Correction {
            edges,
            weight,
            cost,
        }
    }
}

/// All-pairs defect graph without pruning.
pub fn defect_distances(weighted: &WeightedGraph, defects: &DefectSet) -> DefectGraph {
    Decoder::new(weighted).defect_graph(defects, false)
}

pub fn decode(weighted: &WeightedGraph, defects: &DefectSet) -> Correction {
    Decoder::new(weighted).decode(defects)
}
