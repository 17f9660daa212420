//! Matching graph of the bit-flip decoder for an unrotated surface code that
//! spans two modules.
//!
//! Check vertices sit on an `L x (L-1)` grid per time slice: `x` runs over the
//! `L` columns and `y` over the `L-1` check rows. Each data qubit is one
//! space-like edge. Vertical edges come in `L` rows per slice; row `0` joins
//! the top check row to the virtual boundary vertex and row `L-1` joins the
//! bottom check row to it, so a top-to-bottom chain of `L` vertical edges is a
//! logical `X` operator. Horizontal edges join neighbouring checks of one row.
//!
//! With `rounds = T > 0` there are `T + 1` slices of checks. Slices `0..T` are
//! noisy measurement rounds and carry time-like edges to the next slice; the
//! final slice is a perfect readout round and has no outgoing time edges.
//!
//! A seam column `c` marks the data qubits of vertical column `c` (all slices)
//! together with the measurement edges of the checks in column `c`. That pair
//! of sheets is the `(1+1)`-dimensional seam sublattice.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("distance must be at least 2 (got {0})")]
    DistanceTooSmall(usize),
    #[error("at most two seams are supported (got {0})")]
    TooManySeams(usize),
    #[error("seam column {column} outside [0, {max}]")]
    SeamOutOfRange { column: usize, max: usize },
    #[error("seam columns must be strictly increasing")]
    SeamsNotIncreasing,
    #[error("two seams need separation h >= 2 (got {0})")]
    SeamsTooClose(usize),
    #[error("seam separation h = {h} does not fit in distance {distance}")]
    SeparationTooLarge { h: usize, distance: usize },
}

/// Shape of a simulated code block.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeSpec {
    distance: usize,
    rounds: usize,
    seam_columns: Vec<usize>,
}

impl LatticeSpec {
    pub fn new(
        distance: usize,
        rounds: usize,
        seam_columns: Vec<usize>,
    ) -> Result<Self, LatticeError> {
        if distance < 2 {
            return Err(LatticeError::DistanceTooSmall(distance));
        }
        if seam_columns.len() > 2 {
            return Err(LatticeError::TooManySeams(seam_columns.len()));
        }
        for &column in &seam_columns {
            if column >= distance {
                return Err(LatticeError::SeamOutOfRange {
                    column,
                    max: distance - 1,
                });
            }
        }
        if seam_columns.len() == 2 {
            if seam_columns[0] >= seam_columns[1] {
                return Err(LatticeError::SeamsNotIncreasing);
            }
            let h = seam_columns[1] - seam_columns[0];
            if h < 2 {
                return Err(LatticeError::SeamsTooClose(h));
            }
        }
        Ok(Self {
            distance,
            rounds,
            seam_columns,
        })
    }

    pub fn without_seam(distance: usize, rounds: usize) -> Result<Self, LatticeError> {
        Self::new(distance, rounds, Vec::new())
    }

    /// One seam at the central column `floor(L/2)`.
    pub fn single_seam(distance: usize, rounds: usize) -> Result<Self, LatticeError> {
        Self::new(distance, rounds, vec![distance / 2])
    }

    /// Two seams at `floor(L/2) - ceil(h/2)` and that column plus `h`.
    pub fn double_seam(distance: usize, rounds: usize, h: usize) -> Result<Self, LatticeError> {
        if h < 2 {
            return Err(LatticeError::SeamsTooClose(h));
        }
        let centre = distance / 2;
        let shift = h.div_ceil(2);
        if shift > centre || centre - shift + h >= distance {
            return Err(LatticeError::SeparationTooLarge { h, distance });
        }
        let first = centre - shift;
        Self::new(distance, rounds, vec![first, first + h])
    }

    pub fn distance(&self) -> usize {
        self.distance
    }

    pub fn rounds(&self) -> usize {
        self.rounds
    }

    pub fn seam_columns(&self) -> &[usize] {
        &self.seam_columns
    }

    /// Column separation `h` when two seams are present.
    pub fn separation(&self) -> Option<usize> {
        match self.seam_columns.as_slice() {
            [a, b] => Some(b - a),
            _ => None,
        }
    }

    pub fn is_seam_column(&self, x: usize) -> bool {
        self.seam_columns.contains(&x)
    }

    pub fn slices(&self) -> usize {
        self.rounds + 1
    }

    pub fn checks_per_slice(&self) -> usize {
        self.distance * (self.distance - 1)
    }

    pub fn num_real_vertices(&self) -> usize {
        self.checks_per_slice() * self.slices()
    }

    pub fn num_space_edges(&self) -> usize {
        let l = self.distance;
        (l * l + (l - 1) * (l - 1)) * self.slices()
    }

    pub fn num_time_edges(&self) -> usize {
        self.checks_per_slice() * self.rounds
    }

    pub fn num_edges(&self) -> usize {
        self.num_space_edges() + self.num_time_edges()
    }
}

impl fmt::Display for LatticeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "L={} T={} seams={:?}",
            self.distance, self.rounds, self.seam_columns
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Bulk,
    Seam,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Orientation {
    /// A data qubit at one time slice.
    Space,
    /// A syndrome measurement between consecutive slices.
    Time,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EdgeKind {
    pub region: Region,
    pub orientation: Orientation,
}

impl Region {
    pub fn as_str(self) -> &'static str {
        match self {
            Region::Bulk => "bulk",
            Region::Seam => "seam",
        }
    }
}

impl Orientation {
    pub fn as_str(self) -> &'static str {
        match self {
            Orientation::Space => "space",
            Orientation::Time => "time",
        }
    }
}

/// Where an edge lives on the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Site {
    /// Data qubit in column `x`, vertical row `row` in `0..L`.
    Vertical { x: usize, row: usize, t: usize },
    /// Data qubit between checks `(x, y)` and `(x + 1, y)`.
    Horizontal { x: usize, y: usize, t: usize },
    /// Measurement of check `(x, y)` in round `t`, joining slices `t` and `t + 1`.
    Time { x: usize, y: usize, t: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Vertex {
    Check { x: usize, y: usize, t: usize },
    Boundary,
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Vertex::Check { x, y, t } => write!(f, "{x},{y},{t}"),
            Vertex::Boundary => f.write_str("B"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub index: usize,
    pub u: usize,
    pub v: usize,
    pub kind: EdgeKind,
    pub site: Site,
}

impl Edge {
    pub fn other(&self, w: usize) -> usize {
        if w == self.u {
            self.v
        } else {
            self.u
        }
    }
}

/// Immutable decoding graph. Vertex indices `0..num_real_vertices()` are
/// checks, ordered `t`, then `y`, then `x`; the last index is the boundary.
#[derive(Debug, Clone)]
pub struct MatchingGraph {
    spec: LatticeSpec,
    vertices: Vec<Vertex>,
    edges: Vec<Edge>,
    adjacency_offsets: Vec<usize>,
    adjacency: Vec<(usize, usize)>,
    logical_cut: Vec<usize>,
    in_logical_cut: Vec<bool>,
}

pub fn build_graph(spec: &LatticeSpec) -> MatchingGraph {
    MatchingGraph::new(spec.clone())
}

impl MatchingGraph {
    pub fn new(spec: LatticeSpec) -> Self {
        let l = spec.distance;
        let slices = spec.slices();
        let per_slice = spec.checks_per_slice();
        let num_real = spec.num_real_vertices();
        let boundary = num_real;

        let mut vertices = Vec::with_capacity(num_real + 1);
        for t in 0..slices {
            for y in 0..l - 1 {
                for x in 0..l {
                    vertices.push(Vertex::Check { x, y, t });
                }
            }
        }
        vertices.push(Vertex::Boundary);

        let check = |x: usize, y: usize, t: usize| t * per_slice + y * l + x;
        let region_of = |x: usize| {
            if spec.is_seam_column(x) {
                Region::Seam
            } else {
                Region::Bulk
            }
        };

        let mut edges = Vec::with_capacity(spec.num_edges());
        let mut push =
            |u: usize, v: usize, region: Region, orientation: Orientation, site: Site| {
                let index = edges.len();
                edges.push(Edge {
                    index,
                    u,
                    v,
                    kind: EdgeKind {
                        region,
                        orientation,
                    },
                    site,
                });
            };
        for t in 0..slices {
            for y in 0..l {
                for x in 0..l {
                    let upper = if y == 0 { boundary } else { check(x, y - 1, t) };
                    let lower = if y == l - 1 { boundary } else { check(x, y, t) };
                    push(
                        upper,
                        lower,
                        region_of(x),
                        Orientation::Space,
                        Site::Vertical { x, row: y, t },
                    );
                    if y < l - 1 {
                        if x < l - 1 {
                            push(
                                check(x, y, t),
                                check(x + 1, y, t),
                                Region::Bulk,
                                Orientation::Space,
                                Site::Horizontal { x, y, t },
                            );
                        }
                        if t < spec.rounds {
                            push(
                                check(x, y, t),
                                check(x, y, t + 1),
                                region_of(x),
                                Orientation::Time,
                                Site::Time { x, y, t },
                            );
                        }
                    }
                }
            }
        }
        debug_assert_eq!(edges.len(), spec.num_edges());

        let mut degree = vec![0usize; vertices.len()];
        for e in &edges {
            degree[e.u] += 1;
            degree[e.v] += 1;
        }
        let mut adjacency_offsets = Vec::with_capacity(vertices.len() + 1);
        adjacency_offsets.push(0);
        for d in &degree {
            adjacency_offsets.push(adjacency_offsets.last().unwrap() + d);
        }
        let mut fill = adjacency_offsets.clone();
        let mut adjacency = vec![(0, 0); *adjacency_offsets.last().unwrap()];
        for e in &edges {
            adjacency[fill[e.u]] = (e.v, e.index);
            fill[e.u] += 1;
            adjacency[fill[e.v]] = (e.u, e.index);
            fill[e.v] += 1;
        }

        let logical_cut = cut_edges(&edges, 0);
        let mut in_logical_cut = vec![false; edges.len()];
        for &e in &logical_cut {
            in_logical_cut[e] = true;
        }

        Self {
            spec,
            vertices,
            edges,
            adjacency_offsets,
            adjacency,
            logical_cut,
            in_logical_cut,
        }
    }

    pub fn spec(&self) -> &LatticeSpec {
        &self.spec
    }

    pub fn vertices(&self) -> &[Vertex] {
        &self.vertices
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn boundary(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn is_boundary(&self, v: usize) -> bool {
        v == self.boundary()
    }

    /// `(neighbour, edge index)` pairs incident to `v`.
    #[inline]
    pub fn neighbours(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[self.adjacency_offsets[v]..self.adjacency_offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency_offsets[v + 1] - self.adjacency_offsets[v]
    }

    pub fn check_index(&self, x: usize, y: usize, t: usize) -> usize {
        let l = self.spec.distance;
        t * self.spec.checks_per_slice() + y * l + x
    }

    /// Index of the vertical edge in column `x`, row `row`, slice `t`.
    pub fn vertical_edge(&self, x: usize, row: usize, t: usize) -> usize {
        self.find_edge(Site::Vertical { x, row, t })
    }

    pub fn horizontal_edge(&self, x: usize, y: usize, t: usize) -> usize {
        self.find_edge(Site::Horizontal { x, y, t })
    }

    pub fn time_edge(&self, x: usize, y: usize, t: usize) -> usize {
        self.find_edge(Site::Time { x, y, t })
    }

    fn find_edge(&self, site: Site) -> usize {
        self.edges
            .iter()
            .position(|e| e.site == site)
            .unwrap_or_else(|| panic!("no edge at {site:?}"))
    }

    /// Edges whose flip parity decides logical failure: every vertical edge
    /// in row 0 over all slices.
    pub fn logical_cut(&self) -> &[usize] {
        &self.logical_cut
    }

    pub fn in_logical_cut(&self, edge: usize) -> bool {
        self.in_logical_cut[edge]
    }

    /// The horizontal cut made of vertical row `row` at every slice.
    pub fn cut_at_row(&self, row: usize) -> Vec<usize> {
        assert!(row < self.spec.distance, "cut row {row} out of range");
        cut_edges(&self.edges, row)
    }

    /// Parity of `|flipped ∩ logical_cut|`.
    pub fn logical_cut_parity<I>(&self, flipped: I) -> bool
    where
        I: IntoIterator<Item = usize>,
    {
        flipped
            .into_iter()
            .filter(|&e| self.in_logical_cut[e])
            .count()
            % 2
            == 1
    }

    pub fn edges_in_region(&self, region: Region) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.kind.region == region)
    }

    /// Text dump, one edge per line: `index u v region orientation weight`.
    pub fn dump(&self, weights: Option<&[f64]>) -> String {
        let mut out = String::new();
        for e in &self.edges {
            let w = weights.map_or(0.0, |w| w[e.index]);
            let _ = writeln!(
                out,
                "{} {} {} {} {} {}",
                e.index,
                self.vertices[e.u],
                self.vertices[e.v],
                e.kind.region.as_str(),
                e.kind.orientation.as_str(),
                w
            );
        }
        out
    }
}

fn cut_edges(edges: &[Edge], row: usize) -> Vec<usize> {
    edges
        .iter()
        .filter(|e| matches!(e.site, Site::Vertical { row: r, .. } if r == row))
        .map(|e| e.index)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(l: usize, t: usize, seams: Vec<usize>) -> MatchingGraph {
        build_graph(&LatticeSpec::new(l, t, seams).unwrap())
    }

    #[test]
    fn distance_three_perfect_syndromes() {
        let g = graph(3, 0, vec![]);
        assert_eq!(g.num_vertices(), 7);
        assert_eq!(g.spec().num_real_vertices(), 6);
        let vertical = g
            .edges()
            .iter()
            .filter(|e| matches!(e.site, Site::Vertical { .. }))
            .count();
        let horizontal = g
            .edges()
            .iter()
            .filter(|e| matches!(e.site, Site::Horizontal { .. }))
            .count();
        assert_eq!(vertical, 9);
        assert_eq!(horizontal, 4);
        assert_eq!(g.num_edges(), 13);
        assert_eq!(g.logical_cut().len(), 3);
        assert!(g
            .edges()
            .iter()
            .all(|e| e.kind.orientation == Orientation::Space));
    }

    #[test]
    fn single_seam_marks_one_column() {
        let g = graph(3, 0, vec![1]);
        let seam: Vec<_> = g.edges_in_region(Region::Seam).collect();
        assert_eq!(seam.len(), 3);
        assert!(seam
            .iter()
            .all(|e| e.kind.orientation == Orientation::Space));
        assert!(seam
            .iter()
            .all(|e| matches!(e.site, Site::Vertical { x: 1, .. })));
    }

    #[test]
    fn seam_sheet_counts_with_noisy_rounds() {
        let g = graph(3, 3, vec![1]);
        let space = g
            .edges_in_region(Region::Seam)
            .filter(|e| e.kind.orientation == Orientation::Space)
            .count();
        let time = g
            .edges_in_region(Region::Seam)
            .filter(|e| e.kind.orientation == Orientation::Time)
            .count();
        // L * (T + 1) data edges and (L - 1) * T measurement edges
        assert_eq!(space, 12);
        assert_eq!(time, 6);
    }

    #[test]
    fn count_formulas_hold_by_enumeration() {
        for l in 2..=12 {
            for t in [0, l] {
                let spec = LatticeSpec::single_seam(l, t).unwrap();
                let g = build_graph(&spec);
                assert_eq!(g.num_vertices(), l * (l - 1) * (t + 1) + 1);
                let space = g
                    .edges()
                    .iter()
                    .filter(|e| e.kind.orientation == Orientation::Space)
                    .count();
                let time = g
                    .edges()
                    .iter()
                    .filter(|e| e.kind.orientation == Orientation::Time)
                    .count();
                assert_eq!(space, (l * l + (l - 1) * (l - 1)) * (t + 1));
                assert_eq!(time, l * (l - 1) * t);
                assert_eq!(g.logical_cut().len(), l * (t + 1));
                let seam = g.edges_in_region(Region::Seam).count();
                assert_eq!(seam, l * (t + 1) + (l - 1) * t);
                for v in 0..g.boundary() {
                    assert!(g.degree(v) >= 2, "vertex {v} has degree {}", g.degree(v));
                }
                for (i, e) in g.edges().iter().enumerate() {
                    assert_eq!(e.index, i);
                }
            }
        }
    }

    #[test]
    fn construction_is_deterministic() {
        let a = graph(5, 5, vec![1, 4]);
        let b = graph(5, 5, vec![1, 4]);
        assert_eq!(a.edges(), b.edges());
        assert_eq!(a.dump(None), b.dump(None));
    }

    #[test]
    fn edge_order_is_slice_row_column() {
        let g = graph(3, 2, vec![]);
        let key = |e: &Edge| match e.site {
            Site::Vertical { x, row, t } => (t, row, x, 0),
            Site::Horizontal { x, y, t } => (t, y, x, 1),
            Site::Time { x, y, t } => (t, y, x, 2),
        };
        let keys: Vec<_> = g.edges().iter().map(key).collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
    }

    #[test]
    fn cut_parity_examples() {
        let g = graph(3, 0, vec![1]);
        assert!(!g.logical_cut_parity(std::iter::empty()));
        let column: Vec<usize> = (0..3).map(|row| g.vertical_edge(1, row, 0)).collect();
        assert!(g.logical_cut_parity(column.iter().copied()));
        // plaquette between columns 0,1 and check rows 0,1
        let plaquette = [
            g.horizontal_edge(0, 0, 0),
            g.horizontal_edge(0, 1, 0),
            g.vertical_edge(0, 1, 0),
            g.vertical_edge(1, 1, 0),
        ];
        assert!(!g.logical_cut_parity(plaquette.iter().copied()));
    }

    #[test]
    fn seam_sublattice_is_connected() {
        let g = graph(6, 6, vec![3]);
        let seam_edges: Vec<&Edge> = g.edges_in_region(Region::Seam).collect();
        let mut touched: Vec<usize> = seam_edges.iter().flat_map(|e| [e.u, e.v]).collect();
        touched.sort_unstable();
        touched.dedup();
        let mut parent: Vec<usize> = (0..g.num_vertices()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in &seam_edges {
            let (a, b) = (find(&mut parent, e.u), find(&mut parent, e.v));
            parent[a] = b;
        }
        let root = find(&mut parent, touched[0]);
        assert!(touched.iter().all(|&v| find(&mut parent, v) == root));
        // 5 checks x 7 slices in the column, plus the boundary
        assert_eq!(touched.len(), 5 * 7 + 1);
    }

    #[test]
    fn rejects_bad_seams() {
        assert_eq!(
            LatticeSpec::new(3, 0, vec![3]),
            Err(LatticeError::SeamOutOfRange { column: 3, max: 2 })
        );
        assert_eq!(
            LatticeSpec::new(5, 0, vec![1, 2]),
            Err(LatticeError::SeamsTooClose(1))
        );
        assert_eq!(
            LatticeSpec::new(5, 0, vec![3, 1]),
            Err(LatticeError::SeamsNotIncreasing)
        );
        assert_eq!(
            LatticeSpec::new(1, 0, vec![]),
            Err(LatticeError::DistanceTooSmall(1))
        );
        assert_eq!(
            LatticeSpec::double_seam(8, 8, 1),
            Err(LatticeError::SeamsTooClose(1))
        );
        assert!(LatticeSpec::double_seam(4, 4, 4).is_err());
    }

    #[test]
    fn default_double_seam_placement() {
        let spec = LatticeSpec::double_seam(8, 8, 3).unwrap();
        assert_eq!(spec.seam_columns(), &[2, 5]);
        assert_eq!(spec.separation(), Some(3));
        let spec = LatticeSpec::double_seam(4, 4, 3).unwrap();
        assert_eq!(spec.seam_columns(), &[0, 3]);
    }

    #[test]
    fn dump_format() {
        let g = graph(2, 0, vec![1]);
        let dump = g.dump(None);
        let first = dump.lines().next().unwrap();
        assert_eq!(first, "0 B 0,0,0 bulk space 0");
        assert_eq!(dump.lines().count(), g.num_edges());
    }
}
