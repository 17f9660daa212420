//! Exhaustive checks on graphs small enough to enumerate every edge subset.
//! The reference here walks all `2^E` subsets directly and shares no code
//! with the decoder or the oracle module.

use proptest::prelude::*;
use seamsim::lattice::{build_graph, LatticeSpec, MatchingGraph};
use seamsim::noise::{assign_probabilities, syndrome_of, NoiseParams, WeightedGraph};
use seamsim::oracle::exact_failure_probability;
use seamsim::Decoder;

/// Exact failure probability of the decoder on the L=3, T=0 graph without a
/// seam and every edge flipping with probability 0.05. Frozen from the first
/// verified run; the test below brackets it independently.
const FROZEN_L3_T0_P005: f64 = 4.914_993_564_781_247_6e-2;

/// Minimum cost per (syndrome, cut parity), with a witness subset.
struct SubsetTable {
    num_real: usize,
    best: Vec<[(i64, u64); 2]>,
}

fn subset_table(w: &WeightedGraph) -> SubsetTable {
    let g = w.graph();
    let e = g.num_edges();
    assert!(e <= 24, "too many edges to enumerate: {e}");
    let num_real = g.num_vertices() - 1;
    let masks: Vec<u64> = g
        .edges()
        .iter()
        .map(|ed| {
            [ed.u, ed.v]
                .iter()
                .filter(|&&x| x < num_real)
                .fold(0u64, |m, &x| m ^ 1 << x)
        })
        .collect();
    let mut best = vec![[(i64::MAX, 0u64); 2]; 1 << num_real];
    for subset in 0u64..1 << e {
        let mut syn = 0u64;
        let mut cost = 0i64;
        let mut parity = 0usize;
        let mut finite = true;
        for k in 0..e {
            if subset >> k & 1 == 1 {
                syn ^= masks[k];
                let c = w.costs()[k];
                if c == i64::MAX {
                    finite = false;
                    break;
                }
                cost += c;
                parity ^= g.in_logical_cut(k) as usize;
            }
        }
        if finite && cost < best[syn as usize][parity].0 {
            best[syn as usize][parity] = (cost, subset);
        }
    }
    SubsetTable { num_real, best }
}

fn edges_of(subset: u64, e: usize) -> Vec<usize> {
    (0..e).filter(|&k| subset >> k & 1 == 1).collect()
}

fn assert_decoder_is_exact(w: &WeightedGraph) {
    let g = w.graph();
    let table = subset_table(w);
    let mut decoder = Decoder::new(w);
    let mut checked = 0;
    for entry in &table.best {
        let cheapest = entry.iter().min_by_key(|c| c.0).unwrap();
        if cheapest.0 == i64::MAX {
            continue;
        }
        let defects = syndrome_of(g, &edges_of(cheapest.1, g.num_edges()));
        let correction = decoder.decode(&defects);
        assert_eq!(
            correction.cost, cheapest.0,
            "syndrome {:?}",
            defects.vertices
        );
        assert_eq!(syndrome_of(g, &correction.edges), defects);
        checked += 1;
    }
    assert!(checked > 1 && table.num_real > 0);
}

/// Failure probability with decoder ties counted as success and as failure.
fn failure_bracket(w: &WeightedGraph) -> (f64, f64) {
    let g: &MatchingGraph = w.graph();
    let table = subset_table(w);
    let e = g.num_edges();
    let p = w.probabilities();
    let num_real = g.num_vertices() - 1;
    let (mut lower, mut upper) = (0.0, 0.0);
    for subset in 0u64..1 << e {
        let mut prob = 1.0;
        let mut syn = 0usize;
        let mut parity = 0usize;
        for (k, ed) in g.edges().iter().enumerate() {
            if subset >> k & 1 == 1 {
                prob *= p[k];
                for x in [ed.u, ed.v] {
                    if x < num_real {
                        syn ^= 1 << x;
                    }
                }
                parity ^= g.in_logical_cut(k) as usize;
            } else {
                prob *= 1.0 - p[k];
            }
        }
        let same = table.best[syn][parity].0;
        let other = table.best[syn][1 - parity].0;
        if other < same {
            lower += prob;
            upper += prob;
        } else if other == same {
            upper += prob;
        }
    }
    (lower, upper)
}

fn uniform_l3() -> WeightedGraph {
    let spec = LatticeSpec::without_seam(3, 0).unwrap();
    let w =
        assign_probabilities(&build_graph(&spec), NoiseParams::new(0.0125, 0.0).unwrap()).unwrap();
    assert!(w.probabilities().iter().all(|&q| q == 0.05));
    w
}

#[test]
fn decoder_is_exact_on_distance_three() {
    for (seam, pb, ps) in [(false, 0.01, 0.0), (true, 0.01, 0.1), (true, 0.002, 0.3)] {
        let spec = if seam {
            LatticeSpec::single_seam(3, 0)
        } else {
            LatticeSpec::without_seam(3, 0)
        }
        .unwrap();
        let w =
            assign_probabilities(&build_graph(&spec), NoiseParams::new(pb, ps).unwrap()).unwrap();
        assert_decoder_is_exact(&w);
    }
}

#[test]
fn frozen_failure_probability() {
    let w = uniform_l3();
    let exact = exact_failure_probability(&w).unwrap();
    let (lower, upper) = failure_bracket(&w);
    eprintln!("uniform L=3: ties bracket [{lower:.6e}, {upper:.6e}], decoder {exact:.6e}");
    assert!(
        lower <= exact * (1.0 + 1e-12) && exact <= upper * (1.0 + 1e-12),
        "{lower} <= {exact} <= {upper}"
    );
    assert!(
        (exact - FROZEN_L3_T0_P005).abs() <= 1e-12 * exact,
        "exact = {exact:.17e}"
    );
}

#[test]
fn distinct_weights_fix_the_failure_probability() {
    let graph = build_graph(&LatticeSpec::single_seam(3, 0).unwrap());
    let p = (0..graph.num_edges())
        .map(|k| 0.02 + 0.1 * ((k as f64 * 0.618_034).fract()))
        .collect();
    let w = WeightedGraph::from_probabilities(graph, NoiseParams::new(0.0, 0.0).unwrap(), p);
    let (lower, upper) = failure_bracket(&w);
    assert!(
        (upper - lower).abs() <= 1e-15,
        "unexpected ties: {lower} {upper}"
    );
    let exact = exact_failure_probability(&w).unwrap();
    assert!((exact - lower).abs() <= 1e-12 * lower, "{exact} vs {lower}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn decoder_is_exact_for_random_weights(probs in prop::collection::vec(0.001f64..0.45, 12..=12)) {
        let graph = build_graph(&LatticeSpec::single_seam(3, 0).unwrap());
        let e = graph.num_edges();
        let p: Vec<f64> = (0..e).map(|k| probs[k % probs.len()] * (1.0 + k as f64 / 97.0).min(1.1)).collect();
        let w = WeightedGraph::from_probabilities(graph, NoiseParams::new(0.0, 0.0).unwrap(), p);
        assert_decoder_is_exact(&w);
    }
}
