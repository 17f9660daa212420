//! Monte Carlo estimates against exact values and expected scaling.

use seamsim::experiments::sweep::monotone_within_ci;
use seamsim::experiments::{estimate, estimate_weighted, grid_points, sweep, GridAxis, SweepMode};
use seamsim::lattice::{build_graph, LatticeSpec};
use seamsim::noise::{assign_probabilities, NoiseParams};
use seamsim::oracle::{exact_failure_probability, MinWeightTable};
use seamsim::Decoder;

#[test]
fn uniform_distance_three_matches_exact() {
    let spec = LatticeSpec::without_seam(3, 0).unwrap();
    let w =
        assign_probabilities(&build_graph(&spec), NoiseParams::new(0.0125, 0.0).unwrap()).unwrap();
    let exact = exact_failure_probability(&w).unwrap();
    let est = estimate_weighted(&w, 100_000, 17).unwrap();
    let z = (est.p_fail - exact).abs() / est.sigma();
    assert!(z <= 3.0, "mc {} exact {exact} z {z}", est.p_fail);
}

#[test]
fn seam_graph_with_rounds_matches_exact() {
    let spec = LatticeSpec::single_seam(3, 1).unwrap();
    let w =
        assign_probabilities(&build_graph(&spec), NoiseParams::new(0.01, 0.12).unwrap()).unwrap();
    let exact = exact_failure_probability(&w).unwrap();
    let est = estimate_weighted(&w, 100_000, 3).unwrap();
    assert!(
        (est.p_fail - exact).abs() <= 3.0 * est.sigma(),
        "mc {} exact {exact}",
        est.p_fail
    );
}

#[test]
fn distance_four_seam_decoding_is_exact() {
    let spec = LatticeSpec::single_seam(4, 0).unwrap();
    let w =
        assign_probabilities(&build_graph(&spec), NoiseParams::new(0.003, 0.2).unwrap()).unwrap();
    let table = MinWeightTable::build(&w).unwrap();
    let mut decoder = Decoder::new(&w);
    let mut checked = 0;
    for defects in table.reachable() {
        let best = table.lookup(&w, &defects).unwrap();
        assert_eq!(
            decoder.decode(&defects).cost,
            best.cost,
            "{:?}",
            defects.vertices
        );
        checked += 1;
    }
    assert_eq!(checked, table.num_syndromes());
}

#[test]
fn larger_codes_suppress_failures_below_threshold() {
    let params = NoiseParams::new(0.004, 0.0).unwrap();
    let small = estimate(
        &LatticeSpec::without_seam(4, 4).unwrap(),
        params,
        100_000,
        5,
    )
    .unwrap();
    let large = estimate(
        &LatticeSpec::without_seam(8, 8).unwrap(),
        params,
        100_000,
        5,
    )
    .unwrap();
    assert!(
        large.ci_high < small.ci_low,
        "L=4 {:?} L=8 {:?}",
        small,
        large
    );
}

#[test]
fn failure_rate_grows_with_bulk_noise() {
    let axis = GridAxis::new(0.002, 0.012, 6).unwrap();
    let points = grid_points(SweepMode::RatioLocked { ratio: 14.0 }, &[4], None, &axis).unwrap();
    let rows = sweep(&points, 4000, 9, &[]).unwrap();
    assert!(monotone_within_ci(
        &rows,
        SweepMode::RatioLocked { ratio: 14.0 }
    ));
    assert!(rows.last().unwrap().p_fail > rows[0].p_fail);
}
