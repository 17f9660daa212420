use std::ffi::{c_char, CStr};
use std::ptr;

use seamsim::experiments::estimate_weighted;
use seamsim::oracle::exact_failure_probability;
use seamsim::{assign_probabilities, build_graph, LatticeSpec, NoiseParams};
use seamsim_ffi::*;

fn new_code(
    distance: usize,
    rounds: usize,
    seams: u32,
    p_bulk: f64,
    p_seam: f64,
) -> *mut SeamsimCode {
    let mut code = ptr::null_mut();
    let status = unsafe { seamsim_code_new(distance, rounds, seams, 2, p_bulk, p_seam, &mut code) };
    assert_eq!(status, SeamsimStatus::Ok, "{}", last_error());
    assert!(!code.is_null());
    code
}

fn last_error() -> String {
    let needed = unsafe { seamsim_last_error(ptr::null_mut(), 0) };
    if needed == 0 {
        return String::new();
    }
    let mut buf = vec![0 as c_char; needed];
    unsafe { seamsim_last_error(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn handle_reports_graph_size() {
    let code = new_code(4, 2, 1, 0.01, 0.1);
    let graph = build_graph(&LatticeSpec::single_seam(4, 2).unwrap());
    unsafe {
        assert_eq!(seamsim_code_num_vertices(code), graph.num_vertices());
        assert_eq!(seamsim_code_num_edges(code), graph.num_edges());
        seamsim_code_free(code);
        assert_eq!(seamsim_code_num_edges(ptr::null()), 0);
        seamsim_code_free(ptr::null_mut());
    }
}

#[test]
fn estimate_matches_library_for_any_worker_count() {
    let code = new_code(4, 4, 1, 0.008, 0.1);
    let weighted = assign_probabilities(
        &build_graph(&LatticeSpec::single_seam(4, 4).unwrap()),
        NoiseParams::new(0.008, 0.1).unwrap(),
    )
    .unwrap();
    let expected = estimate_weighted(&weighted, 2000, 11).unwrap();
    for workers in [0, 1, 3] {
        let mut est = SeamsimEstimate::default();
        let status = unsafe { seamsim_estimate(code, 2000, 11, workers, &mut est) };
        assert_eq!(status, SeamsimStatus::Ok);
        assert_eq!(
            (est.shots, est.failures),
            (expected.shots, expected.failures)
        );
        assert_eq!(
            (est.ci_low, est.ci_high),
            (expected.ci_low, expected.ci_high)
        );
    }
    unsafe { seamsim_code_free(code) };
}

#[test]
fn exact_probability_and_budget() {
    let code = new_code(3, 0, 1, 0.02, 0.1);
    let weighted = assign_probabilities(
        &build_graph(&LatticeSpec::single_seam(3, 0).unwrap()),
        NoiseParams::new(0.02, 0.1).unwrap(),
    )
    .unwrap();
    let mut p = f64::NAN;
    assert_eq!(
        unsafe { seamsim_exact_failure_probability(code, &mut p) },
        SeamsimStatus::Ok
    );
    assert_eq!(p, exact_failure_probability(&weighted).unwrap());
    unsafe { seamsim_code_free(code) };

    let big = new_code(6, 6, 1, 0.01, 0.1);
    let mut q = -1.0;
    assert_eq!(
        unsafe { seamsim_exact_failure_probability(big, &mut q) },
        SeamsimStatus::BudgetExceeded
    );
    assert_eq!(q, -1.0, "output untouched on failure");
    assert!(last_error().contains("budget"), "{}", last_error());
    unsafe { seamsim_code_free(big) };
}

#[test]
fn invalid_arguments_set_last_error() {
    let mut code = ptr::null_mut();
    let s = unsafe { seamsim_code_new(4, 4, 3, 2, 0.01, 0.1, &mut code) };
    assert_eq!(s, SeamsimStatus::InvalidArgument);
    assert!(code.is_null());
    assert!(last_error().contains("seams"));

    let s = unsafe { seamsim_code_new(4, 4, 1, 2, -0.1, 0.1, &mut code) };
    assert_eq!(s, SeamsimStatus::InvalidArgument);
    assert!(!last_error().is_empty());

    let s = unsafe { seamsim_code_new(4, 4, 1, 2, 0.01, 0.1, ptr::null_mut()) };
    assert_eq!(s, SeamsimStatus::NullPointer);
    assert_eq!(last_error(), "out is null");

    let mut est = SeamsimEstimate::default();
    assert_eq!(
        unsafe { seamsim_estimate(ptr::null(), 10, 1, 0, &mut est) },
        SeamsimStatus::NullPointer
    );
    let code = new_code(3, 1, 0, 0.01, 0.0);
    assert_eq!(
        unsafe { seamsim_estimate(code, 0, 1, 0, &mut est) },
        SeamsimStatus::InvalidArgument
    );
    unsafe { seamsim_code_free(code) };
}

#[test]
fn last_error_truncates_to_buffer() {
    let mut code = ptr::null_mut();
    unsafe { seamsim_code_new(4, 4, 9, 2, 0.01, 0.1, &mut code) };
    let full = last_error();
    let mut buf = [1 as c_char; 6];
    let needed = unsafe { seamsim_last_error(buf.as_mut_ptr(), buf.len()) };
    assert_eq!(needed, full.len() + 1);
    let short = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap();
    assert_eq!(short, &full[..5]);
}

#[test]
fn bounds_rows_converge_and_diverge() {
    let mut row = SeamsimBoundsRow::default();
    assert_eq!(
        unsafe { seamsim_bounds_row(2, 3, 0.005, 20, 2, &mut row) },
        SeamsimStatus::Ok
    );
    assert_eq!(row.distance, 20);
    assert!((row.p_s - 0.005 * 100.0 / 36.0).abs() < 1e-15);
    assert!(row.cross_bound.is_finite() && row.sagged_single_seam > 0.0);
    assert!(row.sagged_two_seam <= row.sagged_single_seam);

    assert_eq!(
        unsafe { seamsim_bounds_row(2, 3, 0.01, 20, 2, &mut row) },
        SeamsimStatus::Ok
    );
    assert!(row.cross_bound.is_infinite() && row.equal_ratio_bound.is_infinite());
    assert_eq!((row.sagged_single_seam, row.sagged_two_seam), (0.0, 0.0));

    assert_eq!(
        unsafe { seamsim_bounds_row(3, 3, 0.005, 20, 2, &mut row) },
        SeamsimStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { seamsim_bounds_row(2, 3, 0.005, 20, 1, &mut row) },
        SeamsimStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { seamsim_bounds_row(2, 3, 0.7, 20, 2, &mut row) },
        SeamsimStatus::InvalidArgument
    );
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(seamsim_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
