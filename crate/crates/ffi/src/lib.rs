//! C ABI for `seamsim`.
//!
//! A code is an opaque [`SeamsimCode`] handle made by [`seamsim_code_new`] and
//! released with [`seamsim_code_free`]. Fallible calls return a
//! [`SeamsimStatus`]; on failure the calling thread's last error message is
//! available through [`seamsim_last_error`]. Output parameters are written
//! only on success. Handles may be shared across threads for reading.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use seamsim::bounds::{bounds_row, connectivity_constants, BoundsError};
use seamsim::experiments::{estimate_weighted, with_workers};
use seamsim::oracle::{exact_failure_probability, OracleError};
use seamsim::{assign_probabilities, build_graph, LatticeSpec, NoiseParams, WeightedGraph};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeamsimStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The exhaustive oracle would exceed its enumeration budget.
    BudgetExceeded = 3,
    /// A Rust panic was caught at the boundary.
    Internal = 4,
}

/// A weighted matching graph: lattice geometry plus noise.
pub struct SeamsimCode {
    weighted: WeightedGraph,
}

/// Monte Carlo logical failure estimate with its 95% Wilson interval.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SeamsimEstimate {
    pub shots: u64,
    pub failures: u64,
    pub p_fail: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Bound evaluations at one bulk error rate, with the seam rate on the
/// equal-ratio line. Divergent bounds are `INFINITY`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SeamsimBoundsRow {
    pub p_b: f64,
    pub p_s: f64,
    pub distance: usize,
    /// Homogeneous walk bound on the seam alone.
    pub seam_homogeneous: f64,
    /// Homogeneous walk bound on the bulk alone.
    pub bulk_homogeneous: f64,
    /// Bound on chains that cross the seam with bulk excursions.
    pub cross_bound: f64,
    /// Cross bound on the equal-ratio line with the rigorous corner constant.
    pub equal_ratio_bound: f64,
    /// Decoupled bulk-plus-seam model.
    pub decoupled_model: f64,
    /// Single-seam threshold sagged by bulk noise.
    pub sagged_single_seam: f64,
    /// Two-seam threshold sagged by bulk noise.
    pub sagged_two_seam: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(SeamsimStatus, String);

fn invalid(e: impl std::fmt::Display) -> Failure {
    Failure(SeamsimStatus::InvalidArgument, e.to_string())
}

/// Runs `f`, recording any failure or panic as the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SeamsimStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SeamsimStatus::Ok,
        Ok(Err(Failure(status, message))) => {
            set_last_error(message);
            status
        }
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(format!("internal error: {message}"));
            SeamsimStatus::Internal
        }
    }
}

fn non_null<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    // SAFETY: the caller guarantees `p` is null or points to a live `T`.
    unsafe { p.as_ref() }
        .ok_or_else(|| Failure(SeamsimStatus::NullPointer, format!("{name} is null")))
}

fn out_ptr<T>(p: *mut T, name: &str) -> Result<*mut T, Failure> {
    if p.is_null() {
        Err(Failure(
            SeamsimStatus::NullPointer,
            format!("{name} is null"),
        ))
    } else {
        Ok(p)
    }
}

/// Builds a code of the given distance with `rounds` noisy measurement rounds
/// and `seams` seams (0, 1 or 2; `separation` is read only for 2).
/// `p_bulk` is the per-gate bulk error rate and `p_seam` the seam rate.
///
/// # Safety
/// `out` must be valid for writing one pointer.
#[no_mangle]
pub unsafe extern "C" fn seamsim_code_new(
    distance: usize,
    rounds: usize,
    seams: u32,
    separation: usize,
    p_bulk: f64,
    p_seam: f64,
    out: *mut *mut SeamsimCode,
) -> SeamsimStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let spec = match seams {
            0 => LatticeSpec::without_seam(distance, rounds),
            1 => LatticeSpec::single_seam(distance, rounds),
            2 => LatticeSpec::double_seam(distance, rounds, separation),
            n => return Err(invalid(format!("seams must be 0, 1 or 2 (got {n})"))),
        }
        .map_err(invalid)?;
        let params = NoiseParams::new(p_bulk, p_seam).map_err(invalid)?;
        let weighted = assign_probabilities(&build_graph(&spec), params).map_err(invalid)?;
        // SAFETY: `out` is non-null and writable per the contract.
        unsafe { *out = Box::into_raw(Box::new(SeamsimCode { weighted })) };
        Ok(())
    })
}

/// Releases a handle from [`seamsim_code_new`]. Null is ignored.
///
/// # Safety
/// `code` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn seamsim_code_free(code: *mut SeamsimCode) {
    if !code.is_null() {
        // SAFETY: the handle came from `Box::into_raw` and is freed once.
        drop(unsafe { Box::from_raw(code) });
    }
}

/// Number of matching-graph vertices including the boundary, or 0 for null.
///
/// # Safety
/// `code` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn seamsim_code_num_vertices(code: *const SeamsimCode) -> usize {
    // SAFETY: forwarded caller contract.
    unsafe { code.as_ref() }.map_or(0, |c| c.weighted.graph().num_vertices())
}

/// Number of error locations (graph edges), or 0 for null.
///
/// # Safety
/// `code` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn seamsim_code_num_edges(code: *const SeamsimCode) -> usize {
    // SAFETY: forwarded caller contract.
    unsafe { code.as_ref() }.map_or(0, |c| c.weighted.graph().num_edges())
}

/// Estimates the logical failure probability from `shots` decoded samples.
/// Results depend only on `seed`, never on `workers` (0 uses all cores).
///
/// # Safety
/// `code` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn seamsim_estimate(
    code: *const SeamsimCode,
    shots: u64,
    seed: u64,
    workers: usize,
    out: *mut SeamsimEstimate,
) -> SeamsimStatus {
    guard(|| {
        let code = non_null(code, "code")?;
        let out = out_ptr(out, "out")?;
        let run = || estimate_weighted(&code.weighted, shots, seed);
        let est = if workers == 0 {
            run()
        } else {
            with_workers(workers, run)
        }
        .map_err(invalid)?;
        let value = SeamsimEstimate {
            shots: est.shots,
            failures: est.failures,
            p_fail: est.p_fail,
            ci_low: est.ci_low,
            ci_high: est.ci_high,
        };
        // SAFETY: `out` is non-null and writable per the contract.
        unsafe { out.write(value) };
        Ok(())
    })
}

/// Exact logical failure probability by exhaustive enumeration. Returns
/// `SEAMSIM_STATUS_BUDGET_EXCEEDED` for graphs too large to enumerate.
///
/// # Safety
/// `code` must be a live handle and `out` valid for writing.
#[no_mangle]
pub unsafe extern "C" fn seamsim_exact_failure_probability(
    code: *const SeamsimCode,
    out: *mut f64,
) -> SeamsimStatus {
    guard(|| {
        let code = non_null(code, "code")?;
        let out = out_ptr(out, "out")?;
        let p = exact_failure_probability(&code.weighted).map_err(|e| match e {
            OracleError::BudgetExceeded { .. } => {
                Failure(SeamsimStatus::BudgetExceeded, e.to_string())
            }
            other => invalid(other),
        })?;
        // SAFETY: `out` is non-null and writable per the contract.
        unsafe { out.write(p) };
        Ok(())
    })
}

/// Evaluates the walk-counting bounds for a `ds`-dimensional seam in a
/// `db`-dimensional bulk at bulk rate `p_b`, code distance `distance` and
/// seam separation `h`.
///
/// # Safety
/// `out` must be valid for writing.
#[no_mangle]
pub unsafe extern "C" fn seamsim_bounds_row(
    ds: u32,
    db: u32,
    p_b: f64,
    distance: usize,
    h: usize,
    out: *mut SeamsimBoundsRow,
) -> SeamsimStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        if !(0.0..0.5).contains(&p_b) {
            return Err(invalid(format!("p_b must lie in [0, 0.5) (got {p_b})")));
        }
        let params = connectivity_constants(ds, db).map_err(invalid)?;
        let r = bounds_row(p_b, distance, h, &params).map_err(|e: BoundsError| invalid(e))?;
        let value = SeamsimBoundsRow {
            p_b: r.p_b,
            p_s: r.p_s,
            distance: r.l,
            seam_homogeneous: r.seam_homogeneous,
            bulk_homogeneous: r.bulk_homogeneous,
            cross_bound: r.cross_bound,
            equal_ratio_bound: r.equal_ratio_bound,
            decoupled_model: r.decoupled_model,
            sagged_single_seam: r.p_1s_star,
            sagged_two_seam: r.p_2s_star,
        };
        // SAFETY: `out` is non-null and writable per the contract.
        unsafe { out.write(value) };
        Ok(())
    })
}

/// Copies the calling thread's last error message into `buf` as a
/// nul-terminated string, truncating to `len` bytes. Returns the buffer size
/// needed for the whole message, or 0 if there is none. `buf` may be null to
/// query the size.
///
/// # Safety
/// `buf` must be null or valid for writing `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn seamsim_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(message) = e.as_ref() else { return 0 };
        let bytes = message.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            // SAFETY: `buf` holds `len >= n` bytes per the contract.
            unsafe {
                ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
                *buf.add(n - 1) = 0;
            }
        }
        bytes.len()
    })
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn seamsim_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
