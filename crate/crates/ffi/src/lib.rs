//! C ABI over `diversity-core`.
//!
//! Every function returns a [`DvStatus`]. On failure the message is available
//! from [`dv_last_error_message`] on the same thread until the next call.
//! Objects are opaque handles created by `*_new`/`*_from_*`/`*_run` and
//! released with the matching `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use diversity_core::bench::{
    case_study_efficient_set, case_study_objectives, hausdorff, two_sample_ttest, welch_ttest,
};
use diversity_core::contributions::all_contributions;
use diversity_core::noah::{run_noah, NoahConfig, Phase, RunTrace};
use diversity_core::selection::{clique_via_energy, select, CliqueInstance, CliqueOutcome, Method};
use diversity_core::{evaluate, DistanceMatrix, Error, Graph, Indicator, Norm};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    /// The indicator has no value on the given subset.
    Undefined = 3,
    Io = 4,
    /// A Rust panic was caught at the boundary.
    Panic = 5,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DvIndicatorKind {
    MaxMin = 0,
    Riesz = 1,
    SolowPolasky = 2,
    Sum = 3,
}

/// Indicator choice. `param` is the Riesz exponent `s` or the
/// Solow-Polasky decay `theta`; ignored otherwise.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DvIndicator {
    pub kind: DvIndicatorKind,
    pub param: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DvPhase {
    Initial = 0,
    ObjectiveOpt = 1,
    BarrierLower = 2,
    DiversityOpt = 3,
}

/// Summary of one trace record. `hausdorff` is NaN when not measured.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DvTraceRecord {
    pub iteration: usize,
    pub phase: DvPhase,
    pub maxmin: f64,
    pub riesz_energy: f64,
    pub solow_polasky: f64,
    pub hausdorff: f64,
    pub population_size: usize,
}

/// Opaque distance matrix.
pub struct DvMatrix {
    inner: DistanceMatrix,
}

/// Opaque undirected graph.
pub struct DvGraph {
    inner: Graph,
}

/// Opaque NOAH run trace.
pub struct DvTrace {
    inner: RunTrace,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

/// Message of the last failed call on this thread, or NULL. The pointer is
/// valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn dv_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

struct Failure(DvStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Undefined { .. } => DvStatus::Undefined,
            Error::Io(_) => DvStatus::Io,
            _ => DvStatus::InvalidInput,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(DvStatus::NullPointer, format!("{what} is NULL"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(DvStatus::InvalidInput, msg.into())
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DvStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DvStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            DvStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

fn indicator(ind: DvIndicator) -> Result<Indicator, Failure> {
    Ok(match ind.kind {
        DvIndicatorKind::MaxMin => Indicator::MaxMin,
        DvIndicatorKind::Sum => Indicator::Sum,
        DvIndicatorKind::Riesz => Indicator::riesz(ind.param)?,
        DvIndicatorKind::SolowPolasky => Indicator::solow_polasky(ind.param)?,
    })
}

fn points_from(coords: &[f64], dim: usize) -> Vec<Vec<f64>> {
    coords.chunks(dim).map(<[f64]>::to_vec).collect()
}

fn planar_from(coords: &[f64]) -> Vec<[f64; 2]> {
    coords.chunks_exact(2).map(|c| [c[0], c[1]]).collect()
}

/// Euclidean distance matrix of `n` points of dimension `dim`, given
/// row-major in `coords` (`n * dim` values).
///
/// # Safety
/// `coords` must point to `n * dim` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dv_matrix_from_points(
    coords: *const f64,
    n: usize,
    dim: usize,
    out_matrix: *mut *mut DvMatrix,
) -> DvStatus {
    guard(|| {
        let out_matrix = out(out_matrix, "out_matrix")?;
        if dim == 0 {
            return Err(invalid("dim must be positive"));
        }
        let len = n.checked_mul(dim).ok_or_else(|| invalid("n * dim overflows"))?;
        let coords = slice(coords, len, "coords")?;
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(invalid("coordinates must be finite"));
        }
        let inner = DistanceMatrix::from_points(&points_from(coords, dim), Norm::L2)?;
        *out_matrix = Box::into_raw(Box::new(DvMatrix { inner }));
        Ok(())
    })
}

/// Distance matrix from `n * n` row-major entries, checked against the
/// similarity-space axioms.
///
/// # Safety
/// `entries` must point to `n * n` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dv_matrix_from_rows(
    entries: *const f64,
    n: usize,
    out_matrix: *mut *mut DvMatrix,
) -> DvStatus {
    guard(|| {
        let out_matrix = out(out_matrix, "out_matrix")?;
        let len = n.checked_mul(n).ok_or_else(|| invalid("n * n overflows"))?;
        let entries = slice(entries, len, "entries")?;
        let rows: Vec<Vec<f64>> = if n == 0 {
            Vec::new()
        } else {
            entries.chunks(n).map(<[f64]>::to_vec).collect()
        };
        let inner = DistanceMatrix::similarity(&rows)?;
        *out_matrix = Box::into_raw(Box::new(DvMatrix { inner }));
        Ok(())
    })
}

/// Loads a header-less CSV distance matrix.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dv_matrix_load_csv(path: *const c_char, out_matrix: *mut *mut DvMatrix) -> DvStatus {
    guard(|| {
        let out_matrix = out(out_matrix, "out_matrix")?;
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|e| invalid(format!("path is not UTF-8: {e}")))?;
        let inner = DistanceMatrix::read_csv(path)?;
        *out_matrix = Box::into_raw(Box::new(DvMatrix { inner }));
        Ok(())
    })
}

/// # Safety
/// `matrix` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dv_matrix_free(matrix: *mut DvMatrix) {
    if !matrix.is_null() {
        drop(Box::from_raw(matrix));
    }
}

/// # Safety
/// `matrix` must be a live handle; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dv_matrix_len(matrix: *const DvMatrix, out_len: *mut usize) -> DvStatus {
    guard(|| {
        *out(out_len, "out_len")? = handle(matrix, "matrix")?.inner.len();
        Ok(())
    })
}

fn subset_or_all(dm: &DistanceMatrix, subset: &[usize], all: bool) -> Vec<usize> {
    if all {
        dm.all_indices()
    } else {
        subset.to_vec()
    }
}

/// Indicator value of a subset. Pass `subset = NULL, len = 0` for all points.
///
/// # Safety
/// `subset` must point to `len` readable indices (or be NULL with `len = 0`).
#[no_mangle]
pub unsafe extern "C" fn dv_evaluate(
    matrix: *const DvMatrix,
    ind: DvIndicator,
    subset: *const usize,
    len: usize,
    out_value: *mut f64,
) -> DvStatus {
    guard(|| {
        let out_value = out(out_value, "out_value")?;
        let dm = &handle(matrix, "matrix")?.inner;
        let sub = subset_or_all(dm, slice(subset, len, "subset")?, subset.is_null());
        *out_value = evaluate(&indicator(ind)?, dm, &sub)?;
        Ok(())
    })
}

/// Contribution of every member of the subset, written to `out_values` in
/// subset order (`dv_matrix_len` values when `subset` is NULL). Undefined
/// entries are NaN.
///
/// # Safety
/// `out_values` must have room for one double per member.
#[no_mangle]
pub unsafe extern "C" fn dv_contributions(
    matrix: *const DvMatrix,
    ind: DvIndicator,
    subset: *const usize,
    len: usize,
    out_values: *mut f64,
) -> DvStatus {
    guard(|| {
        let dm = &handle(matrix, "matrix")?.inner;
        let sub = subset_or_all(dm, slice(subset, len, "subset")?, subset.is_null());
        if out_values.is_null() {
            return Err(null("out_values"));
        }
        let cv = all_contributions(&indicator(ind)?, dm, &sub)?;
        let dst = std::slice::from_raw_parts_mut(out_values, cv.values.len());
        for (d, v) in dst.iter_mut().zip(&cv.values) {
            *d = v.unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// Best `k`-subset by exhaustive search (`greedy = 0`) or greedily.
/// Writes `k` sorted indices to `out_subset`.
///
/// # Safety
/// `out_subset` must have room for `k` indices.
#[no_mangle]
pub unsafe extern "C" fn dv_select(
    matrix: *const DvMatrix,
    ind: DvIndicator,
    k: usize,
    greedy: c_int,
    out_subset: *mut usize,
    out_value: *mut f64,
) -> DvStatus {
    guard(|| {
        let dm = &handle(matrix, "matrix")?.inner;
        let out_value = out(out_value, "out_value")?;
        if out_subset.is_null() {
            return Err(null("out_subset"));
        }
        let method = if greedy != 0 {
            Method::Greedy
        } else {
            Method::BruteForce
        };
        let r = select(&indicator(ind)?, dm, k, method)?;
        std::slice::from_raw_parts_mut(out_subset, r.subset.len()).copy_from_slice(&r.subset);
        *out_value = r.value;
        Ok(())
    })
}

/// # Safety
/// `out_graph` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dv_graph_new(n: usize, out_graph: *mut *mut DvGraph) -> DvStatus {
    guard(|| {
        *out(out_graph, "out_graph")? = Box::into_raw(Box::new(DvGraph { inner: Graph::new(n) }));
        Ok(())
    })
}

/// # Safety
/// `graph` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dv_graph_add_edge(graph: *mut DvGraph, i: usize, j: usize) -> DvStatus {
    guard(|| {
        let g = graph.as_mut().ok_or_else(|| null("graph"))?;
        g.inner.add_edge(i, j)?;
        Ok(())
    })
}

/// # Safety
/// `graph` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dv_graph_free(graph: *mut DvGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Decides whether `graph` has a `k`-clique by minimizing Riesz `s`-energy
/// over its graph metric. On a clique, its vertices are written to
/// `out_clique` (room for `k` indices; may be NULL).
///
/// # Safety
/// Pointers must be valid as described.
#[no_mangle]
pub unsafe extern "C" fn dv_clique_via_energy(
    graph: *const DvGraph,
    k: usize,
    s: f64,
    out_has_clique: *mut c_int,
    out_clique: *mut usize,
    out_min_energy: *mut f64,
) -> DvStatus {
    guard(|| {
        let g = &handle(graph, "graph")?.inner;
        let has = out(out_has_clique, "out_has_clique")?;
        let energy = out(out_min_energy, "out_min_energy")?;
        let rep = clique_via_energy(&CliqueInstance { graph: g.clone(), k, s })?;
        *energy = rep.min_energy;
        match rep.outcome {
            CliqueOutcome::HasClique(c) => {
                *has = 1;
                if !out_clique.is_null() {
                    std::slice::from_raw_parts_mut(out_clique, c.len()).copy_from_slice(&c);
                }
            }
            CliqueOutcome::NoClique => *has = 0,
        }
        Ok(())
    })
}

/// Hausdorff distance between two planar point sets given as `x, y` pairs.
///
/// # Safety
/// `a` and `b` must point to `2 * na` and `2 * nb` doubles.
#[no_mangle]
pub unsafe extern "C" fn dv_hausdorff(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    out_value: *mut f64,
) -> DvStatus {
    guard(|| {
        let out_value = out(out_value, "out_value")?;
        let a = planar_from(slice(a, 2 * na, "a")?);
        let b = planar_from(slice(b, 2 * nb, "b")?);
        *out_value = hausdorff(&a, &b)?;
        Ok(())
    })
}

/// Two-sided two-sample t-test, pooled variance unless `welch != 0`.
///
/// # Safety
/// `a` and `b` must point to `na` and `nb` doubles.
#[no_mangle]
pub unsafe extern "C" fn dv_ttest(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    welch: c_int,
    out_t: *mut f64,
    out_p: *mut f64,
) -> DvStatus {
    guard(|| {
        let (a, b) = (slice(a, na, "a")?, slice(b, nb, "b")?);
        let r = if welch != 0 {
            welch_ttest(a, b)?
        } else {
            two_sample_ttest(a, b)?
        };
        *out(out_t, "out_t")? = r.t;
        *out(out_p, "out_p")? = r.p;
        Ok(())
    })
}

/// Runs NOAH on the case-study objectives. `config` is `key = value` text
/// (NULL for defaults). With `with_hausdorff != 0` the trace records the
/// distance to the case-study efficient set.
///
/// # Safety
/// `config` must be NULL or NUL-terminated; `out_trace` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dv_noah_run(
    config: *const c_char,
    with_hausdorff: c_int,
    out_trace: *mut *mut DvTrace,
) -> DvStatus {
    guard(|| {
        let out_trace = out(out_trace, "out_trace")?;
        let cfg = if config.is_null() {
            NoahConfig::default()
        } else {
            let text = CStr::from_ptr(config)
                .to_str()
                .map_err(|e| invalid(format!("config is not UTF-8: {e}")))?;
            NoahConfig::parse(text.as_bytes())?
        };
        let reference = if with_hausdorff != 0 {
            Some(case_study_efficient_set()?.members())
        } else {
            None
        };
        let inner = run_noah(&cfg, &case_study_objectives, reference.as_deref())?;
        *out_trace = Box::into_raw(Box::new(DvTrace { inner }));
        Ok(())
    })
}

/// # Safety
/// `trace` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn dv_trace_free(trace: *mut DvTrace) {
    if !trace.is_null() {
        drop(Box::from_raw(trace));
    }
}

/// Number of records in the trace.
///
/// # Safety
/// `trace` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn dv_trace_len(trace: *const DvTrace, out_len: *mut usize) -> DvStatus {
    guard(|| {
        *out(out_len, "out_len")? = handle(trace, "trace")?.inner.records.len();
        Ok(())
    })
}

/// # Safety
/// `trace` must be a live handle; `out_record` must be writable.
#[no_mangle]
pub unsafe extern "C" fn dv_trace_record(
    trace: *const DvTrace,
    index: usize,
    out_record: *mut DvTraceRecord,
) -> DvStatus {
    guard(|| {
        let t = &handle(trace, "trace")?.inner;
        let r = t
            .records
            .get(index)
            .ok_or_else(|| invalid(format!("record {index} out of range for {}", t.records.len())))?;
        *out(out_record, "out_record")? = DvTraceRecord {
            iteration: r.iteration,
            phase: match r.phase {
                Phase::Initial => DvPhase::Initial,
                Phase::ObjectiveOpt => DvPhase::ObjectiveOpt,
                Phase::BarrierLower => DvPhase::BarrierLower,
                Phase::DiversityOpt => DvPhase::DiversityOpt,
            },
            maxmin: r.maxmin,
            riesz_energy: r.riesz_energy,
            solow_polasky: r.solow_polasky,
            hausdorff: r.hausdorff.unwrap_or(f64::NAN),
            population_size: r.population.len(),
        };
        Ok(())
    })
}

/// Copies the population of record `index` as `x, y` pairs into `out_xy`,
/// which must hold `2 * capacity` doubles; fails if `capacity` is too small.
///
/// # Safety
/// `out_xy` must point to `2 * capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn dv_trace_population(
    trace: *const DvTrace,
    index: usize,
    out_xy: *mut f64,
    capacity: usize,
    out_written: *mut usize,
) -> DvStatus {
    guard(|| {
        let t = &handle(trace, "trace")?.inner;
        let r = t
            .records
            .get(index)
            .ok_or_else(|| invalid(format!("record {index} out of range for {}", t.records.len())))?;
        let written = out(out_written, "out_written")?;
        if r.population.len() > capacity {
            return Err(invalid(format!(
                "capacity {capacity} < population size {}",
                r.population.len()
            )));
        }
        if out_xy.is_null() {
            return Err(null("out_xy"));
        }
        let dst = std::slice::from_raw_parts_mut(out_xy, 2 * r.population.len());
        for (d, p) in dst.chunks_exact_mut(2).zip(&r.population) {
            d.copy_from_slice(p);
        }
        *written = r.population.len();
        Ok(())
    })
}
