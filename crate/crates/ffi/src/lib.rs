//! C interface to `realmono`.
//!
//! Every object crosses the boundary as an opaque pointer owned by the caller
//! and released with its `*_free` function. Fallible calls return an
//! [`RmStatus`]; on failure [`rm_last_error`] describes the problem for the
//! calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use realmono::cli::CliError;
use realmono::cmono::{monodromy_group, GroupOptions};
use realmono::polysys::{builtin, parse_system, BuiltinName, PolySystem, RPoint};
use realmono::regionmap::{build_region_map, grid_scan, MapOptions, RegionMap, ScanOptions, Window};
use realmono::rms::{real_monodromy, RmsOptions, RmsResult};
use realmono::solver::{check_generic, solve_labeled, SolutionSet};
use realmono::tracker::TrackOptions;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RmStatus {
    Ok = 0,
    NullPointer = 1,
    Numerical = 2,
    InvalidInput = 3,
    Panic = 4,
}

pub struct RmSystem(PolySystem);
pub struct RmSolutions(SolutionSet);
pub struct RmRegionMap(RegionMap);
pub struct RmStructure(RmsResult);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(e: CliError) -> RmStatus {
    set_error(e.to_string());
    match e {
        CliError::Input(_) => RmStatus::InvalidInput,
        CliError::Numerical(_) => RmStatus::Numerical,
    }
}

/// Runs `f`, turning panics into `RmStatus::Panic`.
fn guard(f: impl FnOnce() -> RmStatus) -> RmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => s,
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            RmStatus::Panic
        }
    }
}

macro_rules! deref {
    ($p:expr) => {
        match unsafe { $p.as_ref() } {
            Some(v) => v,
            None => {
                set_error(format!("null pointer: {}", stringify!($p)));
                return RmStatus::NullPointer;
            }
        }
    };
}

macro_rules! out_ptr {
    ($p:expr) => {
        if $p.is_null() {
            set_error(format!("null pointer: {}", stringify!($p)));
            return RmStatus::NullPointer;
        }
    };
}

unsafe fn str_arg<'a>(s: *const c_char) -> Option<&'a str> {
    if s.is_null() {
        None
    } else {
        CStr::from_ptr(s).to_str().ok()
    }
}

unsafe fn slice_arg<'a>(p: *const f64, n: usize) -> Option<&'a [f64]> {
    if n == 0 {
        Some(&[])
    } else if p.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(p, n))
    }
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("no interior nul").into_raw()
}

/// Message for the last failed call on this thread, or null. Valid until the next failing call.
#[no_mangle]
pub extern "C" fn rm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a builtin system by name (`ex21`, `univariate`, `modified34`, `kuramoto3`, `rpr3`).
///
/// # Safety
/// `name` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rm_system_builtin(name: *const c_char, out: *mut *mut RmSystem) -> RmStatus {
    guard(|| {
        out_ptr!(out);
        let Some(name) = str_arg(name) else {
            set_error("name must be a non-null UTF-8 string".into());
            return RmStatus::InvalidInput;
        };
        match name.parse::<BuiltinName>() {
            Ok(n) => {
                *out = Box::into_raw(Box::new(RmSystem(builtin(n))));
                RmStatus::Ok
            }
            Err(_) => fail(CliError::Input(format!("unknown builtin system '{name}'"))),
        }
    })
}

/// Parses a system from its text form.
///
/// # Safety
/// `text` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rm_system_parse(text: *const c_char, out: *mut *mut RmSystem) -> RmStatus {
    guard(|| {
        out_ptr!(out);
        let Some(text) = str_arg(text) else {
            set_error("text must be a non-null UTF-8 string".into());
            return RmStatus::InvalidInput;
        };
        match parse_system(text) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(RmSystem(s)));
                RmStatus::Ok
            }
            Err(e) => fail(e.into()),
        }
    })
}

/// # Safety
/// `sys` must be null or a handle from `rm_system_*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rm_system_free(sys: *mut RmSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Number of variables, or 0 for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rm_system_num_vars(sys: *const RmSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.0.num_vars())
}

/// Number of parameters, or 0 for a null handle.
///
/// # Safety
/// `sys` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rm_system_num_params(sys: *const RmSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.0.num_params())
}

/// Solves at the real parameter `base[0..n]` and labels the real solutions.
/// Fails with `RM_STATUS_NUMERICAL` if the point is not generic.
///
/// # Safety
/// `sys` must be live, `base` must point to `n` doubles, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rm_solve(sys: *const RmSystem, base: *const f64, n: usize, seed: u64, out: *mut *mut RmSolutions) -> RmStatus {
    guard(|| {
        let sys = deref!(sys);
        out_ptr!(out);
        let Some(base) = slice_arg(base, n) else {
            set_error("base is null".into());
            return RmStatus::NullPointer;
        };
        if base.len() != sys.0.num_params() {
            return fail(CliError::Input(format!("base has {} values, the system has {} parameters", base.len(), sys.0.num_params())));
        }
        let p = RPoint(base.to_vec()).to_complex();
        match solve_labeled(&sys.0, &p, seed, None, None).and_then(|set| check_generic(&sys.0, &set, seed).map(|()| set)) {
            Ok(set) => {
                *out = Box::into_raw(Box::new(RmSolutions(set)));
                RmStatus::Ok
            }
            Err(e) => fail(e.into()),
        }
    })
}

/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rm_solutions_free(sol: *mut RmSolutions) {
    if !sol.is_null() {
        drop(Box::from_raw(sol));
    }
}

/// Number of complex solutions, or 0 for a null handle.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rm_solutions_degree(sol: *const RmSolutions) -> usize {
    sol.as_ref().map_or(0, |s| s.0.d())
}

/// Number of real solutions, or 0 for a null handle.
///
/// # Safety
/// `sol` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rm_solutions_real_count(sol: *const RmSolutions) -> usize {
    sol.as_ref().map_or(0, |s| s.0.r())
}

/// Copies real solution `label` (1-based) into `out[0..len]`; `len` must equal the number of variables.
///
/// # Safety
/// `sol` must be live and `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rm_solutions_real(sol: *const RmSolutions, label: usize, out: *mut f64, len: usize) -> RmStatus {
    guard(|| {
        let sol = deref!(sol);
        out_ptr!(out);
        let Some(x) = label.checked_sub(1).and_then(|k| sol.0.labels.get(k)) else {
            return fail(CliError::Input(format!("no real solution with label {label}")));
        };
        if x.0.len() != len {
            return fail(CliError::Input(format!("buffer holds {len} values, solutions have {}", x.0.len())));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(&x.0);
        RmStatus::Ok
    })
}

/// Order of the complex monodromy group found from random loops at `sol`.
///
/// # Safety
/// Handles must be live; `order` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rm_monodromy_order(
    sys: *const RmSystem,
    sol: *const RmSolutions,
    seed: u64,
    max_loops: usize,
    order: *mut u64,
) -> RmStatus {
    guard(|| {
        let sys = deref!(sys);
        let sol = deref!(sol);
        out_ptr!(order);
        let opts = GroupOptions { max_loops, seed, ..GroupOptions::default() };
        let g = monodromy_group(&sys.0, &sol.0, &opts, &TrackOptions::complex());
        *order = g.order as u64;
        RmStatus::Ok
    })
}

/// Scans the window `[lo, hi]` (each of length `n`) at `res[0..n]` nodes per axis and builds the region map.
///
/// # Safety
/// Handles must be live; `lo`, `hi` and `res` must point to `n` values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rm_regions(
    sys: *const RmSystem,
    sol: *const RmSolutions,
    lo: *const f64,
    hi: *const f64,
    res: *const usize,
    n: usize,
    seed: u64,
    out: *mut *mut RmRegionMap,
) -> RmStatus {
    guard(|| {
        let sys = deref!(sys);
        let sol = deref!(sol);
        out_ptr!(out);
        let (Some(lo), Some(hi)) = (slice_arg(lo, n), slice_arg(hi, n)) else {
            set_error("window bounds are null".into());
            return RmStatus::NullPointer;
        };
        if res.is_null() {
            set_error("res is null".into());
            return RmStatus::NullPointer;
        }
        let res = std::slice::from_raw_parts(res, n);
        let base: Vec<f64> = sol.0.param.iter().map(|z| z.re).collect();
        let run = || -> Result<RegionMap, CliError> {
            let window = Window::new(lo.to_vec(), hi.to_vec())?;
            let scan = ScanOptions { seed, ..ScanOptions::default() };
            let grid = grid_scan(&sys.0, &sol.0, &window, res, &scan)?;
            Ok(build_region_map(&grid, &base, &MapOptions::default())?)
        };
        match run() {
            Ok(m) => {
                *out = Box::into_raw(Box::new(RmRegionMap(m)));
                RmStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `map` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rm_region_map_free(map: *mut RmRegionMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Number of regions, or 0 for a null handle.
///
/// # Safety
/// `map` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rm_region_map_len(map: *const RmRegionMap) -> usize {
    map.as_ref().map_or(0, |m| m.0.regions.len())
}

/// The region map as JSON; free with `rm_string_free`. Null on a null handle.
///
/// # Safety
/// `map` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rm_region_map_json(map: *const RmRegionMap) -> *mut c_char {
    map.as_ref().map_or(ptr::null_mut(), |m| into_c_string(serde_json::to_string(&m.0).expect("serializable")))
}

/// Computes the real monodromy structure at `sol` over `map`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rm_real_structure(
    sys: *const RmSystem,
    sol: *const RmSolutions,
    map: *const RmRegionMap,
    seed: u64,
    out: *mut *mut RmStructure,
) -> RmStatus {
    guard(|| {
        let sys = deref!(sys);
        let sol = deref!(sol);
        let map = deref!(map);
        out_ptr!(out);
        let opts = RmsOptions { seed, ..RmsOptions::default() };
        match real_monodromy(&sys.0, &map.0, &sol.0, &opts) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(RmStructure(r)));
                RmStatus::Ok
            }
            Err(e) => fail(e.into()),
        }
    })
}

/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rm_structure_free(s: *mut RmStructure) {
    if !s.is_null() {
        drop(Box::from_raw(s));
    }
}

/// Whether the real monodromy action is `k`-transitive; false for a null handle or `k` out of range.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rm_structure_is_k_transitive(s: *const RmStructure, k: usize) -> bool {
    s.as_ref().is_some_and(|s| k >= 1 && k <= s.0.r && s.0.structure.is_k_transitive(k))
}

/// Plain-text listing of the structure; free with `rm_string_free`. Null on a null handle.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rm_structure_report(s: *const RmStructure) -> *mut c_char {
    s.as_ref().map_or(ptr::null_mut(), |s| into_c_string(s.0.structure.report()))
}

/// Full result as JSON; free with `rm_string_free`. Null on a null handle.
///
/// # Safety
/// `s` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn rm_structure_json(s: *const RmStructure) -> *mut c_char {
    s.as_ref().map_or(ptr::null_mut(), |s| into_c_string(serde_json::to_string(&s.0).expect("serializable")))
}
