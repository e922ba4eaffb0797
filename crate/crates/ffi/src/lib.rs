//! C ABI over the solver and majorant studies.
//!
//! Every entry point returns an [`IgaStatus`]; on failure the message is
//! kept per thread and can be fetched with [`iga_last_error`]. Handles are
//! opaque and must be released with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use iga_majorant::linsolve::SolverKind;
use iga_majorant::majorant::FluxCase;
use iga_majorant::problems::{get_example_by_name, ExampleId, ProblemSpec};
use iga_majorant::study::{
    emit_reports, example5_schedule, run_adaptive_study, run_uniform_study, CellMap, LevelData,
    StudyConfig, StudyRow,
};
use iga_majorant::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IgaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    UnknownExample = 3,
    Numerical = 4,
    Io = 5,
    OutOfRange = 6,
    BufferTooSmall = 7,
    Panic = 99,
}

/// Study options. `quad = 0` picks the default rule and `c_omega <= 0`
/// derives the constant from the problem.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IgaConfig {
    pub psi: f64,
    pub c_plus: f64,
    pub iterations: usize,
    pub beta0: f64,
    pub quad: usize,
    pub iterative: bool,
    pub c_omega: f64,
}

/// One table row. Missing exact error and efficiency index are NaN.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IgaRow {
    pub level: usize,
    pub spans_s: usize,
    pub spans_t: usize,
    pub dof_u: usize,
    pub dof_y: usize,
    pub a1b1: f64,
    pub a2b2: f64,
    pub majorant: f64,
    pub exact_error: f64,
    pub ieff: f64,
    pub ratio: f64,
    pub criterion: bool,
    pub t_asm_pde: f64,
    pub t_solve_pde: f64,
    pub t_asm_est: f64,
    pub t_solve_est: f64,
}

pub struct IgaProblem {
    spec: ProblemSpec,
}

pub struct IgaStudy {
    rows: Vec<StudyRow>,
    maps: Vec<CellMap>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> IgaStatus {
    match e {
        Error::UnknownExample(_) | Error::UnknownGeometry(_) => IgaStatus::UnknownExample,
        Error::Solver(_)
        | Error::ResidualTooLarge { .. }
        | Error::SingularJacobian { .. }
        | Error::NonPositiveWeight(_)
        | Error::ZeroExactError => IgaStatus::Numerical,
        Error::Io(_) => IgaStatus::Io,
        Error::AtLevel { source, .. } => status_of(source),
        _ => IgaStatus::InvalidArgument,
    }
}

fn guard<F>(f: F) -> IgaStatus
where
    F: FnOnce() -> Result<(), (IgaStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IgaStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            IgaStatus::Panic
        }
    }
}

fn lib_err(e: Error) -> (IgaStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (IgaStatus, String) {
    (IgaStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (IgaStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (IgaStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

fn to_config(c: &IgaConfig) -> StudyConfig {
    StudyConfig {
        psi: c.psi,
        c_plus: c.c_plus,
        iterations: c.iterations,
        beta0: c.beta0,
        quad: (c.quad > 0).then_some(c.quad),
        solver: if c.iterative {
            SolverKind::Iterative
        } else {
            SolverKind::Direct
        },
        c_omega: (c.c_omega > 0.0).then_some(c.c_omega),
    }
}

fn to_row(r: &StudyRow) -> IgaRow {
    IgaRow {
        level: r.level,
        spans_s: r.spans[0],
        spans_t: r.spans[1],
        dof_u: r.dof_u,
        dof_y: r.dof_y,
        a1b1: r.a1b1,
        a2b2: r.a2b2,
        majorant: r.majorant,
        exact_error: r.exact_error.unwrap_or(f64::NAN),
        ieff: r.ieff.unwrap_or(f64::NAN),
        ratio: r.ratio,
        criterion: r.criterion,
        t_asm_pde: r.t_asm_pde,
        t_solve_pde: r.t_solve_pde,
        t_asm_est: r.t_asm_est,
        t_solve_est: r.t_solve_est,
    }
}

fn into_study(levels: Vec<LevelData>) -> Box<IgaStudy> {
    let (rows, maps) = levels.into_iter().map(|l| (l.row, l.map)).unzip();
    Box::new(IgaStudy { rows, maps })
}

/// Default options: ψ = 20, C⊕ = 5, two iterations, β₀ = 0.01.
#[no_mangle]
pub extern "C" fn iga_config_default() -> IgaConfig {
    let d = StudyConfig::default();
    IgaConfig {
        psi: d.psi,
        c_plus: d.c_plus,
        iterations: d.iterations,
        beta0: d.beta0,
        quad: 0,
        iterative: false,
        c_omega: 0.0,
    }
}

/// Creates a builtin benchmark problem by id ("1", "2", "3", "4a", "4b",
/// "5", "6", "7").
///
/// # Safety
/// `name` must be a valid NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn iga_problem_new(
    name: *const c_char,
    out: *mut *mut IgaProblem,
) -> IgaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let name = str_arg(name, "name")?;
        let spec = get_example_by_name(name).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(IgaProblem { spec }));
        Ok(())
    })
}

/// # Safety
/// `problem` must come from [`iga_problem_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn iga_problem_free(problem: *mut IgaProblem) {
    if !problem.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(problem))));
    }
}

/// Whether the problem carries an analytic solution.
///
/// # Safety
/// `problem` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn iga_problem_has_exact(problem: *const IgaProblem) -> bool {
    problem.as_ref().is_some_and(|p| p.spec.has_exact())
}

/// Solves and estimates on `levels + 1` uniformly refined meshes. `flux_case`
/// is "0" or "K,k".
///
/// # Safety
/// Pointers must be valid; `config` may be null for the defaults.
#[no_mangle]
pub unsafe extern "C" fn iga_study_uniform(
    problem: *const IgaProblem,
    flux_case: *const c_char,
    levels: usize,
    config: *const IgaConfig,
    out: *mut *mut IgaStudy,
) -> IgaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let case: FluxCase = str_arg(flux_case, "flux_case")?.parse().map_err(lib_err)?;
        let cfg = config.as_ref().map(to_config).unwrap_or_default();
        let levels = run_uniform_study(&p.spec, case, levels, &cfg).map_err(lib_err)?;
        *out = Box::into_raw(into_study(levels));
        Ok(())
    })
}

/// Runs `steps` adaptive steps with the given flux case; Example 5 uses its
/// own case schedule and ignores `flux_case`.
///
/// # Safety
/// Pointers must be valid; `config` may be null for the defaults.
#[no_mangle]
pub unsafe extern "C" fn iga_study_adaptive(
    problem: *const IgaProblem,
    flux_case: *const c_char,
    steps: usize,
    config: *const IgaConfig,
    out: *mut *mut IgaStudy,
) -> IgaStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let p = problem.as_ref().ok_or_else(|| null("problem"))?;
        let case: FluxCase = str_arg(flux_case, "flux_case")?.parse().map_err(lib_err)?;
        let cfg = config.as_ref().map(to_config).unwrap_or_default();
        let schedule = if p.spec.id == ExampleId::E5 {
            example5_schedule(steps)
        } else {
            vec![case; steps]
        };
        let levels = run_adaptive_study(&p.spec, &schedule, steps, &cfg).map_err(lib_err)?;
        *out = Box::into_raw(into_study(levels));
        Ok(())
    })
}

/// # Safety
/// `study` must come from a study function and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn iga_study_free(study: *mut IgaStudy) {
    if !study.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(study))));
    }
}

/// Number of levels (rows); 0 for a null handle.
///
/// # Safety
/// `study` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn iga_study_len(study: *const IgaStudy) -> usize {
    study.as_ref().map_or(0, |s| s.rows.len())
}

/// # Safety
/// `study` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn iga_study_row(
    study: *const IgaStudy,
    index: usize,
    out: *mut IgaRow,
) -> IgaStatus {
    guard(|| {
        let s = study.as_ref().ok_or_else(|| null("study"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let r = s.rows.get(index).ok_or_else(|| {
            (
                IgaStatus::OutOfRange,
                format!("row {index} of {}", s.rows.len()),
            )
        })?;
        *out = to_row(r);
        Ok(())
    })
}

/// Writes the cell-map codes of level `index` (0 unmarked, 1 estimator,
/// 2 exact, 3 both; row-major with the first parameter fastest) into
/// `codes`. `dims` receives the two cell counts. With `codes` null or too
/// short, only `dims` is filled and `BufferTooSmall` is returned.
///
/// # Safety
/// `study` must be a live handle; `dims` must point to two writable values;
/// `codes` must hold `len` bytes when not null.
#[no_mangle]
pub unsafe extern "C" fn iga_study_cell_map(
    study: *const IgaStudy,
    index: usize,
    codes: *mut u8,
    len: usize,
    dims: *mut usize,
) -> IgaStatus {
    guard(|| {
        let s = study.as_ref().ok_or_else(|| null("study"))?;
        if dims.is_null() {
            return Err(null("dims"));
        }
        let m = s.maps.get(index).ok_or_else(|| {
            (
                IgaStatus::OutOfRange,
                format!("map {index} of {}", s.maps.len()),
            )
        })?;
        let [n1, n2] = m.dims;
        *dims = n1;
        *dims.add(1) = n2;
        let n = n1 * n2;
        if codes.is_null() || len < n {
            return Err((
                IgaStatus::BufferTooSmall,
                format!("cell map needs {n} bytes, got {len}"),
            ));
        }
        let out = std::slice::from_raw_parts_mut(codes, n);
        for c2 in 0..n2 {
            for c1 in 0..n1 {
                out[c1 + n1 * c2] = m.code(c1, c2);
            }
        }
        Ok(())
    })
}

/// Writes `study.csv` and the cell maps into `dir`.
///
/// # Safety
/// `study` must be a live handle and `dir` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn iga_study_write(study: *const IgaStudy, dir: *const c_char) -> IgaStatus {
    guard(|| {
        let s = study.as_ref().ok_or_else(|| null("study"))?;
        let dir = str_arg(dir, "dir")?;
        emit_reports(&s.rows, &s.maps, Path::new(dir)).map_err(lib_err)
    })
}

/// Copies the calling thread's last error message, NUL-terminated and
/// truncated to `len`. Returns the full message length in bytes.
///
/// # Safety
/// `buf` must hold `len` bytes when not null.
#[no_mangle]
pub unsafe extern "C" fn iga_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr(), buf as *mut u8, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn iga_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
