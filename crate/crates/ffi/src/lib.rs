//! C ABI for `auglab-core`.
//!
//! Conventions:
//! * every fallible function returns an [`AuglabStatus`]; on failure a
//!   message is kept per thread and read with [`auglab_last_error_message`];
//! * objects are opaque handles created by `*_new`/`run` functions and
//!   released with the matching `*_free`;
//! * vectors and matrices are caller-owned `double` buffers, matrices
//!   row-major;
//! * strings returned to the caller must be released with
//!   [`auglab_string_free`].
//!
//! Panics never cross the boundary; they are reported as
//! [`AuglabStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, c_int, c_void, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use auglab_core::approx::wasserstein1_1d;
use auglab_core::estimators::gaussian_mean_estimators;
use auglab_core::experiments::{
    parse_group_spec, run_circular_experiment, run_flip_experiment, run_linreg_experiment, run_poisson_experiment,
    run_relu_gd_experiment, run_sgd_experiment, run_spherical_density, CircConfig, Design, ExperimentReport,
    FlipConfig, LinregConfig, PoissonConfig, ReluGdConfig, SgdExperimentConfig, SphereConfig,
};
use auglab_core::nalgebra::DVector;
use auglab_core::{AugError, FiniteGroup};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AuglabStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    DimensionMismatch = 3,
    Capability = 4,
    Singular = 5,
    Numerical = 6,
    Panic = 7,
}

/// Opaque group handle.
pub struct AuglabGroup {
    inner: FiniteGroup,
}

/// Opaque experiment report handle.
pub struct AuglabReport {
    inner: ExperimentReport,
}

/// `f(x, d, out, out_len, user)`; nonzero return signals failure.
pub type AuglabPointFn =
    Option<unsafe extern "C" fn(x: *const f64, d: usize, out: *mut f64, out_len: usize, user: *mut c_void) -> c_int>;

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(AuglabStatus, String);

impl From<AugError> for Failure {
    fn from(e: AugError) -> Self {
        let status = match e {
            AugError::DimensionMismatch { .. } => AuglabStatus::DimensionMismatch,
            AugError::Capability(_) => AuglabStatus::Capability,
            AugError::Singular(_) => AuglabStatus::Singular,
            AugError::Numerical(_) => AuglabStatus::Numerical,
            AugError::InvalidDimension(_) | AugError::InvalidConfig(_) | AugError::EmptyInput(_) => {
                AuglabStatus::InvalidArgument
            }
        };
        Failure(status, e.to_string())
    }
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> AuglabStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => AuglabStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("internal panic: {msg}"));
            AuglabStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(AuglabStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(AuglabStatus::InvalidArgument, msg.into())
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Failure> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn group_ref<'a>(g: *const AuglabGroup) -> Result<&'a FiniteGroup, Failure> {
    g.as_ref().map(|g| &g.inner).ok_or_else(|| null("group"))
}

unsafe fn c_str<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| invalid(format!("{what} is not UTF-8")))
}

fn check_len(expected: usize, got: usize) -> Result<(), Failure> {
    if expected != got {
        return Err(AugError::DimensionMismatch { expected, got }.into());
    }
    Ok(())
}

fn give_string(s: String, out: *mut *mut c_char) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| invalid("string contains NUL"))?;
    // SAFETY: caller checked `out` for null
    unsafe { *out = c.into_raw() };
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn auglab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Message of the last failure on this thread, or NULL. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn auglab_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a group from a `kind:dim` spec such as `"flip:4"` or `"perm:3"`.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn auglab_group_new(spec: *const c_char, out: *mut *mut AuglabGroup) -> AuglabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let g = parse_group_spec(c_str(spec, "spec")?)?;
        *out = Box::into_raw(Box::new(AuglabGroup { inner: g }));
        Ok(())
    })
}

/// # Safety
/// `g` must come from [`auglab_group_new`] and not be freed twice. NULL is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn auglab_group_free(g: *mut AuglabGroup) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// # Safety
/// `g` must be a live group handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn auglab_group_dim(g: *const AuglabGroup, out: *mut usize) -> AuglabStatus {
    guard(|| {
        let g = group_ref(g)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = g.dim();
        Ok(())
    })
}

/// Number of enumerated elements; `Capability` for sampler-backed groups.
///
/// # Safety
/// `g` must be a live group handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn auglab_group_order(g: *const AuglabGroup, out: *mut usize) -> AuglabStatus {
    guard(|| {
        let g = group_ref(g)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = g.order().ok_or_else(|| Failure(AuglabStatus::Capability, "group is not enumerated".into()))?;
        Ok(())
    })
}

/// `out = g_element · x`, both of length `len = dim`.
///
/// # Safety
/// `x` and `out` must point to `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn auglab_group_apply(
    g: *const AuglabGroup,
    element: usize,
    x: *const f64,
    len: usize,
    out: *mut f64,
) -> AuglabStatus {
    guard(|| {
        let g = group_ref(g)?;
        check_len(g.dim(), len)?;
        let x = DVector::from_column_slice(slice(x, len, "x")?);
        let y = g.element(element)?.apply(&x)?;
        slice_mut(out, len, "out")?.copy_from_slice(y.as_slice());
        Ok(())
    })
}

/// Writes the `dim × dim` mean matrix `E_g g` row-major into `out`.
///
/// # Safety
/// `out` must point to `len` doubles with `len = dim²`.
#[no_mangle]
pub unsafe extern "C" fn auglab_group_mean_matrix(g: *const AuglabGroup, out: *mut f64, len: usize) -> AuglabStatus {
    guard(|| {
        let g = group_ref(g)?;
        let d = g.dim();
        check_len(d * d, len)?;
        let m = g.mean_matrix()?;
        let out = slice_mut(out, len, "out")?;
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = m[(i, j)];
            }
        }
        Ok(())
    })
}

/// Exact orbit average `out = |G|⁻¹ Σ_g f(g x)` of a caller-supplied
/// statistic with `out_len` outputs.
///
/// # Safety
/// `x` must point to `len` doubles, `out` to `out_len` doubles, and `f` must
/// write at most `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn auglab_orbit_average(
    g: *const AuglabGroup,
    f: AuglabPointFn,
    user: *mut c_void,
    x: *const f64,
    len: usize,
    out: *mut f64,
    out_len: usize,
) -> AuglabStatus {
    guard(|| {
        let g = group_ref(g)?;
        let f = f.ok_or_else(|| null("callback"))?;
        check_len(g.dim(), len)?;
        let x = DVector::from_column_slice(slice(x, len, "x")?);
        let out = slice_mut(out, out_len, "out")?;
        let elems = g.elements()?;
        let mut acc = vec![0.0; out_len];
        let mut buf = vec![0.0; out_len];
        for e in elems {
            let gx = e.apply(&x)?;
            let rc = f(gx.as_ptr(), len, buf.as_mut_ptr(), out_len, user);
            if rc != 0 {
                return Err(Failure(AuglabStatus::Numerical, format!("callback returned {rc}")));
            }
            for (a, b) in acc.iter_mut().zip(&buf) {
                *a += b;
            }
        }
        let k = elems.len() as f64;
        for (o, a) in out.iter_mut().zip(&acc) {
            *o = a / k;
        }
        Ok(())
    })
}

/// Exact Wasserstein-1 distance between two samples on the line.
///
/// # Safety
/// `a` and `b` must point to `n` and `m` doubles.
#[no_mangle]
pub unsafe extern "C" fn auglab_wasserstein1_1d(
    a: *const f64,
    n: usize,
    b: *const f64,
    m: usize,
    out: *mut f64,
) -> AuglabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = wasserstein1_1d(slice(a, n, "a")?, slice(b, m, "b")?)?.distance;
        Ok(())
    })
}

/// MLE, augmented MLE and constrained MLE of a Gaussian mean from `n`
/// row-major observations of length `d`. Each output holds `d` doubles.
///
/// # Safety
/// `data` must point to `n·d` doubles and each output to `d` doubles.
#[no_mangle]
pub unsafe extern "C" fn auglab_gaussian_mean_estimators(
    g: *const AuglabGroup,
    data: *const f64,
    n: usize,
    d: usize,
    mle: *mut f64,
    amle: *mut f64,
    cmle: *mut f64,
) -> AuglabStatus {
    guard(|| {
        let g = group_ref(g)?;
        if n == 0 {
            return Err(invalid("no observations"));
        }
        let raw = slice(data, n * d, "data")?;
        let rows: Vec<DVector<f64>> = raw.chunks_exact(d.max(1)).map(DVector::from_column_slice).collect();
        let est = gaussian_mean_estimators(&rows, g)?;
        slice_mut(mle, d, "mle")?.copy_from_slice(est.mle.as_slice());
        slice_mut(amle, d, "amle")?.copy_from_slice(est.amle.as_slice());
        slice_mut(cmle, d, "cmle")?.copy_from_slice(est.cmle.as_slice());
        Ok(())
    })
}

fn pick(v: usize, default: usize) -> usize {
    if v == 0 {
        default
    } else {
        v
    }
}

fn run_named(name: &str, dim: usize, reps: usize, seed: u64) -> Result<ExperimentReport, AugError> {
    match name {
        "flip" => run_flip_experiment(&FlipConfig { d: pick(dim, 100), reps: pick(reps, 100), seed, mu: None }),
        "poisson" => run_poisson_experiment(&PoissonConfig {
            lambdas: vec![1.0, 5.0, 10.0],
            d: pick(dim, 100),
            reps: pick(reps, 100),
            seed,
            group: None,
        }),
        "circ" => run_circular_experiment(&CircConfig {
            dims: if dim == 0 { vec![4, 8, 16] } else { vec![dim] },
            p: 1,
            reps: pick(reps, 100),
            seed,
        }),
        "linreg" => run_linreg_experiment(&LinregConfig {
            p: pick(dim, 10),
            design: Design::Identity,
            gamma: 1.0,
            reps: pick(reps, 1000),
            seed,
            group: None,
        }),
        "relu" => {
            run_relu_gd_experiment(&ReluGdConfig { d: pick(dim, 8), reps: pick(reps, 1), seed, ..Default::default() })
        }
        "sphere" => {
            run_spherical_density(&SphereConfig { p: pick(dim, 10), reps: pick(reps, 50), seed, ..Default::default() })
        }
        "sgd" => run_sgd_experiment(&SgdExperimentConfig {
            d: pick(dim, 2),
            reps: pick(reps, 10),
            seed,
            ..Default::default()
        }),
        other => Err(AugError::InvalidConfig(format!("unknown experiment {other:?}"))),
    }
}

/// Runs a named experiment (`flip`, `poisson`, `circ`, `linreg`, `relu`,
/// `sphere`, `sgd`) with its default settings; `dim = 0` or `reps = 0`
/// selects the defaults for those too.
///
/// # Safety
/// `name` must be NUL-terminated and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn auglab_run_experiment(
    name: *const c_char,
    dim: usize,
    reps: usize,
    seed: u64,
    out: *mut *mut AuglabReport,
) -> AuglabStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let report = run_named(c_str(name, "name")?, dim, reps, seed)?;
        *out = Box::into_raw(Box::new(AuglabReport { inner: report }));
        Ok(())
    })
}

/// # Safety
/// `r` must come from [`auglab_run_experiment`]. NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn auglab_report_free(r: *mut AuglabReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}

/// Mean and standard error of one summary entry.
///
/// # Safety
/// Strings must be NUL-terminated; `mean` and `stderr` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn auglab_report_summary(
    r: *const AuglabReport,
    grid_key: *const c_char,
    metric: *const c_char,
    mean: *mut f64,
    stderr: *mut f64,
) -> AuglabStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("report"))?;
        if mean.is_null() || stderr.is_null() {
            return Err(null("output"));
        }
        let (k, m) = (c_str(grid_key, "grid_key")?, c_str(metric, "metric")?);
        let s = r.inner.summary_stat(k, m).ok_or_else(|| invalid(format!("no summary entry {k}/{m}")))?;
        *mean = s.mean;
        *stderr = s.stderr;
        Ok(())
    })
}

/// Long-format CSV; free the result with [`auglab_string_free`].
///
/// # Safety
/// `r` must be a live report and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn auglab_report_to_csv(r: *const AuglabReport, out: *mut *mut c_char) -> AuglabStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("report"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        give_string(r.inner.to_csv_string()?, out)
    })
}

/// JSON with config, rows and summary; free with [`auglab_string_free`].
///
/// # Safety
/// `r` must be a live report and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn auglab_report_to_json(r: *const AuglabReport, out: *mut *mut c_char) -> AuglabStatus {
    guard(|| {
        let r = r.as_ref().ok_or_else(|| null("report"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        give_string(r.inner.to_json_string()?, out)
    })
}

/// # Safety
/// `s` must come from this library. NULL is a no-op.
#[no_mangle]
pub unsafe extern "C" fn auglab_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
