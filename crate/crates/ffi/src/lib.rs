//! C ABI for `tailcond`.
//!
//! Objects are opaque handles created by `tc_*_new` and released by the matching
//! `tc_*_free`. Every fallible call returns a [`TcStatus`]; on failure the message is
//! available from [`tc_last_error`] on the same thread until the next failing call.
//! Results are written through out-pointers, which are left untouched on failure.
//!
//! Coordinate indices are zero-based.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use tailcond::pickands::{critical_value, run_test_with, CriticalSource, SimplexGrid, DEFAULT_REPLICATES};
use tailcond::sampling::sample_archimedean;
use tailcond::{CopulaModel, DNorm, Error, Family, Generator, MaximaSample, Norming, ScaleConvention};

/// Status codes. `TC_STATUS_OK` is zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    Domain = 3,
    DimensionMismatch = 4,
    OutOfRegion = 5,
    Degenerate = 6,
    Unsupported = 7,
    Shortfall = 8,
    UnavailableBuiltin = 9,
    Empty = 10,
    Config = 11,
    Io = 12,
    BufferTooSmall = 13,
    Panic = 14,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcFamily {
    Gumbel = 0,
    Clayton = 1,
    Frank = 2,
    Logistic = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TcNorm {
    Sum = 0,
    Sup = 1,
    /// Uses the `q` argument of [`tc_model_new`].
    Logistic = 2,
}

/// Opaque generator handle.
pub struct TcGenerator(Generator);

/// Opaque copula model handle.
pub struct TcModel(CopulaModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> TcStatus {
    match e {
        Error::InvalidParameter(_) => TcStatus::InvalidParameter,
        Error::Domain(_) => TcStatus::Domain,
        Error::DimensionMismatch { .. } => TcStatus::DimensionMismatch,
        Error::OutOfRegion(_) => TcStatus::OutOfRegion,
        Error::Degenerate(_) => TcStatus::Degenerate,
        Error::Unsupported(_) => TcStatus::Unsupported,
        Error::Shortfall { .. } => TcStatus::Shortfall,
        Error::UnavailableBuiltin { .. } => TcStatus::UnavailableBuiltin,
        Error::Empty(_) => TcStatus::Empty,
        Error::Config(_) => TcStatus::Config,
        Error::Io(_) => TcStatus::Io,
    }
}

enum Failure {
    Lib(Error),
    Null(&'static str),
    Buffer { needed: usize, got: usize },
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

/// Runs `f`, converting errors and panics into a status and the thread's last error.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> TcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TcStatus::Ok,
        Ok(Err(Failure::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer passed as {what}"));
            TcStatus::NullPointer
        }
        Ok(Err(Failure::Buffer { needed, got })) => {
            set_error(format!("output buffer holds {got} values, {needed} needed"));
            TcStatus::BufferTooSmall
        }
        Err(_) => {
            set_error("internal panic".into());
            TcStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn write<T>(p: *mut T, v: T, what: &'static str) -> Result<(), Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    p.write(v);
    Ok(())
}

unsafe fn input<'a>(p: *const f64, len: usize, what: &'static str) -> Result<&'a [f64], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

fn family(f: TcFamily) -> Family {
    match f {
        TcFamily::Gumbel => Family::GumbelHougaard,
        TcFamily::Clayton => Family::Clayton,
        TcFamily::Frank => Family::Frank,
        TcFamily::Logistic => Family::Logistic,
    }
}

/// Message of the last failing call on this thread, or NULL. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn tc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn tc_version() -> *const c_char {
    static VERSION: &CStr = match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(v) => v,
        Err(_) => panic!("version string"),
    };
    VERSION.as_ptr()
}

/// Creates a generator. `theta` is p for the logistic family.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tc_generator_new(fam: TcFamily, theta: f64, out: *mut *mut TcGenerator) -> TcStatus {
    guard(|| {
        let g = Generator::new(family(fam), theta)?;
        write(out, Box::into_raw(Box::new(TcGenerator(g))), "out")
    })
}

/// # Safety
/// `g` must come from [`tc_generator_new`] and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn tc_generator_free(g: *mut TcGenerator) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

unsafe fn generator_eval(
    g: *const TcGenerator,
    x: f64,
    out: *mut f64,
    f: impl FnOnce(&Generator, f64) -> tailcond::Result<f64>,
) -> TcStatus {
    guard(|| {
        let g = deref(g, "generator")?;
        let v = f(&g.0, x)?;
        write(out, v, "out")
    })
}

/// φ(t) for t ∈ (0, 1].
///
/// # Safety
/// `g` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tc_generator_phi(g: *const TcGenerator, t: f64, out: *mut f64) -> TcStatus {
    generator_eval(g, t, out, Generator::phi)
}

/// φ′(t) for t ∈ (0, 1).
///
/// # Safety
/// `g` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tc_generator_phi_prime(g: *const TcGenerator, t: f64, out: *mut f64) -> TcStatus {
    generator_eval(g, t, out, Generator::phi_prime)
}

/// φ″(t) for t ∈ (0, 1).
///
/// # Safety
/// `g` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tc_generator_phi_second(g: *const TcGenerator, t: f64, out: *mut f64) -> TcStatus {
    generator_eval(g, t, out, Generator::phi_second)
}

/// φ⁻¹(y) for y ≥ 0.
///
/// # Safety
/// `g` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tc_generator_phi_inverse(g: *const TcGenerator, y: f64, out: *mut f64) -> TcStatus {
    generator_eval(g, y, out, Generator::phi_inverse)
}

/// The tail index p of the generator.
///
/// # Safety
/// `g` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tc_generator_tail_index(g: *const TcGenerator, out: *mut f64) -> TcStatus {
    guard(|| {
        let g = deref(g, "generator")?;
        write(out, g.0.tail_index(), "out")
    })
}

/// Creates an Archimax model of dimension `dim`. `q` is read only for [`TcNorm::Logistic`].
/// The generator is copied; the caller keeps ownership of `g`.
///
/// # Safety
/// `g` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tc_model_new(
    g: *const TcGenerator,
    norm: TcNorm,
    q: f64,
    dim: usize,
    out: *mut *mut TcModel,
) -> TcStatus {
    guard(|| {
        let g = deref(g, "generator")?;
        let dnorm = match norm {
            TcNorm::Sum => DNorm::sum(dim)?,
            TcNorm::Sup => DNorm::sup(dim)?,
            TcNorm::Logistic => DNorm::logistic(q, dim)?,
        };
        let m = CopulaModel::archimax(g.0, dnorm)?;
        write(out, Box::into_raw(Box::new(TcModel(m))), "out")
    })
}

/// # Safety
/// `m` must come from [`tc_model_new`] and not be used afterwards. NULL is ignored.
#[no_mangle]
pub unsafe extern "C" fn tc_model_free(m: *mut TcModel) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Dimension of the model, or 0 for NULL.
///
/// # Safety
/// `m` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tc_model_dim(m: *const TcModel) -> usize {
    m.as_ref().map_or(0, |m| m.0.dim())
}

/// C(u) for a point of `len` = d coordinates.
///
/// # Safety
/// `u` must point to `len` doubles; `m` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tc_model_cdf(m: *const TcModel, u: *const f64, len: usize, out: *mut f64) -> TcStatus {
    guard(|| {
        let m = deref(m, "model")?;
        let v = m.0.cdf(input(u, len, "u")?)?;
        write(out, v, "out")
    })
}

/// H_{j,u}(v): the df of the other d − 1 coordinates at `v` given U_j = `u`.
///
/// # Safety
/// `v` must point to `len` doubles; `m` must be a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tc_model_conditional_cdf(
    m: *const TcModel,
    j: usize,
    u: f64,
    v: *const f64,
    len: usize,
    out: *mut f64,
) -> TcStatus {
    guard(|| {
        let m = deref(m, "model")?;
        let h = m.0.conditional_cdf(j, u, input(v, len, "v")?)?;
        write(out, h, "out")
    })
}

/// The norming constants c and a_n for conditional maxima of block size `n`.
///
/// # Safety
/// `m` must be a live handle; `out_c` and `out_a_n` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tc_model_norming_constants(
    m: *const TcModel,
    u: f64,
    j: usize,
    n: u64,
    out_c: *mut f64,
    out_a_n: *mut f64,
) -> TcStatus {
    guard(|| {
        let m = deref(m, "model")?;
        let nc = m.0.norming_constants(u, j, n)?;
        if out_c.is_null() || out_a_n.is_null() {
            return Err(Failure::Null("out_c/out_a_n"));
        }
        write(out_c, nc.c, "out_c")?;
        write(out_a_n, nc.a_n, "out_a_n")
    })
}

/// Draws `n` rows into `out` (row-major, n × d values). The same seed gives the same
/// rows on every platform and thread count.
///
/// # Safety
/// `out` must be valid for `out_len` doubles; `m` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn tc_model_sample(
    m: *const TcModel,
    n: usize,
    seed: u64,
    out: *mut f64,
    out_len: usize,
) -> TcStatus {
    guard(|| {
        let m = deref(m, "model")?;
        let needed = n.checked_mul(m.0.dim()).ok_or(Failure::Buffer { needed: usize::MAX, got: out_len })?;
        if out_len < needed {
            return Err(Failure::Buffer { needed, got: out_len });
        }
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let s = sample_archimedean(&m.0, n, seed)?;
        slice::from_raw_parts_mut(out, needed).copy_from_slice(s.data());
        Ok(())
    })
}

/// Outcome of [`tc_tail_test`].
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TcTestResult {
    pub statistic: f64,
    pub critical_value: f64,
    pub reject: bool,
}

/// Tests tail independence of a `reps` × `cols` maxima sample (row-major).
///
/// With `monte_carlo` false the built-in quantiles are used (d = 2, 3 at α = 0.05);
/// otherwise the critical value comes from `replicates` null samples drawn under
/// `seed` (0 replicates selects the default).
///
/// # Safety
/// `maxima` must point to `reps * cols` doubles; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tc_tail_test(
    maxima: *const f64,
    reps: usize,
    cols: usize,
    alpha: f64,
    monte_carlo: bool,
    replicates: usize,
    seed: u64,
    out: *mut TcTestResult,
) -> TcStatus {
    guard(|| {
        let len = reps.checked_mul(cols).ok_or(Error::InvalidParameter("reps * cols overflows".into()))?;
        let data = input(maxima, len, "maxima")?.to_vec();
        let mx = MaximaSample::new(data, cols, Norming::Unconditional { convention: ScaleConvention::Tail, n: 1 })?;
        let source = if monte_carlo {
            let replicates = if replicates == 0 { DEFAULT_REPLICATES } else { replicates };
            CriticalSource::MonteCarlo { replicates, seed }
        } else {
            CriticalSource::BuiltIn
        };
        let grid = SimplexGrid::default_for(cols)?;
        let cv = critical_value(cols, alpha, &source, reps, &grid)?;
        let r = run_test_with(&mx, alpha, &grid, cv, source)?;
        write(out, TcTestResult { statistic: r.statistic, critical_value: r.critical_value, reject: r.reject }, "out")
    })
}
