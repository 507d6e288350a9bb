//! C ABI for `effectkit`.
//!
//! Objects cross the boundary as opaque handles (`EkMatrix`, `EkMap`) or
//! as JSON strings in the library's formats. Every function returns an
//! [`EkStatus`]; on failure `ek_last_error` describes the cause. Strings
//! returned through `char **` must be released with `ek_string_free`,
//! handles with their `*_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use effectkit::generate::{generate, GenKind};
use effectkit::num_complex::Complex64;
use effectkit::{
    apply_map, classify_theorem1, theorem2_harness, ComplexMatrix, Effect, EffectMapSpec, Error, PipelineConfig,
    RandomSource, Ray, SemilinearOperator, State,
};

/// Result codes of every entry point.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    NotHermitian = 4,
    NotPsd = 5,
    Singular = 6,
    NumericalBreakdown = 7,
    Json = 8,
    Internal = 9,
}

/// Dense complex matrix handle.
pub struct EkMatrix(ComplexMatrix);

/// Effect map handle.
pub struct EkMap(EffectMapSpec);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(EkStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::DimensionMismatch { .. } | Error::NonSquare { .. } | Error::DimensionTooSmall(..) => {
                EkStatus::DimensionMismatch
            }
            Error::NotHermitian(_) => EkStatus::NotHermitian,
            Error::NotPsd(_) => EkStatus::NotPsd,
            Error::Singular(_) => EkStatus::Singular,
            Error::NumericalBreakdown(_) => EkStatus::NumericalBreakdown,
            Error::Json(_) => EkStatus::Json,
            _ => EkStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null() -> Failure {
    Failure(EkStatus::NullPointer, "null pointer argument".into())
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> EkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error("");
            EkStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            EkStatus::Internal
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(null)
}

unsafe fn as_str<'a>(p: *const c_char) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null());
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(EkStatus::InvalidArgument, "string is not UTF-8".into()))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null());
    }
    out.write(value);
    Ok(())
}

unsafe fn write_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|_| Failure(EkStatus::Internal, "string contains NUL".into()))?;
    write_out(out, c.into_raw())
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message of the last failure on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ek_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn ek_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a `rows × cols` matrix from `2·rows·cols` doubles laid out
/// row-major as real, imaginary pairs.
///
/// # Safety
/// `data` must point to `2·rows·cols` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ek_matrix_new(rows: usize, cols: usize, data: *const f64, out: *mut *mut EkMatrix) -> EkStatus {
    guard(|| {
        if data.is_null() {
            return Err(null());
        }
        let len = rows
            .checked_mul(cols)
            .ok_or_else(|| Failure(EkStatus::InvalidArgument, "matrix too large".into()))?;
        let raw = std::slice::from_raw_parts(data, 2 * len);
        let entries = raw.chunks_exact(2).map(|c| Complex64::new(c[0], c[1])).collect();
        let m = ComplexMatrix::from_vec(rows, cols, entries)?;
        write_out(out, boxed(EkMatrix(m)))
    })
}

/// # Safety
/// `m` must be a handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn ek_matrix_free(m: *mut EkMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Number of rows; 0 for a null handle.
///
/// # Safety
/// `m` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ek_matrix_rows(m: *const EkMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.rows())
}

/// Number of columns; 0 for a null handle.
///
/// # Safety
/// `m` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn ek_matrix_cols(m: *const EkMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.cols())
}

/// # Safety
/// `m` must be a live handle; `re` and `im` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ek_matrix_get(m: *const EkMatrix, i: usize, j: usize, re: *mut f64, im: *mut f64) -> EkStatus {
    guard(|| {
        let m = &as_ref(m)?.0;
        if i >= m.rows() || j >= m.cols() {
            return Err(Failure(
                EkStatus::InvalidArgument,
                format!("index ({i}, {j}) outside {}x{}", m.rows(), m.cols()),
            ));
        }
        let z = m[(i, j)];
        write_out(re, z.re)?;
        write_out(im, z.im)
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ek_matrix_from_json(json: *const c_char, out: *mut *mut EkMatrix) -> EkStatus {
    guard(|| {
        let m = ComplexMatrix::from_json(as_str(json)?)?;
        write_out(out, boxed(EkMatrix(m)))
    })
}

/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ek_matrix_to_json(m: *const EkMatrix, out: *mut *mut c_char) -> EkStatus {
    guard(|| write_string(out, as_ref(m)?.0.to_json()))
}

/// Random object as JSON. `kind` is one of `unitary`, `antiunitary`,
/// `effect`, `state`, `projection`, `ray`, `semilinear`, `mk`; projections
/// have rank `rank` (0 means 1).
///
/// # Safety
/// `kind` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ek_generate(
    kind: *const c_char,
    dim: usize,
    rank: usize,
    seed: u64,
    out: *mut *mut c_char,
) -> EkStatus {
    guard(|| {
        let kind: GenKind = as_str(kind)?.parse()?;
        let rank = (rank > 0).then_some(rank);
        let s = generate(kind, dim, rank, &mut RandomSource::new(seed))?;
        write_string(out, s)
    })
}

/// Whether `a ≤ b` in the Löwner order up to `tol`.
///
/// # Safety
/// `a`, `b` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ek_loewner_leq(a: *const EkMatrix, b: *const EkMatrix, tol: f64, out: *mut bool) -> EkStatus {
    guard(|| {
        let r = effectkit::linalg::loewner_leq(&as_ref(a)?.0, &as_ref(b)?.0, tol)?;
        write_out(out, r)
    })
}

/// Strength of an effect along the ray spanned by a column vector
/// (normalized here).
///
/// # Safety
/// `effect`, `ray` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ek_strength(effect: *const EkMatrix, ray: *const EkMatrix, out: *mut f64) -> EkStatus {
    guard(|| {
        let e = Effect::new(as_ref(effect)?.0.clone())?;
        let v = &as_ref(ray)?.0;
        if v.cols() != 1 {
            return Err(Failure(EkStatus::InvalidArgument, "ray must be a single column".into()));
        }
        let r = Ray::from_vector(&v.column(0))?;
        e.matrix().ensure_dim(r.dim())?;
        write_out(out, e.strength(&r)?)
    })
}

/// `tr(E D)`.
///
/// # Safety
/// `effect`, `state` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ek_trace_pair(effect: *const EkMatrix, state: *const EkMatrix, out: *mut f64) -> EkStatus {
    guard(|| {
        let e = Effect::new(as_ref(effect)?.0.clone())?;
        let d = State::new(as_ref(state)?.0.clone())?;
        write_out(out, effectkit::trace_pair(&e, &d)?)
    })
}

/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ek_map_from_json(json: *const c_char, out: *mut *mut EkMap) -> EkStatus {
    guard(|| {
        let spec = EffectMapSpec::from_json(as_str(json)?)?;
        write_out(out, boxed(EkMap(spec)))
    })
}

/// # Safety
/// `m` must be a handle from this library or null.
#[no_mangle]
pub unsafe extern "C" fn ek_map_free(m: *mut EkMap) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// # Safety
/// `m` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ek_map_dim(m: *const EkMap, out: *mut usize) -> EkStatus {
    guard(|| write_out(out, as_ref(m)?.0.dim()))
}

/// Image of an effect under the map.
///
/// # Safety
/// `map`, `effect` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ek_map_apply(map: *const EkMap, effect: *const EkMatrix, out: *mut *mut EkMatrix) -> EkStatus {
    guard(|| {
        let e = Effect::new(as_ref(effect)?.0.clone())?;
        let img = apply_map(&as_ref(map)?.0, &e)?;
        write_out(out, boxed(EkMatrix(img.into_matrix())))
    })
}

fn config(seed: u64, trials: usize) -> PipelineConfig {
    PipelineConfig {
        seed,
        trials: if trials == 0 { 100 } else { trials },
        ..PipelineConfig::default()
    }
}

/// Staged classification; writes the JSON report. `trials` 0 means 100.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ek_classify_theorem1(
    map: *const EkMap,
    d: *const EkMatrix,
    d_prime: *const EkMatrix,
    seed: u64,
    trials: usize,
    out: *mut *mut c_char,
) -> EkStatus {
    guard(|| {
        let spec = &as_ref(map)?.0;
        let d = State::new(as_ref(d)?.0.clone())?;
        let dp = State::new(as_ref(d_prime)?.0.clone())?;
        let report = classify_theorem1(spec, &d, &dp, spec.dim(), &config(seed, trials))?;
        write_string(out, report.to_json_pretty())
    })
}

/// Harness for the subspace map induced by a semilinear operator given as
/// JSON `{"matrix": …, "conjugating": bool}`. `trials` 0 means 100.
///
/// # Safety
/// `operator_json` must be a NUL-terminated string; handles must be live;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ek_theorem2(
    operator_json: *const c_char,
    d: *const EkMatrix,
    d_prime: *const EkMatrix,
    seed: u64,
    trials: usize,
    out: *mut *mut c_char,
) -> EkStatus {
    guard(|| {
        let a = SemilinearOperator::from_json(as_str(operator_json)?)?;
        let d = State::new(as_ref(d)?.0.clone())?;
        let dp = State::new(as_ref(d_prime)?.0.clone())?;
        let report = theorem2_harness(&a, &d, &dp, &config(seed, trials))?;
        write_string(out, report.to_json_pretty())
    })
}
