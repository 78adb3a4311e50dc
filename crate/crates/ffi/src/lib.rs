//! C ABI over `levels-lab`.
//!
//! Every fallible function returns an [`LlStatus`]; on failure a message is
//! kept per thread and can be copied out with [`ll_last_error`]. Models are
//! opaque heap objects created by [`ll_model_new`] and released with
//! [`ll_model_free`]. Strings returned by the library are released with
//! [`ll_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use levels_lab::dynamics::descent_certificate;
use levels_lab::regularity::{check_parameters, default_theta_epsilon};
use levels_lab::{IntervalAction, LabError, MapKind, Params, Schedule, Word};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LlStatus {
    Ok = 0,
    NullPointer = 1,
    Parameter = 2,
    Range = 3,
    Domain = 4,
    Inconsistent = 5,
    Construction = 6,
    Escape = 7,
    Threshold = 8,
    InvalidUtf8 = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LlMap {
    F = 0,
    G = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LlSchedule {
    PowersOfTwo = 0,
    Linear = 1,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LlPointKind {
    /// `a_n`, indexed by `n`.
    A = 0,
    B = 1,
    C = 2,
    U = 3,
    V = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LlCertificate {
    pub k: u32,
    pub m: u64,
    pub word_length: u64,
    pub start_x: f64,
    pub end_x: f64,
    pub margin: f64,
    pub relative_margin: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LlParameterCheck {
    pub product: f64,
    pub product_ok: bool,
    pub inverse_tail: f64,
    pub inverse_tail_ok: bool,
    pub theta_ok: bool,
    pub pass: bool,
}

/// Opaque model handle.
pub struct LlModel {
    action: IntervalAction,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &LabError) -> LlStatus {
    match e {
        LabError::Parameter(_) => LlStatus::Parameter,
        LabError::Range(_) => LlStatus::Range,
        LabError::Domain(_) => LlStatus::Domain,
        LabError::Inconsistent(_) => LlStatus::Inconsistent,
        LabError::Construction(_) => LlStatus::Construction,
        LabError::Escape { .. } => LlStatus::Escape,
        LabError::Threshold { .. } => LlStatus::Threshold,
    }
}

/// Runs `body`, translating errors and panics into status codes.
fn guard<F>(body: F) -> LlStatus
where
    F: FnOnce() -> Result<(), (LlStatus, String)>,
{
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => {
            set_error("");
            LlStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            LlStatus::Panic
        }
    }
}

fn lab<T>(r: levels_lab::Result<T>) -> Result<T, (LlStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(name: &str) -> (LlStatus, String) {
    (LlStatus::NullPointer, format!("{name} is null"))
}

fn schedule(s: LlSchedule) -> Schedule {
    match s {
        LlSchedule::PowersOfTwo => Schedule::PowersOfTwo,
        LlSchedule::Linear => Schedule::Linear,
    }
}

fn map_kind(m: LlMap) -> MapKind {
    match m {
        LlMap::F => MapKind::F,
        LlMap::G => MapKind::G,
    }
}

unsafe fn model_ref<'a>(model: *const LlModel) -> Result<&'a LlModel, (LlStatus, String)> {
    model.as_ref().ok_or_else(|| null("model"))
}

fn build(params: levels_lab::Result<Params>, out: *mut *mut LlModel) -> LlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let action = lab(params.and_then(|p| IntervalAction::build(&p)))?;
        // SAFETY: checked non-null above; the caller owns the slot.
        unsafe { *out = Box::into_raw(Box::new(LlModel { action })) };
        Ok(())
    })
}

/// Builds a model with `θ = α + ε` and the default `ε` for `alpha`, and
/// `n_neg = 32`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ll_model_new(alpha: f64, k_max: u32, schedule_kind: LlSchedule, out: *mut *mut LlModel) -> LlStatus {
    build(Params::for_alpha(alpha, k_max, schedule(schedule_kind)), out)
}

/// Builds a model with every parameter given explicitly.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ll_model_new_explicit(
    alpha: f64,
    epsilon: f64,
    theta: f64,
    k_max: u32,
    n_neg: u32,
    schedule_kind: LlSchedule,
    out: *mut *mut LlModel,
) -> LlStatus {
    build(Params::new(alpha, epsilon, theta, k_max, n_neg, schedule(schedule_kind)), out)
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from `ll_model_new*` and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ll_model_free(model: *mut LlModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Global endpoints `[left, right]` of the materialized range.
///
/// # Safety
/// Pointers must be valid; `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ll_model_range(model: *const LlModel, left: *mut f64, right: *mut f64) -> LlStatus {
    guard(|| {
        let m = model_ref(model)?.action.model();
        if left.is_null() || right.is_null() {
            return Err(null("output"));
        }
        let (lo, hi) = m.n_range();
        *left = lab(m.a_position(hi + 1))?;
        *right = lab(m.a_position(lo))?;
        Ok(())
    })
}

/// Global coordinate of a named point (`a_n`, or `b_k, c_k, u_k, v_k`).
///
/// # Safety
/// Pointers must be valid; `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ll_point(model: *const LlModel, kind: LlPointKind, index: i64, x: *mut f64) -> LlStatus {
    guard(|| {
        let m = model_ref(model)?.action.model();
        if x.is_null() {
            return Err(null("x"));
        }
        let level = || u32::try_from(index).map_err(|_| (LlStatus::Range, format!("level {index} out of range")));
        let p = match kind {
            LlPointKind::A => lab(m.point_a(index))?,
            LlPointKind::B => lab(m.point_b(level()?))?,
            LlPointKind::C => lab(m.point_c(level()?))?,
            LlPointKind::U => lab(m.point_u(level()?))?,
            LlPointKind::V => lab(m.point_v(level()?))?,
        };
        *x = lab(m.global(&p))?;
        Ok(())
    })
}

/// `f`, `g` or an inverse at the global point `x`: writes `y` and `dy/dx`.
///
/// # Safety
/// Pointers must be valid; `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ll_eval(
    model: *const LlModel,
    map: LlMap,
    inverse: bool,
    x: f64,
    y: *mut f64,
    dydx: *mut f64,
) -> LlStatus {
    guard(|| {
        let a = &model_ref(model)?.action;
        if y.is_null() || dydx.is_null() {
            return Err(null("output"));
        }
        let (yy, d) = lab(a.eval_global(map_kind(map), inverse, x))?;
        *y = yy;
        *dydx = d;
        Ok(())
    })
}

/// Applies a word such as `"F^-2 G^3"` (first letter acts first).
///
/// # Safety
/// `word` must be a NUL-terminated string; other pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ll_apply_word(
    model: *const LlModel,
    word: *const c_char,
    x: f64,
    y: *mut f64,
    dydx: *mut f64,
) -> LlStatus {
    guard(|| {
        let a = &model_ref(model)?.action;
        if word.is_null() {
            return Err(null("word"));
        }
        if y.is_null() || dydx.is_null() {
            return Err(null("output"));
        }
        let text = CStr::from_ptr(word)
            .to_str()
            .map_err(|e| (LlStatus::InvalidUtf8, e.to_string()))?;
        let w: Word = lab(text.parse())?;
        let m = a.model();
        let p = lab(m.local(x))?;
        let (q, d) = lab(a.apply_word_with_derivative(&w, &p))?;
        *y = lab(m.global(&q))?;
        *dydx = d;
        Ok(())
    })
}

/// Descent certificate from `u_k` with at most `m_max` leading `g^-1` steps.
///
/// # Safety
/// Pointers must be valid; `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ll_descent_certificate(
    model: *const LlModel,
    k: u32,
    m_max: u64,
    out: *mut LlCertificate,
) -> LlStatus {
    guard(|| {
        let a = &model_ref(model)?.action;
        if out.is_null() {
            return Err(null("out"));
        }
        let c = lab(descent_certificate(a, k, m_max))?;
        let m = a.model();
        *out = LlCertificate {
            k: c.k,
            m: c.m,
            word_length: c.word.len() as u64,
            start_x: lab(m.global(&c.start))?,
            end_x: lab(m.global(&c.end))?,
            margin: c.margin,
            relative_margin: c.relative_margin,
        };
        Ok(())
    })
}

/// The partition as a JSON document; release with [`ll_string_free`].
///
/// # Safety
/// Pointers must be valid; `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ll_table_json(model: *const LlModel, out: *mut *mut c_char) -> LlStatus {
    guard(|| {
        let m = model_ref(model)?.action.model();
        if out.is_null() {
            return Err(null("out"));
        }
        let json = levels_lab::output::to_json(&m.document());
        let c = CString::new(json).map_err(|e| (LlStatus::InvalidUtf8, e.to_string()))?;
        *out = c.into_raw();
        Ok(())
    })
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ll_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// The three parameter conditions.
///
/// # Safety
/// `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn ll_check_parameters(alpha: f64, theta: f64, epsilon: f64, out: *mut LlParameterCheck) -> LlStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let c = check_parameters(alpha, theta, epsilon);
        *out = LlParameterCheck {
            product: c.product,
            product_ok: c.product_ok,
            inverse_tail: c.inverse_tail,
            inverse_tail_ok: c.inverse_tail_ok,
            theta_ok: c.theta_ok,
            pass: c.pass,
        };
        Ok(())
    })
}

/// Default `(θ, ε)` for `alpha`; fails with `Threshold` above the golden bound.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn ll_default_theta_epsilon(alpha: f64, theta: *mut f64, epsilon: *mut f64) -> LlStatus {
    guard(|| {
        if theta.is_null() || epsilon.is_null() {
            return Err(null("output"));
        }
        let (t, e) = lab(default_theta_epsilon(alpha))?;
        *theta = t;
        *epsilon = e;
        Ok(())
    })
}

/// Copies the calling thread's last error message into `buf` (truncated,
/// always NUL-terminated when `len > 0`) and returns the full message length.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null with `len == 0`.
#[no_mangle]
pub unsafe extern "C" fn ll_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ll_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
