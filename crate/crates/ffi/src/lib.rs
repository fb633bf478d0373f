//! C interface. Every function returns a [`BcStatus`]; on failure the
//! message is available from [`bc_last_error`] on the same thread. Matrices
//! cross the boundary as row-major `double` arrays of length `n * n`.
//! Correlation matrices are opaque handles released with
//! [`bc_correlation_free`].

use std::cell::RefCell;
use std::ffi::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use bellcorr::correlations::Matrix;
use bellcorr::experiments::{
    classify_trial, sample_instance, trial_seed, ClassifyContext, SamplingMode,
};
use bellcorr::values::{classical_value_exact, pi_norm_exact, ChshMode, ThresholdMode};
use bellcorr::{CorrelationMatrix, Error, Verdict};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Dimension = 3,
    SizeGuard = 4,
    DegenerateInput = 5,
    Numerical = 6,
    Internal = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcMode {
    Independent = 0,
    Coupled = 1,
    Bernoulli = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcVerdict {
    Local = 0,
    Nonlocal = 1,
    Statistical = 2,
    Undecided = 3,
}

/// Opaque correlation matrix.
pub struct BcCorrelation {
    inner: CorrelationMatrix,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> BcStatus {
    match e {
        Error::InvalidArgument(_) => BcStatus::InvalidArgument,
        Error::Dimension { .. } => BcStatus::Dimension,
        Error::SizeGuard { .. } => BcStatus::SizeGuard,
        Error::DegenerateInput(_) => BcStatus::DegenerateInput,
        Error::Numerical(_) => BcStatus::Numerical,
        Error::Internal(_) => BcStatus::Internal,
    }
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), (BcStatus, String)>) -> BcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error(String::new());
            BcStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            BcStatus::Panic
        }
    }
}

fn lib(e: Error) -> (BcStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (BcStatus, String) {
    (BcStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `data` must point to `n * n` readable doubles.
unsafe fn read_matrix(n: usize, data: *const f64) -> Result<Matrix, (BcStatus, String)> {
    if data.is_null() {
        return Err(null("data"));
    }
    if n == 0 {
        return Err((BcStatus::InvalidArgument, "n must be >= 1".into()));
    }
    let len = n
        .checked_mul(n)
        .ok_or_else(|| (BcStatus::InvalidArgument, format!("n = {n} overflows")))?;
    let slice = std::slice::from_raw_parts(data, len);
    Ok(Matrix::from_row_slice(n, n, slice))
}

/// Copies the last error message of this thread into `buf` (NUL terminated,
/// truncated to `cap - 1` bytes) and returns the full message length.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bc_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && cap > 0 {
            let k = msg.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, k);
            *buf.add(k) = 0;
        }
        msg.len()
    })
}

/// Builds a correlation matrix from `n * n` row-major entries in `[-1, 1]`.
///
/// # Safety
/// `data` must point to `n * n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bc_correlation_new(
    n: usize,
    data: *const f64,
    out: *mut *mut BcCorrelation,
) -> BcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let m = read_matrix(n, data)?;
        let inner = CorrelationMatrix::new(m).map_err(lib)?;
        *out = Box::into_raw(Box::new(BcCorrelation { inner }));
        Ok(())
    })
}

/// Samples an `n x n` correlation matrix from `n` pairs of vectors in
/// dimension `m`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bc_correlation_sample(
    n: usize,
    m: usize,
    seed: u64,
    mode: BcMode,
    out: *mut *mut BcCorrelation,
) -> BcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mode = match mode {
            BcMode::Independent => SamplingMode::Independent,
            BcMode::Coupled => SamplingMode::Coupled,
            BcMode::Bernoulli => SamplingMode::Bernoulli,
        };
        let (inner, _) = sample_instance(
            mode,
            n,
            m,
            ThresholdMode::Asymptotic,
            &trial_seed(seed, n, m, 0),
        )
        .map_err(lib)?;
        *out = Box::into_raw(Box::new(BcCorrelation { inner }));
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `handle` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bc_correlation_free(handle: *mut BcCorrelation) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of rows, or 0 for a null handle.
///
/// # Safety
/// `handle` must be null or valid.
#[no_mangle]
pub unsafe extern "C" fn bc_correlation_size(handle: *const BcCorrelation) -> usize {
    handle.as_ref().map_or(0, |h| h.inner.n())
}

/// # Safety
/// `handle` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bc_correlation_get(
    handle: *const BcCorrelation,
    i: usize,
    j: usize,
    out: *mut f64,
) -> BcStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let n = h.inner.n();
        if i >= n || j >= n {
            return Err((
                BcStatus::InvalidArgument,
                format!("index ({i}, {j}) outside {n} x {n}"),
            ));
        }
        *out = h.inner.get(i, j);
        Ok(())
    })
}

/// Classical value `max s^T A t` over sign vectors, for `n <= 20`.
///
/// # Safety
/// `data` must point to `n * n` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bc_classical_value(n: usize, data: *const f64, out: *mut f64) -> BcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let a = read_matrix(n, data)?;
        *out = classical_value_exact(&a).map_err(lib)?.0;
        Ok(())
    })
}

/// Projective norm bracket `lower <= norm <= upper`, for `n <= 20`.
///
/// # Safety
/// `handle` must be valid; `upper` and `lower` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bc_pi_norm(
    handle: *const BcCorrelation,
    tol: f64,
    upper: *mut f64,
    lower: *mut f64,
) -> BcStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        if upper.is_null() || lower.is_null() {
            return Err(null("output"));
        }
        let r = pi_norm_exact(h.inner.entries(), tol).map_err(lib)?;
        *upper = r.value;
        *lower = r.lower;
        Ok(())
    })
}

/// Runs the certifier pipeline (row norms, full CHSH scan, exact norm for
/// `n <= n_exact`).
///
/// # Safety
/// `handle` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bc_classify(
    handle: *const BcCorrelation,
    n_exact: usize,
    out: *mut BcVerdict,
) -> BcStatus {
    guard(|| {
        let h = handle.as_ref().ok_or_else(|| null("handle"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if n_exact > 20 {
            return Err((BcStatus::InvalidArgument, format!("n_exact {n_exact} exceeds 20")));
        }
        let ctx = ClassifyContext {
            n_exact,
            chsh: Some(ChshMode::Full),
            ..Default::default()
        };
        *out = match classify_trial(&h.inner, &ctx).verdict {
            Verdict::LocalCertified => BcVerdict::Local,
            Verdict::NonlocalCertified => BcVerdict::Nonlocal,
            Verdict::StatisticallyNonlocal => BcVerdict::Statistical,
            Verdict::Undecided => BcVerdict::Undecided,
        };
        Ok(())
    })
}

fn scalar(out: *mut f64, f: impl FnOnce() -> bellcorr::Result<f64>) -> BcStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let v = f().map_err(lib)?;
        // SAFETY: checked non-null; the caller guarantees writability.
        unsafe { *out = v };
        Ok(())
    })
}

/// Marcenko-Pastur tail fraction `f(C)` for `0 <= C <= 2`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bc_mp_fraction(c: f64, out: *mut f64) -> BcStatus {
    scalar(out, || bellcorr::rmt::mp(c))
}

/// Decoupling envelope `theta(alpha)` for `0 < alpha <= 1`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bc_theta(alpha: f64, out: *mut f64) -> BcStatus {
    scalar(out, || bellcorr::rmt::theta(alpha))
}

/// Threshold `alpha_0` for the given Grothendieck upper bound and classical
/// constant.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bc_alpha0(k_upper: f64, c_classical: f64, out: *mut f64) -> BcStatus {
    scalar(out, || bellcorr::rmt::alpha0_solve(k_upper, c_classical))
}
