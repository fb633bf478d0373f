//! Random-matrix statistics: the Marcenko-Pastur tail fraction and its
//! inverse, the decoupling envelope `theta`, the `alpha_0` threshold solver,
//! Gram-Schmidt decoupling residuals and empirical tail checks.

mod concentration;

use crate::correlations::Matrix;
use crate::error::{invalid, Error, Result};
use crate::sampling::{gram_schmidt_columns, CoupledSvdSample};
use crate::tolerance::{CLASSICAL_GAUSSIAN_CONSTANT, GROTHENDIECK_UPPER};

pub use concentration::{concentration_check, ConcentrationKind, ConcentrationReport};

const DEFAULT_TOL: f64 = 1e-10;

/// Integrand after `x = u^2`: `sqrt(4/x - 1) dx = 2 sqrt(4 - u^2) du`.
fn mp_integrand(u: f64) -> f64 {
    2.0 * (4.0 - u * u).max(0.0).sqrt()
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
}

#[allow(clippy::too_many_arguments)]
fn adaptive(
    f: &impl Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    m: f64,
    fm: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let (lm, flm, left) = simpson(f, a, fa, m, fm);
    let (rm, frm, right) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1)
        + adaptive(f, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1)
}

fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(&f, a, fa, b, fb);
    adaptive(&f, a, fa, b, fb, m, fm, whole, tol, 50)
}

/// Limiting fraction of singular values of an `n x n` gaussian matrix that
/// are at least `C sqrt(n)`:
/// `f(C) = (1/2pi) int_{C^2}^4 sqrt(4/x - 1) dx`.
pub fn mp_fraction(c: f64, tol: f64) -> Result<f64> {
    if !(0.0..=2.0).contains(&c) {
        return Err(invalid(format!("C must lie in [0, 2], got {c}")));
    }
    if !(tol > 0.0) {
        return Err(invalid(format!("tolerance must be positive, got {tol}")));
    }
    let integral = adaptive_simpson(mp_integrand, c, 2.0, tol);
    Ok((integral / (2.0 * std::f64::consts::PI)).clamp(0.0, 1.0))
}

/// `mp_fraction` at the default tolerance.
pub fn mp(c: f64) -> Result<f64> {
    mp_fraction(c, DEFAULT_TOL)
}

/// `delta` with `f(delta) = alpha`, by bisection on `[0, 2]`.
pub fn mp_inverse(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let (mut lo, mut hi) = (0.0f64, 2.0f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mp_fraction(mid, 1e-13)? > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Fraction of `sigma_k >= C sqrt(n)` (with slack 1e-12).
pub fn empirical_singular_fraction(sample: &CoupledSvdSample, c: f64) -> f64 {
    let n = sample.n();
    let cut = c * (n as f64).sqrt();
    let count = sample.sigma.iter().filter(|&&s| s >= cut - 1e-12).count();
    count as f64 / n as f64
}

/// `theta(alpha) = sqrt(2 - (4/3)(1 - (1-alpha)^{3/2}) / alpha)`, evaluated
/// as `sqrt(2 alpha (1 + 2s) / (3 (1 + s)^2))` with `s = sqrt(1 - alpha)`,
/// which is the same expression without the cancellation at small `alpha`.
pub fn theta(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    let s = (1.0 - alpha).sqrt();
    Ok((2.0 * alpha * (1.0 + 2.0 * s) / (3.0 * (1.0 + s) * (1.0 + s))).sqrt())
}

/// `f^{-1}(alpha) - c (1 + (2 theta + theta^2) K)`: positive exactly where
/// the witness beats the classical bound in the asymptotic regime.
pub fn alpha0_margin(alpha: f64, k_upper: f64, c_classical: f64) -> Result<f64> {
    let t = theta(alpha)?;
    Ok(mp_inverse(alpha)? - c_classical * (1.0 + (2.0 * t + t * t) * k_upper))
}

/// Largest `alpha` in `(0, 1)` at which `f^{-1}(alpha)` still exceeds
/// `c (1 + (2 theta(alpha) + theta(alpha)^2) K)`, the `o(1)` terms dropped.
pub fn alpha0_solve(k_upper: f64, c_classical: f64) -> Result<f64> {
    let (mut lo, mut hi) = (1e-9, 0.5);
    let (flo, fhi) = (
        alpha0_margin(lo, k_upper, c_classical)?,
        alpha0_margin(hi, k_upper, c_classical)?,
    );
    if !(flo > 0.0 && fhi < 0.0) {
        return Err(Error::Internal(format!(
            "alpha_0 equation has no sign change on [{lo}, {hi}] ({flo}, {fhi})"
        )));
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if alpha0_margin(mid, k_upper, c_classical)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `alpha0_solve` with the default constants.
pub fn alpha0() -> Result<f64> {
    alpha0_solve(GROTHENDIECK_UPPER, CLASSICAL_GAUSSIAN_CONSTANT)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecouplingReport {
    pub n: usize,
    pub m: usize,
    pub alpha: f64,
    /// `sup_i |F_i^m(G - sqrt(n) U)| / sqrt(m)`.
    pub residual: f64,
    pub theta_alpha: f64,
    pub ratio: f64,
}

/// Orthonormalizes the first `m` columns of `G` and measures how far the
/// rows of `G` and `sqrt(n) U` are apart on those columns.
pub fn decoupling_residual(g: &Matrix, m: usize) -> Result<DecouplingReport> {
    let n = g.nrows();
    if g.ncols() != n {
        return Err(Error::Dimension {
            expected: n,
            got: g.ncols(),
        });
    }
    if m == 0 || m > n {
        return Err(invalid(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
    }
    let u = gram_schmidt_columns(g, m)?;
    let scale = (n as f64).sqrt();
    let mut sup = 0.0f64;
    for i in 0..n {
        let mut s = 0.0;
        for k in 0..m {
            let d = g[(i, k)] - scale * u[(i, k)];
            s += d * d;
        }
        sup = sup.max(s.sqrt());
    }
    let alpha = m as f64 / n as f64;
    let residual = sup / (m as f64).sqrt();
    let theta_alpha = theta(alpha)?;
    Ok(DecouplingReport {
        n,
        m,
        alpha,
        residual,
        theta_alpha,
        ratio: residual / theta_alpha,
    })
}
