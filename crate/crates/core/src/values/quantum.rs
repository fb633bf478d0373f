//! Bounds on the quantum value
//! `omega*(A) = max sum_ij a_ij <u_i, v_j>` over unit vectors.
//!
//! The lower bound comes from block-coordinate ascent on explicit vectors, so
//! it is attained by the returned ensemble. The upper bound is the SDP dual
//! `min sum(lambda)` subject to `diag(lambda) - M(A) >= 0`, where `M(A)` is
//! the symmetric `2n x 2n` matrix with off-diagonal blocks `A/2`; any
//! `lambda` shifted to feasibility is a valid bound.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::correlations::{Matrix, VectorEnsemble};
use crate::error::{invalid, Error, Result};
use crate::sampling::Seed;

#[derive(Debug, Clone, PartialEq)]
pub struct AscentOptions {
    /// Vector dimension; `None` means `2n`, enough to represent any optimum.
    pub rank: Option<usize>,
    pub max_iters: usize,
    /// Stop when a full sweep improves the objective by less than
    /// `tol * max(1, |objective|)`.
    pub tol: f64,
    pub restarts: usize,
    pub seed: Seed,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            rank: None,
            max_iters: 10_000,
            tol: 1e-14,
            restarts: 5,
            seed: Seed::new(0).tag("ascent"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumLower {
    pub value: f64,
    pub ensemble: VectorEnsemble,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpperOptions {
    pub max_iters: usize,
    /// Stop once the best bound improved by less than `tol` (relative) over
    /// the last 50 iterations.
    pub tol: f64,
}

impl Default for UpperOptions {
    fn default() -> Self {
        Self {
            max_iters: 2_000,
            tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumUpper {
    pub value: f64,
    pub lambda: Vec<f64>,
    /// Smallest eigenvalue of `diag(lambda) - M(A)` at the returned `lambda`.
    pub min_eigenvalue: f64,
    /// Set when an eigendecomposition failed and an earlier bound was kept.
    pub warning: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumValueBounds {
    pub lower: f64,
    pub upper: f64,
    pub ensemble: VectorEnsemble,
    pub lambda: Vec<f64>,
}

fn check_square(a: &Matrix) -> Result<usize> {
    let (n, c) = a.shape();
    if n != c {
        return Err(Error::Dimension { expected: n, got: c });
    }
    if n == 0 {
        return Err(invalid("empty game matrix"));
    }
    Ok(n)
}

fn random_unit_rows(rows: usize, dim: usize, rng: &mut impl Rng) -> Matrix {
    let mut m = Matrix::zeros(rows, dim);
    for i in 0..rows {
        fill_unit_row(&mut m, i, rng);
    }
    m
}

fn fill_unit_row(m: &mut Matrix, i: usize, rng: &mut impl Rng) {
    loop {
        for k in 0..m.ncols() {
            m[(i, k)] = rng.sample(StandardNormal);
        }
        let norm = m.row(i).norm();
        if norm > 0.0 {
            m.row_mut(i).unscale_mut(norm);
            return;
        }
    }
}

/// Normalizes every row; rows that cancel to zero are re-drawn at random.
fn normalize_rows(m: &mut Matrix, rng: &mut impl Rng) {
    for i in 0..m.nrows() {
        let norm = m.row(i).norm();
        if norm > 1e-300 {
            m.row_mut(i).unscale_mut(norm);
        } else {
            log::debug!("ascent: row {i} cancelled, reinitializing");
            fill_unit_row(m, i, rng);
        }
    }
}

fn objective(a: &Matrix, u: &Matrix, v: &Matrix) -> f64 {
    a.dot(&(u * v.transpose()))
}

/// One ascent run from `u`; returns the final `(u, v)` and the objective
/// after every half step.
fn ascend(
    a: &Matrix,
    mut u: Matrix,
    max_iters: usize,
    tol: f64,
    rng: &mut impl Rng,
) -> (Matrix, Matrix, Vec<f64>) {
    let mut trace = Vec::new();
    let mut v = a.transpose() * &u;
    normalize_rows(&mut v, rng);
    trace.push(objective(a, &u, &v));
    let mut last = trace[0];
    for _ in 0..max_iters {
        // u_i <- normalize(sum_j a_ij v_j) maximizes each u_i given v.
        u = a * &v;
        normalize_rows(&mut u, rng);
        trace.push(objective(a, &u, &v));
        v = a.transpose() * &u;
        normalize_rows(&mut v, rng);
        let cur = objective(a, &u, &v);
        trace.push(cur);
        if cur - last <= tol * cur.abs().max(1.0) {
            break;
        }
        last = cur;
    }
    (u, v, trace)
}

/// Objective sequence of a single ascent run (one value per half step).
pub fn ascent_trace(a: &Matrix, opts: &AscentOptions) -> Result<Vec<f64>> {
    let n = check_square(a)?;
    let rank = opts.rank.unwrap_or(2 * n);
    let mut rng = opts.seed.index(0).rng();
    let u0 = random_unit_rows(n, rank, &mut rng);
    Ok(ascend(a, u0, opts.max_iters, opts.tol, &mut rng).2)
}

/// Best value over `restarts` random starts of the alternating ascent
/// `v_j <- normalize(sum_i a_ij u_i)`, `u_i <- normalize(sum_j a_ij v_j)`.
pub fn quantum_value_lower(a: &Matrix, opts: &AscentOptions) -> Result<QuantumLower> {
    let n = check_square(a)?;
    let rank = opts.rank.unwrap_or(2 * n);
    if rank == 0 {
        return Err(invalid("ascent rank must be >= 1"));
    }
    let mut best: Option<(f64, Matrix, Matrix, usize)> = None;
    for r in 0..opts.restarts.max(1) {
        let mut rng = opts.seed.index(r as u64).rng();
        let u0 = random_unit_rows(n, rank, &mut rng);
        let (u, v, trace) = ascend(a, u0, opts.max_iters, opts.tol, &mut rng);
        let value = objective(a, &u, &v);
        if best.as_ref().is_none_or(|b| value > b.0) {
            best = Some((value, u, v, trace.len() / 2));
        }
    }
    let (value, u, v, iterations) = best.expect("at least one restart");
    Ok(QuantumLower {
        value,
        ensemble: VectorEnsemble::new(u, v)?,
        iterations,
    })
}

fn block_matrix(a: &Matrix) -> DMatrix<f64> {
    let n = a.nrows();
    let mut m = DMatrix::zeros(2 * n, 2 * n);
    for i in 0..n {
        for j in 0..n {
            m[(i, n + j)] = a[(i, j)] / 2.0;
            m[(n + j, i)] = a[(i, j)] / 2.0;
        }
    }
    m
}

/// Smallest eigenpair of `diag(lambda) - M`.
fn min_eigen(m: &DMatrix<f64>, lambda: &[f64]) -> Option<(f64, DVector<f64>)> {
    let mut d = -m.clone();
    for (k, l) in lambda.iter().enumerate() {
        d[(k, k)] += l;
    }
    let eig = SymmetricEigen::try_new(d, 1e-14, 10_000)?;
    let (k, &val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.total_cmp(y.1))?;
    Some((val, eig.eigenvectors.column(k).into_owned()))
}

/// Certified upper bound on `omega*(A)` by subgradient descent on
/// `F(lambda) = sum(lambda) - 2n * lambda_min(diag(lambda) - M(A))`, started at
/// `lambda_k = sigma_max(A) / 2`. `F(lambda)` is the value of the feasible point
/// `lambda - lambda_min * 1`, so every iterate is a valid bound.
pub fn quantum_value_upper(a: &Matrix, opts: &UpperOptions) -> Result<QuantumUpper> {
    let n = check_square(a)?;
    let dim = 2 * n;
    let m = block_matrix(a);
    let sigma_max = a
        .clone()
        .try_svd(false, false, 1e-14, 10_000)
        .ok_or_else(|| Error::Numerical("SVD of the game matrix did not converge".into()))?
        .singular_values
        .max();
    let mut lambda = vec![sigma_max / 2.0; dim];

    let certify = |lambda: &[f64], shift: f64| -> (Vec<f64>, f64) {
        // Shift by the smallest eigenvalue plus a sliver so rounding in the
        // eigen solver cannot leave the point infeasible.
        let margin = 4.0 * f64::EPSILON * sigma_max.max(1.0) * dim as f64;
        let shifted: Vec<f64> = lambda.iter().map(|l| l - shift + margin).collect();
        let total = shifted.iter().sum();
        (shifted, total)
    };

    let Some((e0, mut x)) = min_eigen(&m, &lambda) else {
        // diag(sigma/2) - M is PSD by construction; keep it with a warning.
        let total = sigma_max * n as f64;
        return Ok(QuantumUpper {
            value: total,
            lambda,
            min_eigenvalue: 0.0,
            warning: true,
        });
    };
    let (mut best_lambda, mut best) = certify(&lambda, e0);
    let mut best_eig = e0;
    let mut warning = false;
    let mut history = vec![best];

    let step0 = sigma_max.max(1e-12) / (dim as f64).sqrt();
    for k in 0..opts.max_iters {
        // Subgradient of F: 1 - 2n x.^2 (sums to zero, so it only redistributes).
        let step = step0 / ((k + 1) as f64).sqrt();
        for (l, xi) in lambda.iter_mut().zip(x.iter()) {
            *l -= step * (1.0 - dim as f64 * xi * xi);
        }
        let Some((e, xn)) = min_eigen(&m, &lambda) else {
            warning = true;
            break;
        };
        x = xn;
        let (cand, total) = certify(&lambda, e);
        if total < best {
            best = total;
            best_lambda = cand;
            best_eig = e;
        }
        history.push(best);
        if history.len() > 50 {
            let old = history[history.len() - 51];
            if old - best <= opts.tol * best.abs().max(1.0) {
                break;
            }
        }
    }

    let min_eigenvalue = match min_eigen(&m, &best_lambda) {
        Some((e, _)) => e,
        None => {
            warning = true;
            -best_eig.min(0.0)
        }
    };
    Ok(QuantumUpper {
        value: best,
        lambda: best_lambda,
        min_eigenvalue,
        warning,
    })
}

pub fn quantum_value_bounds(
    a: &Matrix,
    ascent: &AscentOptions,
    upper: &UpperOptions,
) -> Result<QuantumValueBounds> {
    let lo = quantum_value_lower(a, ascent)?;
    let hi = quantum_value_upper(a, upper)?;
    Ok(QuantumValueBounds {
        lower: lo.value,
        upper: hi.value,
        ensemble: lo.ensemble,
        lambda: hi.lambda,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::gram;
    use crate::tolerance::EIGEN_FEASIBILITY;
    use crate::values::classical_value_exact;
    use std::f64::consts::SQRT_2;

    fn chsh() -> Matrix {
        Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0])
    }

    #[test]
    fn chsh_lower_reaches_tsirelson() {
        let lo = quantum_value_lower(&chsh(), &AscentOptions::default()).unwrap();
        assert!(lo.value >= 2.0 * SQRT_2 - 1e-6);
        let gamma = gram(&lo.ensemble);
        assert!((chsh().dot(gamma.entries()) - lo.value).abs() < 1e-10);
    }

    #[test]
    fn identity_lower_is_n() {
        let lo = quantum_value_lower(&Matrix::identity(4, 4), &AscentOptions::default()).unwrap();
        assert!((lo.value - 4.0).abs() < 1e-9);
    }

    #[test]
    fn ascent_is_monotone() {
        let a = Matrix::from_fn(7, 7, |i, j| ((i * 5 + j * 3) % 7) as f64 - 3.0);
        let trace = ascent_trace(&a, &AscentOptions::default()).unwrap();
        for w in trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-12, "{} then {}", w[0], w[1]);
        }
    }

    #[test]
    fn chsh_upper_is_tight() {
        let hi = quantum_value_upper(&chsh(), &UpperOptions::default()).unwrap();
        assert!(hi.value >= 2.0 * SQRT_2 - 1e-12);
        assert!(hi.value <= 2.0 * SQRT_2 + 0.05);
        assert!(hi.min_eigenvalue >= -EIGEN_FEASIBILITY);
    }

    #[test]
    fn identity_gap_closes() {
        let a = Matrix::identity(4, 4);
        let b = quantum_value_bounds(&a, &AscentOptions::default(), &UpperOptions::default())
            .unwrap();
        assert!(b.upper >= 4.0 - 1e-9);
        assert!(b.upper - b.lower <= 0.05);
    }

    #[test]
    fn upper_is_feasible_on_random_instances() {
        for k in 0..100u64 {
            let mut rng = Seed::new(k).tag("upper-test").rng();
            let a = Matrix::from_fn(8, 8, |_, _| rng.sample::<f64, _>(StandardNormal));
            let hi = quantum_value_upper(&a, &UpperOptions { max_iters: 200, tol: 1e-9 }).unwrap();
            assert!(hi.min_eigenvalue >= -EIGEN_FEASIBILITY, "instance {k}: {}", hi.min_eigenvalue);
            let (omega, _) = classical_value_exact(&a).unwrap();
            assert!(hi.value >= omega - 1e-9);
        }
    }
}
