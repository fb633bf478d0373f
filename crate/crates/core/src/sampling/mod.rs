//! Seed-reproducible random objects: gaussian matrices, Haar-sphere and
//! Bernoulli ensembles, Haar orthogonal matrices and the SVD-coupled triple
//! `(A, U, V)`.
//!
//! Gaussians are drawn with `rand_distr::StandardNormal` (ziggurat) from the
//! ChaCha20 stream of the seed, in row-major order. Nothing else touches the
//! stream, so outputs are a pure function of dimensions and seed path.

mod seed;

use std::sync::Once;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::correlations::{Matrix, VectorEnsemble};
use crate::error::{invalid, Error, Result};
use crate::tolerance::GS_PIVOT;

pub use seed::{Label, Seed};

static ZERO_NORM_WARNING: Once = Once::new();

fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(invalid(format!(
            "dimensions must be >= 1, got {rows} x {cols}"
        )));
    }
    Ok(())
}

/// `rows x cols` matrix of i.i.d. standard normals, drawn row by row.
pub fn sample_gaussian_matrix(rows: usize, cols: usize, seed: &Seed) -> Result<Matrix> {
    check_dims(rows, cols)?;
    let mut rng = seed.rng();
    let mut m = Matrix::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            m[(i, j)] = rng.sample(StandardNormal);
        }
    }
    Ok(m)
}

fn normalized_gaussian_rows(n: usize, m: usize, seed: &Seed) -> Matrix {
    let mut rng = seed.rng();
    let mut out = Matrix::zeros(n, m);
    for i in 0..n {
        loop {
            for k in 0..m {
                out[(i, k)] = rng.sample(StandardNormal);
            }
            let norm = out.row(i).norm();
            if norm > 0.0 {
                out.row_mut(i).unscale_mut(norm);
                break;
            }
            ZERO_NORM_WARNING.call_once(|| {
                log::warn!("gaussian vector of norm zero drawn; resampling");
            });
        }
    }
    out
}

/// `2n` independent uniform vectors on `S^{m-1}`, realized as normalized
/// gaussian vectors. Alice's come from `seed/u`, Bob's from `seed/v`.
pub fn sample_haar_sphere_ensemble(n: usize, m: usize, seed: &Seed) -> Result<VectorEnsemble> {
    check_dims(n, m)?;
    let u = normalized_gaussian_rows(n, m, &seed.tag("u"));
    let v = normalized_gaussian_rows(n, m, &seed.tag("v"));
    VectorEnsemble::new(u, v)
}

fn bernoulli_rows(n: usize, m: usize, seed: &Seed) -> Matrix {
    let mut rng = seed.rng();
    let scale = 1.0 / (m as f64).sqrt();
    let mut out = Matrix::zeros(n, m);
    for i in 0..n {
        for k in 0..m {
            out[(i, k)] = if rng.random::<bool>() { scale } else { -scale };
        }
    }
    out
}

/// Vectors `(1/sqrt(m)) (+-1, ..., +-1)` with i.i.d. fair signs.
pub fn sample_bernoulli_ensemble(n: usize, m: usize, seed: &Seed) -> Result<VectorEnsemble> {
    check_dims(n, m)?;
    let u = bernoulli_rows(n, m, &seed.tag("u"));
    let v = bernoulli_rows(n, m, &seed.tag("v"));
    // Rounding of 1/sqrt(m) can leave the norm a few ulps off 1.
    let fix = |mut x: Matrix| {
        for i in 0..x.nrows() {
            let norm = x.row(i).norm();
            x.row_mut(i).unscale_mut(norm);
        }
        x
    };
    VectorEnsemble::new(fix(u), fix(v))
}

/// Modified Gram-Schmidt with one reorthogonalization pass on the first
/// `k` columns of `g`. Column `c` of the result spans the same space as
/// columns `0..=c` of `g`, and the implied triangular factor has a positive
/// diagonal. Column `c` depends only on columns `0..=c` of the input.
pub fn gram_schmidt_columns(g: &Matrix, k: usize) -> Result<Matrix> {
    let rows = g.nrows();
    if k > g.ncols() || k > rows {
        return Err(invalid(format!(
            "cannot orthonormalize {k} columns of a {rows} x {} matrix",
            g.ncols()
        )));
    }
    let mut q = Matrix::zeros(rows, k);
    for c in 0..k {
        let original = g.column(c).norm();
        let mut v = g.column(c).into_owned();
        for _pass in 0..2 {
            for p in 0..c {
                let qp = q.column(p);
                let r = qp.dot(&v);
                v.axpy(-r, &qp, 1.0);
            }
        }
        let pivot = v.norm();
        if !(pivot > GS_PIVOT * original) || original == 0.0 {
            return Err(Error::DegenerateInput(format!(
                "column {c} is numerically dependent on the previous ones \
                 (residual {pivot:e}, column norm {original:e})"
            )));
        }
        q.set_column(c, &(v / pivot));
    }
    Ok(q)
}

/// Gram-Schmidt orthonormalization of the columns of a square matrix.
/// For a gaussian input the result is Haar distributed on `O(n)`.
pub fn gram_schmidt(g: &Matrix) -> Result<Matrix> {
    if g.nrows() != g.ncols() {
        return Err(Error::Dimension {
            expected: g.nrows(),
            got: g.ncols(),
        });
    }
    check_dims(g.nrows(), g.ncols())?;
    gram_schmidt_columns(g, g.ncols())
}

/// Gaussian `A` with an SVD `A = U diag(sigma) V^T`, `sigma` decreasing.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledSvdSample {
    pub a: Matrix,
    pub u: Matrix,
    pub v: Matrix,
    pub sigma: Vec<f64>,
}

impl CoupledSvdSample {
    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    /// `max |A - U diag(sigma) V^T|`.
    pub fn reconstruction_error(&self) -> f64 {
        let n = self.n();
        let mut us = self.u.clone();
        for k in 0..n {
            us.column_mut(k).scale_mut(self.sigma[k]);
        }
        (&us * self.v.transpose() - &self.a).amax()
    }
}

/// Samples a gaussian `n x n` matrix from `seed/a` and its SVD. The SVD is a
/// Golub-Kahan implicit-shift iteration (nalgebra) with relative tolerance
/// 1e-12. Afterwards each pair `(u_k, v_k)` is negated with probability 1/2
/// using `seed/signs`, which makes `U` and `V` independent and Haar.
pub fn sample_coupled_svd(n: usize, seed: &Seed) -> Result<CoupledSvdSample> {
    check_dims(n, n)?;
    let a = sample_gaussian_matrix(n, n, &seed.tag("a"))?;
    let svd = nalgebra::SVD::try_new(a.clone(), true, true, 1e-12, 1000 * n.max(10))
        .ok_or_else(|| Error::Numerical(format!("SVD of the {n} x {n} sample did not converge")))?;
    let mut u: DMatrix<f64> = svd.u.expect("requested U");
    let mut v: DMatrix<f64> = svd.v_t.expect("requested V^T").transpose();
    let sigma: Vec<f64> = svd.singular_values.iter().copied().collect();

    let mut rng = seed.tag("signs").rng();
    for k in 0..n {
        if rng.random::<bool>() {
            u.column_mut(k).neg_mut();
            v.column_mut(k).neg_mut();
        }
    }
    Ok(CoupledSvdSample { a, u, v, sigma })
}

/// Euclidean norms of the rows of `m` restricted to the first `k` columns.
pub fn truncated_row_norms(m: &Matrix, k: usize) -> Result<Vec<f64>> {
    if k == 0 || k > m.ncols() {
        return Err(invalid(format!(
            "truncation length {k} outside 1..={}",
            m.ncols()
        )));
    }
    Ok((0..m.nrows())
        .map(|i| m.view((i, 0), (1, k)).norm())
        .collect())
}

/// Rows of `m` cut to their first `k` entries and normalized.
pub fn truncate_and_normalize_rows(m: &Matrix, k: usize) -> Result<Matrix> {
    let norms = truncated_row_norms(m, k)?;
    let mut out = m.columns(0, k).into_owned();
    for (i, &norm) in norms.iter().enumerate() {
        if norm < 1e-12 {
            return Err(Error::DegenerateInput(format!(
                "row {i} truncated to {k} entries has norm {norm:e}"
            )));
        }
        out.row_mut(i).unscale_mut(norm);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::gram;
    use crate::tolerance::ORTHOGONALITY;

    #[test]
    fn gaussian_moments() {
        let g = sample_gaussian_matrix(1000, 1000, &Seed::new(1)).unwrap();
        let n = g.len() as f64;
        let mean = g.sum() / n;
        let var = g.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 4e-3, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn gaussian_is_deterministic() {
        let s = Seed::new(9).tag("x");
        assert_eq!(
            sample_gaussian_matrix(5, 4, &s).unwrap(),
            sample_gaussian_matrix(5, 4, &s).unwrap()
        );
        assert_ne!(
            sample_gaussian_matrix(5, 4, &s).unwrap(),
            sample_gaussian_matrix(5, 4, &s.index(1)).unwrap()
        );
    }

    #[test]
    fn zero_dimensions_rejected() {
        assert!(sample_gaussian_matrix(0, 3, &Seed::new(0)).is_err());
        assert!(sample_haar_sphere_ensemble(3, 0, &Seed::new(0)).is_err());
        assert!(sample_bernoulli_ensemble(0, 3, &Seed::new(0)).is_err());
    }

    #[test]
    fn sphere_vectors_are_unit() {
        let e = sample_haar_sphere_ensemble(50, 7, &Seed::new(2)).unwrap();
        for row in e.u().row_iter().chain(e.v().row_iter()) {
            assert!((row.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn one_dimensional_sphere_is_signs() {
        let e = sample_haar_sphere_ensemble(20, 1, &Seed::new(3)).unwrap();
        assert!(e.u().iter().chain(e.v().iter()).all(|x| x.abs() == 1.0));
    }

    #[test]
    fn sphere_inner_products_are_centered() {
        let trials = 10_000;
        let mean: f64 = (0..trials)
            .map(|t| {
                let e = sample_haar_sphere_ensemble(1, 25, &Seed::new(4).index(t)).unwrap();
                e.u().row(0).dot(&e.v().row(0))
            })
            .sum::<f64>()
            / trials as f64;
        assert!(mean.abs() < 3e-2, "mean {mean}");
    }

    #[test]
    fn bernoulli_coordinates_and_gram_lattice() {
        let m = 6;
        let e = sample_bernoulli_ensemble(8, m, &Seed::new(5)).unwrap();
        let scale = 1.0 / (m as f64).sqrt();
        assert!(e.u().iter().all(|x| (x.abs() - scale).abs() < 1e-15));
        let g = gram(&e);
        for x in g.entries().iter() {
            let k = (x * m as f64 + m as f64) / 2.0;
            assert!((k - k.round()).abs() < 1e-12, "{x} not on the 2/m lattice");
        }
    }

    #[test]
    fn gram_schmidt_fixed_points() {
        let d = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        assert_eq!(gram_schmidt(&d).unwrap(), Matrix::identity(2, 2));

        let c = (0.3f64).cos();
        let s = (0.3f64).sin();
        let rot = Matrix::from_row_slice(2, 2, &[c, -s, s, c]);
        assert!((gram_schmidt(&rot).unwrap() - &rot).amax() < 1e-15);
    }

    #[test]
    fn gram_schmidt_orthogonal_and_idempotent() {
        let g = sample_gaussian_matrix(500, 500, &Seed::new(6)).unwrap();
        let q = gram_schmidt(&g).unwrap();
        let err = (q.transpose() * &q - Matrix::identity(500, 500)).amax();
        assert!(err < ORTHOGONALITY, "orthogonality error {err:e}");
        let q2 = gram_schmidt(&q).unwrap();
        assert!((q2 - &q).amax() < 1e-12);
    }

    #[test]
    fn gram_schmidt_detects_rank_deficiency() {
        let g = Matrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 1.0, 2.0, 1.0, 1.0, 2.0, 0.0]);
        assert!(matches!(gram_schmidt(&g), Err(Error::DegenerateInput(_))));
    }

    #[test]
    fn coupled_svd_invariants() {
        let s = sample_coupled_svd(60, &Seed::new(7)).unwrap();
        assert!(s.reconstruction_error() <= 1e-8 * s.a.amax());
        assert!(s.sigma.windows(2).all(|w| w[0] >= w[1]) && s.sigma[59] >= 0.0);
        let id = Matrix::identity(60, 60);
        assert!((s.u.transpose() * &s.u - &id).amax() < ORTHOGONALITY);
        assert!((s.v.transpose() * &s.v - &id).amax() < ORTHOGONALITY);
    }

    #[test]
    fn coupled_u_entries_have_variance_one_over_n() {
        let n = 200;
        let (mut sum, mut sq, mut count) = (0.0, 0.0, 0.0);
        for t in 0..100 {
            let s = sample_coupled_svd(n, &Seed::new(8).index(t)).unwrap();
            for x in s.u.column(0).iter() {
                sum += x;
                sq += x * x;
                count += 1.0;
            }
        }
        let mean = sum / count;
        let var = sq / count - mean * mean;
        assert!(mean.abs() < 4.0 / (count * n as f64).sqrt(), "mean {mean}");
        assert!((var * n as f64 - 1.0).abs() < 0.05, "n * var = {}", var * n as f64);
    }

    #[test]
    fn truncation_of_identity() {
        let id = Matrix::identity(4, 4);
        assert_eq!(truncate_and_normalize_rows(&id, 4).unwrap(), id);
        assert!(matches!(
            truncate_and_normalize_rows(&id, 1),
            Err(Error::DegenerateInput(_))
        ));
        assert!(truncate_and_normalize_rows(&id, 0).is_err());
        assert!(truncate_and_normalize_rows(&id, 5).is_err());
    }

    #[test]
    fn truncated_norms_concentrate() {
        let (n, m) = (400, 100);
        let g = sample_gaussian_matrix(n, n, &Seed::new(10)).unwrap();
        let q = gram_schmidt(&g).unwrap();
        let target = (m as f64 / n as f64).sqrt();
        let norms = truncated_row_norms(&q, m).unwrap();
        let inside = norms
            .iter()
            .filter(|&&x| x >= 0.8 * target && x <= 1.25 * target)
            .count();
        assert!(inside as f64 >= 0.95 * n as f64, "{inside} of {n}");
    }
}
