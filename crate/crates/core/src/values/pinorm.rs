//! Projective norm `||gamma||_pi` on `l_inf^n (x) l_inf^n` by column generation.
//!
//! Master LP over a growing set of sign matrices `S_k = s_k t_k^T`:
//!
//! ```text
//! min  sum_k w_k + sum_e (p_e + q_e)
//! s.t. sum_k w_k S_k + p - q = gamma,   w, p, q >= 0
//! ```
//!
//! Its dual is `max <A, gamma>` over the box `|a_e| <= 1` cut by
//! `<A, S_k> <= 1`, so the LP multipliers are the Bell functional `A` and
//! pricing a new column is exactly `omega(A)`. The box is valid because
//! `omega(A) >= max_e |a_e|`. At every iterate the primal is a feasible
//! decomposition (slack `p_e - q_e` expands into four sign matrices of weight
//! `1/4`, since `e_i = (1 + s^(i))/2` with `s^(i)` the sign vector that is `+1`
//! only at `i`), so the objective `V` upper-bounds the norm; `A / omega(A)`
//! has classical value 1, so `V / omega(A)` lower-bounds it.
//!
//! Each round adds every violated best response among the `n` best sign
//! vectors. Pricing is done at a mix of the current duals and the best
//! functional found so far, which starts from a short subgradient ascent on
//! `<A, gamma> / omega(A)`.

use std::collections::BTreeMap;

use super::classical::{best_responses, classical_value_exact};
use super::simplex::{Column, RevisedSimplex};
use crate::correlations::{BellWitness, Certificate, ClassicalBound, Matrix, SignPair};
use crate::error::{invalid, Error, Result};
use crate::sampling::Seed;
use crate::tolerance::EXACT_LIMIT;

use rand::Rng;

/// Size of the right-hand-side perturbation used while generating columns.
const PERTURBATION: f64 = 1e-7;

/// Weight of the best functional so far in the pricing point.
const SMOOTHING: f64 = 0.5;

/// Subgradient steps spent on a starting functional before the LP.
const WARM_STEPS: usize = 50;
const WARM_RATE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
pub struct PiNormOptions {
    /// Stop once `omega(A) <= 1 + tol`.
    pub tol: f64,
    /// Budget of pricing rounds (each adds up to `n` columns); defaults to `50 n^2`.
    pub max_cuts: Option<usize>,
    /// Stop early once the bracket is on one side of this value: the upper
    /// bound drops to it, or the lower bound exceeds it by `decide_margin`.
    pub decide_at: Option<f64>,
    pub decide_margin: f64,
}

impl Default for PiNormOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_cuts: None,
            decide_at: None,
            decide_margin: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PiNormResult {
    /// Upper end of the bracket: total weight of `decomposition`. Equals the
    /// norm to within `tol` (relative) when `converged`.
    pub value: f64,
    /// Lower end: `<dual_witness, gamma>`.
    pub lower: f64,
    pub converged: bool,
    /// `LocalDecomposition` with total `value`.
    pub decomposition: Certificate,
    /// Scaled to `omega = 1`, with the exact classical bound attached.
    pub dual_witness: BellWitness,
    /// Pricing rounds performed.
    pub iterations: usize,
}

impl PiNormResult {
    /// `LocalDecomposition` certificate when the bracket shows `<= 1`.
    pub fn local_certificate(&self) -> Option<&Certificate> {
        (self.value <= 1.0 + crate::tolerance::RECONSTRUCTION).then_some(&self.decomposition)
    }

    /// `NonlocalExact` certificate when the dual witness is violated.
    pub fn nonlocal_certificate(&self, margin: f64) -> Option<Certificate> {
        let omega = match self.dual_witness.bound() {
            ClassicalBound::Exact(w) => *w,
            _ => return None,
        };
        (self.lower > omega + margin).then(|| Certificate::NonlocalExact {
            witness: self.dual_witness.clone(),
            inner_product: self.lower,
        })
    }
}

/// Exact projective norm, run to convergence.
pub fn pi_norm_exact(gamma: &Matrix, tol: f64) -> Result<PiNormResult> {
    pi_norm_with(
        gamma,
        &PiNormOptions {
            tol,
            ..PiNormOptions::default()
        },
    )
}

pub fn pi_norm_with(gamma: &Matrix, opts: &PiNormOptions) -> Result<PiNormResult> {
    let (n, c) = gamma.shape();
    if n != c {
        return Err(Error::Dimension { expected: n, got: c });
    }
    if n == 0 {
        return Err(invalid("projective norm of an empty matrix"));
    }
    if n > EXACT_LIMIT {
        return Err(Error::SizeGuard {
            n,
            limit: EXACT_LIMIT,
        });
    }
    if !(opts.tol >= 0.0) {
        return Err(invalid(format!("tolerance {} must be >= 0", opts.tol)));
    }
    let rows = n * n;
    let idx = |i: usize, j: usize| i * n + j;

    // Columns 0..rows are +e, rows..2 rows are -e; sign matrices follow.
    let mut columns = Vec::with_capacity(2 * rows);
    for sign in [1.0, -1.0] {
        for e in 0..rows {
            columns.push(Column::Unit { row: e, sign });
        }
    }
    let rhs: Vec<f64> = (0..rows).map(|e| gamma[(e / n, e % n)]).collect();
    // Exact data tends to sit on a face of the local polytope, where the
    // primal simplex stalls on degenerate pivots. The column generation runs
    // on a slightly perturbed right-hand side first; the exact one is put
    // back at the end and primal feasibility repaired by dual pivots.
    let mut rng = Seed::new(0).tag("pi-norm-perturbation").rng();
    let perturbed: Vec<f64> = rhs
        .iter()
        .map(|&g| g + PERTURBATION * rng.random_range(-1.0..1.0))
        .collect();
    let basis: Vec<usize> = perturbed
        .iter()
        .enumerate()
        .map(|(e, &g)| if g >= 0.0 { e } else { rows + e })
        .collect();
    let mut lp = RevisedSimplex::new(perturbed, columns, vec![1.0; 2 * rows], basis)?;
    let mut pairs: Vec<SignPair> = Vec::new();

    let max_cuts = opts.max_cuts.unwrap_or(50 * rows);
    let max_pivots = 200 * rows + 10_000;
    let mut iterations = 0usize;
    let mut exact = false;

    // Best functional seen so far, kept at omega = 1 together with its lower
    // bound. Pricing happens at a point between it and the current duals,
    // which damps the oscillation of the duals between rounds.
    let target = opts.decide_at.map(|thr| thr + opts.decide_margin);
    let mut center = warm_witness(gamma, target)?;
    loop {
        lp.solve(max_pivots)?;
        let y = lp.duals();
        let a = Matrix::from_fn(n, n, |i, j| y[idx(i, j)]);

        let mut cuts = Vec::new();
        let mut omega_a = None;
        for smoothing in [SMOOTHING, 0.0] {
            let point = if smoothing > 0.0 {
                &center.0 * smoothing + &a * (1.0 - smoothing)
            } else {
                a.clone()
            };
            let responses = best_responses(&point, n)?;
            let omega = responses[0].0;
            // Valid for any functional, perturbed duals included.
            if omega > 0.0 {
                let lower = point.dot(gamma) / omega;
                if lower > center.1 {
                    center = (point / omega, lower);
                }
            }
            if smoothing == 0.0 {
                omega_a = Some(omega);
            }
            cuts = responses
                .into_iter()
                .filter(|(_, pair)| pair.evaluate(&a) > 1.0 + opts.tol)
                .collect();
            if !cuts.is_empty() {
                break;
            }
        }

        let converged = omega_a.is_some_and(|w| w <= 1.0 + opts.tol);
        let decided = opts.decide_at.is_some_and(|thr| {
            center.1 > thr + opts.decide_margin || (exact && lp.objective() <= thr)
        });
        if converged || decided || iterations >= max_cuts {
            if exact {
                return finish(gamma, &lp, &pairs, center.0, converged, iterations);
            }
            lp.set_rhs(rhs.clone())?;
            lp.dual_solve(max_pivots)?;
            exact = true;
            continue;
        }

        // Every violated response is a useful column, not just the best.
        for (_, pair) in cuts {
            let (s, t) = (pair.s(), pair.t());
            let dense: Vec<f64> = (0..rows)
                .map(|e| f64::from(s[e / n] * t[e % n]))
                .collect();
            lp.add_column(Column::Dense(dense), 1.0);
            pairs.push(pair);
        }
        iterations += 1;
    }
}

/// Projected subgradient ascent on `<A, gamma> / omega(A)` from `A = gamma`,
/// returning the best functional (scaled to `omega = 1`) and its value.
/// Stops early once the value exceeds `target`.
fn warm_witness(gamma: &Matrix, target: Option<f64>) -> Result<(Matrix, f64)> {
    let n = gamma.nrows();
    let norm = gamma.norm();
    if norm == 0.0 {
        return Ok((Matrix::zeros(n, n), 0.0));
    }
    let mut a = gamma / norm;
    let mut best = (Matrix::zeros(n, n), 0.0);
    for step in 0..WARM_STEPS {
        let (omega, pair) = classical_value_exact(&a)?;
        let value = a.dot(gamma) / omega;
        if value > best.1 {
            best = (&a / omega, value);
        }
        if target.is_some_and(|t| best.1 > t) {
            break;
        }
        let (s, t) = (pair.s(), pair.t());
        let grad = Matrix::from_fn(n, n, |i, j| {
            gamma[(i, j)] - value * f64::from(s[i] * t[j])
        });
        let g = grad.norm();
        if g == 0.0 {
            break;
        }
        a += grad * (WARM_RATE / ((1 + step) as f64).sqrt() / g);
        a /= a.norm();
    }
    Ok(best)
}

fn finish(
    gamma: &Matrix,
    lp: &RevisedSimplex,
    pairs: &[SignPair],
    a: Matrix,
    converged: bool,
    iterations: usize,
) -> Result<PiNormResult> {
    let n = gamma.nrows();
    let (omega, _) = classical_value_exact(&a)?;
    let rows = n * n;
    let mut weights: BTreeMap<SignPair, f64> = BTreeMap::new();
    let mut add = |w: f64, pair: SignPair| {
        *weights.entry(pair.canonical()).or_insert(0.0) += w;
    };
    for (col, x) in lp.primal() {
        if col >= 2 * rows {
            add(x, pairs[col - 2 * rows].clone());
            continue;
        }
        let sign: i8 = if col < rows { 1 } else { -1 };
        let e = col % rows;
        let (i, j) = (e / n, e % n);
        let ones = vec![1i8; n];
        let point = |k: usize| -> Vec<i8> {
            (0..n).map(|l| if l == k { 1 } else { -1 }).collect()
        };
        let signed = |v: Vec<i8>| -> Vec<i8> { v.into_iter().map(|x| x * sign).collect() };
        for s in [ones.clone(), point(i)] {
            for t in [ones.clone(), point(j)] {
                add(x / 4.0, SignPair::new(s.clone(), signed(t))?);
            }
        }
    }
    let terms: Vec<(f64, SignPair)> = weights
        .into_iter()
        .filter(|(_, w)| *w > 0.0)
        .map(|(p, w)| (w, p))
        .collect();
    let total: f64 = terms.iter().map(|(w, _)| w).sum();

    let (witness, lower) = if omega > 0.0 {
        let scaled = a / omega;
        let lower = scaled.dot(gamma);
        (BellWitness::with_exact_bound(scaled)?, lower)
    } else {
        (BellWitness::new(a, ClassicalBound::Exact(0.0))?, 0.0)
    };
    Ok(PiNormResult {
        value: total,
        lower,
        converged,
        decomposition: Certificate::LocalDecomposition { terms, total },
        dual_witness: witness,
        iterations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::{verify_certificate, CorrelationMatrix};
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    /// Oracle for n = 2: the dual LP `max <A, gamma>` over `|s^T A t| <= 1` for
    /// all 8 distinct sign matrices, solved by enumerating vertices. Every
    /// vertex of the 4-dimensional polytope is the solution of 4 tight
    /// constraints; the 16 constraints are `+-<S_k, A> <= 1`.
    fn dual_oracle_2x2(gamma: &Matrix) -> f64 {
        let mut cons: Vec<[f64; 4]> = Vec::new();
        for sc in 0..4u32 {
            for tc in 0..4u32 {
                let s = [1.0 - 2.0 * (sc & 1) as f64, 1.0 - 2.0 * ((sc >> 1) & 1) as f64];
                let t = [1.0 - 2.0 * (tc & 1) as f64, 1.0 - 2.0 * ((tc >> 1) & 1) as f64];
                cons.push([s[0] * t[0], s[0] * t[1], s[1] * t[0], s[1] * t[1]]);
            }
        }
        let g = [gamma[(0, 0)], gamma[(0, 1)], gamma[(1, 0)], gamma[(1, 1)]];
        let mut best = f64::NEG_INFINITY;
        let k = cons.len();
        for a in 0..k {
            for b in a + 1..k {
                for c in b + 1..k {
                    for d in c + 1..k {
                        let m = nalgebra::Matrix4::from_rows(&[
                            nalgebra::RowVector4::from_row_slice(&cons[a]),
                            nalgebra::RowVector4::from_row_slice(&cons[b]),
                            nalgebra::RowVector4::from_row_slice(&cons[c]),
                            nalgebra::RowVector4::from_row_slice(&cons[d]),
                        ]);
                        let Some(x) = m.lu().solve(&nalgebra::Vector4::repeat(1.0)) else {
                            continue;
                        };
                        if cons.iter().all(|r| {
                            (r[0] * x[0] + r[1] * x[1] + r[2] * x[2] + r[3] * x[3]).abs()
                                <= 1.0 + 1e-9
                        }) {
                            let v = g[0] * x[0] + g[1] * x[1] + g[2] * x[2] + g[3] * x[3];
                            best = best.max(v);
                        }
                    }
                }
            }
        }
        best
    }

    fn chsh_gamma() -> Matrix {
        Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]) * FRAC_1_SQRT_2
    }

    #[test]
    fn oracle_sanity() {
        assert!((dual_oracle_2x2(&chsh_gamma()) - SQRT_2).abs() < 1e-12);
        assert!((dual_oracle_2x2(&Matrix::identity(2, 2)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_correlation_has_norm_one() {
        let pair = SignPair::new(vec![1, -1, -1], vec![1, 1, -1]).unwrap();
        let r = pi_norm_exact(&pair.outer(), 1e-10).unwrap();
        assert!(r.converged);
        assert!((r.value - 1.0).abs() < 1e-9);
        assert!((r.lower - 1.0).abs() < 1e-9);
    }

    #[test]
    fn warm_witness_decides_chsh_without_cuts() {
        let (a, lower) = warm_witness(&chsh_gamma(), Some(1.1)).unwrap();
        assert!((lower - SQRT_2).abs() < 1e-12, "{lower}");
        assert!((classical_value_exact(&a).unwrap().0 - 1.0).abs() < 1e-12);
        let opts = PiNormOptions {
            decide_at: Some(1.0),
            ..Default::default()
        };
        let r = pi_norm_with(&chsh_gamma(), &opts).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.lower > 1.0 + 1e-8);
    }

    #[test]
    fn chsh_correlation_has_norm_sqrt2() {
        let gamma = chsh_gamma();
        let r = pi_norm_exact(&gamma, 1e-10).unwrap();
        assert!(r.converged);
        assert!((r.value - SQRT_2).abs() < 1e-9, "value {}", r.value);
        assert!((r.value - dual_oracle_2x2(&gamma)).abs() < 1e-9);
        let cert = r.nonlocal_certificate(1e-8).unwrap();
        let g = CorrelationMatrix::new(gamma).unwrap();
        assert!(verify_certificate(&g, &cert).unwrap().valid);
    }

    #[test]
    fn decomposition_reconstructs() {
        let gamma = Matrix::from_row_slice(3, 3, &[0.3, -0.2, 0.1, 0.0, 0.5, -0.4, 0.2, 0.2, 0.2]);
        let r = pi_norm_exact(&gamma, 1e-10).unwrap();
        let Certificate::LocalDecomposition { terms, total } = &r.decomposition else {
            panic!("wrong certificate kind");
        };
        let mut recon = Matrix::zeros(3, 3);
        for (w, p) in terms {
            recon += p.outer() * *w;
        }
        assert!((recon - &gamma).amax() < 1e-10);
        assert!((total - r.value).abs() < 1e-12);
        assert!(r.value <= 1.0);
        let g = CorrelationMatrix::new(gamma).unwrap();
        assert!(verify_certificate(&g, r.local_certificate().unwrap()).unwrap().valid);
    }

    #[test]
    fn random_two_by_two_matches_oracle() {
        let cases = [
            [0.9, -0.3, 0.7, 0.8],
            [0.5, 0.5, 0.5, -0.5],
            [-1.0, 0.2, 0.3, 0.99],
            [0.0, 0.0, 0.0, 0.0],
        ];
        for c in cases {
            let g = Matrix::from_row_slice(2, 2, &c);
            let r = pi_norm_exact(&g, 1e-12).unwrap();
            let oracle = dual_oracle_2x2(&g);
            assert!((r.value - oracle).abs() < 1e-9, "{c:?}: {} vs {oracle}", r.value);
        }
    }

    #[test]
    fn early_decision() {
        let opts = PiNormOptions {
            decide_at: Some(1.0),
            ..PiNormOptions::default()
        };
        let r = pi_norm_with(&chsh_gamma(), &opts).unwrap();
        assert!(r.lower > 1.0 + 1e-8);
    }

    #[test]
    fn size_guard() {
        assert!(matches!(
            pi_norm_exact(&Matrix::zeros(21, 21), 1e-9),
            Err(Error::SizeGuard { .. })
        ));
    }
}
