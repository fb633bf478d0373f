use crate::correlations::{Matrix, SignPair};
use crate::error::{invalid, Error, Result};
use crate::tolerance::EXACT_LIMIT;

/// Classical value `omega(A) = max_{s,t} s^T A t` by exhaustive enumeration.
///
/// For each `s` the best `t` is `t_j = sign(sum_i a_ij s_i)` with
/// `sign(0) = +1`, and `s` and `-s` give the same value, so only the
/// `2^(n-1)` vectors with `s_0 = +1` are visited, in Gray-code order so each
/// step updates the column sums in O(n). Among maximizers the one with the
/// smallest sign code (bit `i-1` set iff `s_i = -1`) is returned, and the
/// value is recomputed from scratch for that `s`.
pub fn classical_value_exact(a: &Matrix) -> Result<(f64, SignPair)> {
    let mut top = best_responses(a, 1)?;
    Ok(top.swap_remove(0))
}

/// The `k` best sign vectors `s` (up to global sign) with their best
/// responses, by decreasing value and then increasing sign code. The first
/// entry is the pair returned by [`classical_value_exact`].
pub(crate) fn best_responses(a: &Matrix, k: usize) -> Result<Vec<(f64, SignPair)>> {
    let (n, cols) = a.shape();
    if n != cols {
        return Err(Error::Dimension {
            expected: n,
            got: cols,
        });
    }
    if n == 0 {
        return Err(invalid("classical value of an empty matrix"));
    }
    if n > EXACT_LIMIT {
        return Err(Error::SizeGuard {
            n,
            limit: EXACT_LIMIT,
        });
    }
    if k == 0 {
        return Err(invalid("k must be >= 1"));
    }

    // Row-major copy so flipping s_i touches contiguous memory.
    let rows: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).iter().copied().collect()).collect();
    let mut colsum: Vec<f64> = (0..n).map(|j| a.column(j).sum()).collect();
    let mut signs = vec![1.0f64; n];

    let value = |c: &[f64]| c.iter().map(|x| x.abs()).sum::<f64>();
    // Sorted best first; ties by smaller code.
    let mut top: Vec<(f64, u32)> = vec![(value(&colsum), 0)];
    let ranks_before = |x: (f64, u32), y: (f64, u32)| x.0 > y.0 || (x.0 == y.0 && x.1 < y.1);

    let count: u32 = 1 << (n - 1);
    for g in 1..count {
        let i = g.trailing_zeros() as usize + 1;
        signs[i] = -signs[i];
        let delta = 2.0 * signs[i];
        for (c, &aij) in colsum.iter_mut().zip(&rows[i]) {
            *c += delta * aij;
        }
        let cand = (value(&colsum), g ^ (g >> 1));
        if top.len() == k && !ranks_before(cand, top[k - 1]) {
            continue;
        }
        let pos = top.iter().position(|&x| ranks_before(cand, x)).unwrap_or(top.len());
        top.insert(pos, cand);
        top.truncate(k);
    }

    top.into_iter()
        .map(|(_, code)| {
            let s: Vec<i8> = (0..n)
                .map(|i| if i > 0 && code & (1 << (i - 1)) != 0 { -1 } else { 1 })
                .collect();
            let mut omega = 0.0;
            let mut t = Vec::with_capacity(n);
            for j in 0..n {
                let c: f64 = (0..n).map(|i| f64::from(s[i]) * a[(i, j)]).sum();
                t.push(if c >= 0.0 { 1 } else { -1 });
                omega += c.abs();
            }
            Ok((omega, SignPair::new(s, t)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent oracle: every (s, t) pair, no best-response shortcut.
    fn brute_force(a: &Matrix) -> f64 {
        let n = a.nrows();
        let mut best = f64::NEG_INFINITY;
        for sc in 0u32..(1 << n) {
            for tc in 0u32..(1 << n) {
                let mut v = 0.0;
                for i in 0..n {
                    let si = if sc & (1 << i) != 0 { -1.0 } else { 1.0 };
                    for j in 0..n {
                        let tj = if tc & (1 << j) != 0 { -1.0 } else { 1.0 };
                        v += si * tj * a[(i, j)];
                    }
                }
                best = best.max(v);
            }
        }
        best
    }

    #[test]
    fn chsh_value_is_two() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]);
        let (omega, pair) = classical_value_exact(&a).unwrap();
        assert_eq!(omega, 2.0);
        assert_eq!(pair.evaluate(&a), 2.0);
    }

    #[test]
    fn all_ones_gives_n_squared() {
        let (omega, _) = classical_value_exact(&Matrix::from_element(2, 2, 1.0)).unwrap();
        assert_eq!(omega, 4.0);
    }

    #[test]
    fn identity_three() {
        let (omega, pair) = classical_value_exact(&Matrix::identity(3, 3)).unwrap();
        assert_eq!(omega, 3.0);
        assert_eq!(omega, brute_force(&Matrix::identity(3, 3)));
        assert_eq!(pair.s(), &[1, 1, 1]);
    }

    #[test]
    fn sign_of_zero_is_plus() {
        let (omega, pair) = classical_value_exact(&Matrix::zeros(3, 3)).unwrap();
        assert_eq!(omega, 0.0);
        assert_eq!(pair.t(), &[1, 1, 1]);
    }

    #[test]
    fn size_guard() {
        assert!(matches!(
            classical_value_exact(&Matrix::zeros(21, 21)),
            Err(Error::SizeGuard { n: 21, limit: 20 })
        ));
        assert!(classical_value_exact(&Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn best_responses_are_sorted_and_distinct() {
        let a = Matrix::from_fn(5, 5, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let top = best_responses(&a, 6).unwrap();
        assert_eq!(top.len(), 6);
        assert_eq!(top[0].0, classical_value_exact(&a).unwrap().0);
        for w in top.windows(2) {
            assert!(w[0].0 >= w[1].0);
            assert_ne!(w[0].1.s(), w[1].1.s());
        }
        for (v, pair) in &top {
            assert!((pair.evaluate(&a) - v).abs() < 1e-12);
        }
        // Only 2^(n-1) = 16 classes exist.
        assert_eq!(best_responses(&a, 100).unwrap().len(), 16);
    }

    proptest! {
        #[test]
        fn matches_brute_force(n in 1usize..6, data in prop::collection::vec(-3.0f64..3.0, 36)) {
            let a = Matrix::from_fn(n, n, |i, j| data[i * 6 + j]);
            let (omega, pair) = classical_value_exact(&a).unwrap();
            let oracle = brute_force(&a);
            prop_assert!((omega - oracle).abs() < 1e-12);
            prop_assert!((pair.evaluate(&a) - omega).abs() < 1e-12);
        }

        #[test]
        fn scales_with_absolute_value(n in 1usize..7, data in prop::collection::vec(-1.0f64..1.0, 49)) {
            let a = Matrix::from_fn(n, n, |i, j| data[i * 7 + j]);
            let (omega, _) = classical_value_exact(&a).unwrap();
            for c in [-3.0, 0.0, 2.0] {
                let (scaled, _) = classical_value_exact(&(&a * c)).unwrap();
                prop_assert!((scaled - f64::abs(c) * omega).abs() < 1e-12);
            }
        }
    }
}
