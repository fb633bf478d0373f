use crate::correlations::{Certificate, CorrelationMatrix, Matrix};
use crate::error::{invalid, Result};
use crate::sampling::Seed;
use crate::tolerance::STRICT_MARGIN;
use rand::Rng;

/// How many row pairs the CHSH scan visits.
#[derive(Debug, Clone, PartialEq)]
pub enum ChshMode {
    /// Every row pair; O(n^3).
    Full,
    /// `row_pairs` uniformly random row pairs drawn from `seed`; O(n k).
    Sampled { row_pairs: usize, seed: Seed },
    /// `Full` up to [`ChshMode::AUTO_FULL_LIMIT`], otherwise 200 000 sampled row pairs.
    Auto { seed: Seed },
}

impl ChshMode {
    pub const AUTO_FULL_LIMIT: usize = 1024;
    pub const AUTO_ROW_PAIRS: usize = 200_000;

    fn resolve(&self, n: usize) -> ChshMode {
        match self {
            ChshMode::Auto { seed } if n > Self::AUTO_FULL_LIMIT => ChshMode::Sampled {
                row_pairs: Self::AUTO_ROW_PAIRS,
                seed: seed.clone(),
            },
            ChshMode::Auto { .. } => ChshMode::Full,
            other => other.clone(),
        }
    }
}

/// Largest CHSH value found and where.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshScan {
    pub value: f64,
    pub rows: (usize, usize),
    pub cols: (usize, usize),
}

/// Maximum over the 8 odd-parity sign placements of
/// `|+-g(i,j) +- g(i,j') +- g(i',j) +- g(i',j')|`.
pub fn chsh_value_at(g: &Matrix, rows: (usize, usize), cols: (usize, usize)) -> f64 {
    let (i, i2) = rows;
    let (j, j2) = cols;
    let e = [g[(i, j)], g[(i, j2)], g[(i2, j)], g[(i2, j2)]];
    let total: f64 = e.iter().sum();
    // Flipping one entry gives the four single-minus placements; the
    // three-minus ones are their negatives, covered by the absolute value.
    e.iter()
        .map(|x| (total - 2.0 * x).abs())
        .fold(0.0, f64::max)
}

/// Best CHSH block for a fixed row pair, in O(n).
///
/// With `x_j = |g_ij + g_i'j|` and `y_j = |g_ij - g_i'j|`, the best value over
/// column pairs is `max_{j != j'} x_j + y_j'` (for `j = j'` the sum is at most 2).
fn best_for_rows(g: &Matrix, i: usize, i2: usize) -> Option<(f64, usize, usize)> {
    let n = g.ncols();
    if n < 2 {
        return None;
    }
    let mut top_x = [(f64::NEG_INFINITY, usize::MAX); 2];
    let mut top_y = [(f64::NEG_INFINITY, usize::MAX); 2];
    for j in 0..n {
        let a = g[(i, j)];
        let b = g[(i2, j)];
        push_top(&mut top_x, (a + b).abs(), j);
        push_top(&mut top_y, (a - b).abs(), j);
    }
    let candidates = [
        (top_x[0], top_y[0]),
        (top_x[0], top_y[1]),
        (top_x[1], top_y[0]),
    ];
    candidates
        .iter()
        .filter(|((_, jx), (_, jy))| jx != jy)
        .map(|((x, jx), (y, jy))| (x + y, *jx, *jy))
        .fold(None, |best: Option<(f64, usize, usize)>, c| match best {
            Some(b) if b.0 >= c.0 => Some(b),
            _ => Some(c),
        })
}

fn push_top(top: &mut [(f64, usize); 2], v: f64, j: usize) {
    if v > top[0].0 {
        top[1] = top[0];
        top[0] = (v, j);
    } else if v > top[1].0 {
        top[1] = (v, j);
    }
}

/// Scans row pairs for the largest CHSH value. Ties keep the first pair in
/// visiting order (lexicographic for `Full`). `None` when n < 2.
pub fn chsh_scan(gamma: &Matrix, mode: &ChshMode) -> Option<ChshScan> {
    let n = gamma.nrows();
    if n < 2 {
        return None;
    }
    let mut best: Option<ChshScan> = None;
    let mut consider = |i: usize, i2: usize| {
        if let Some((v, j, j2)) = best_for_rows(gamma, i, i2) {
            if best.is_none_or(|b| v > b.value) {
                best = Some(ChshScan {
                    value: v,
                    rows: (i, i2),
                    cols: (j, j2),
                });
            }
        }
    };
    match mode.resolve(n) {
        ChshMode::Full | ChshMode::Auto { .. } => {
            for i in 0..n {
                for i2 in (i + 1)..n {
                    consider(i, i2);
                }
            }
        }
        ChshMode::Sampled { row_pairs, seed } => {
            let mut rng = seed.rng();
            for _ in 0..row_pairs {
                let i = rng.random_range(0..n);
                let mut i2 = rng.random_range(0..n - 1);
                if i2 >= i {
                    i2 += 1;
                }
                consider(i.min(i2), i.max(i2));
            }
        }
    }
    // Report the value of the chosen block as the verifier computes it.
    best.map(|b| ChshScan {
        value: chsh_value_at(gamma, b.rows, b.cols),
        ..b
    })
}

/// CHSH certificate when some block exceeds `2 + margin`.
pub fn certify_nonlocal_chsh(
    gamma: &CorrelationMatrix,
    margin: f64,
    mode: &ChshMode,
) -> Result<(ChshScan, Option<Certificate>)> {
    let scan = chsh_scan(gamma.entries(), mode)
        .ok_or_else(|| invalid("CHSH scan needs n >= 2"))?;
    let cert = (scan.value > 2.0 + margin.max(STRICT_MARGIN)).then_some(
        Certificate::NonlocalChsh {
            rows: scan.rows,
            cols: scan.cols,
            value: scan.value,
        },
    );
    Ok((scan, cert))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlations::{verify_certificate, SignPair};
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

    /// All quadruples, all 8 placements, written out independently.
    fn brute_force(g: &Matrix) -> f64 {
        let n = g.nrows();
        let mut best: f64 = 0.0;
        for i in 0..n {
            for i2 in 0..n {
                for j in 0..n {
                    for j2 in 0..n {
                        if i == i2 || j == j2 {
                            continue;
                        }
                        let e = [g[(i, j)], g[(i, j2)], g[(i2, j)], g[(i2, j2)]];
                        for minus in [0b0001u8, 0b0010, 0b0100, 0b1000, 0b1110, 0b1101, 0b1011, 0b0111] {
                            let v: f64 = (0..4)
                                .map(|k| if minus & (1 << k) != 0 { -e[k] } else { e[k] })
                                .sum();
                            best = best.max(v.abs());
                        }
                    }
                }
            }
        }
        best
    }

    #[test]
    fn chsh_correlation_hits_tsirelson() {
        let h = FRAC_1_SQRT_2;
        let gamma = CorrelationMatrix::new(Matrix::from_row_slice(2, 2, &[h, h, h, -h])).unwrap();
        let (scan, cert) = certify_nonlocal_chsh(&gamma, 1e-8, &ChshMode::Full).unwrap();
        assert!((scan.value - 2.0 * SQRT_2).abs() < 1e-12);
        let cert = cert.unwrap();
        assert!(verify_certificate(&gamma, &cert).unwrap().valid);
    }

    #[test]
    fn identity_reaches_two_only() {
        let gamma = CorrelationMatrix::new(Matrix::identity(2, 2)).unwrap();
        let (scan, cert) = certify_nonlocal_chsh(&gamma, 1e-8, &ChshMode::Full).unwrap();
        assert!((scan.value - 2.0).abs() < 1e-15);
        assert!(cert.is_none());
    }

    #[test]
    fn needs_two_rows() {
        let gamma = CorrelationMatrix::new(Matrix::identity(1, 1)).unwrap();
        assert!(certify_nonlocal_chsh(&gamma, 1e-8, &ChshMode::Full).is_err());
    }

    #[test]
    fn sampled_mode_is_seed_deterministic() {
        let g = Matrix::from_fn(30, 30, |i, j| ((i * 7 + j * 13) % 11) as f64 / 11.0 - 0.5);
        let mode = ChshMode::Sampled { row_pairs: 50, seed: Seed::new(3) };
        assert_eq!(chsh_scan(&g, &mode), chsh_scan(&g, &mode));
        let full = chsh_scan(&g, &ChshMode::Full).unwrap();
        assert!(chsh_scan(&g, &mode).unwrap().value <= full.value + 1e-15);
    }

    proptest! {
        #[test]
        fn full_scan_matches_brute_force(n in 2usize..6, data in prop::collection::vec(-1.0f64..1.0, 25)) {
            let g = Matrix::from_fn(n, n, |i, j| data[i * 5 + j]);
            let scan = chsh_scan(&g, &ChshMode::Full).unwrap();
            prop_assert!((scan.value - brute_force(&g)).abs() < 1e-12);
        }

        #[test]
        fn deterministic_correlations_never_fire(s in prop::collection::vec(prop::bool::ANY, 6), t in prop::collection::vec(prop::bool::ANY, 6)) {
            let sign = |b: &bool| if *b { 1 } else { -1 };
            let pair = SignPair::new(s.iter().map(sign).collect(), t.iter().map(sign).collect()).unwrap();
            let gamma = CorrelationMatrix::new(pair.outer()).unwrap();
            let (scan, cert) = certify_nonlocal_chsh(&gamma, 1e-8, &ChshMode::Full).unwrap();
            prop_assert!(scan.value <= 2.0 + 1e-12);
            prop_assert!(cert.is_none());
        }
    }
}
