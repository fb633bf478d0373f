//! Correlation matrices, the vector ensembles that generate them, Bell
//! witnesses and certificates.
//!
//! Every certificate carries enough data to be re-checked by
//! [`verify_certificate`] without re-running the algorithm that produced it.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{invalid, Error, Result};
use crate::tolerance;
use crate::values::{chsh_value_at, classical_value_exact, linf_l2_norm};

pub type Matrix = DMatrix<f64>;

/// `n` unit vectors `u_i` and `n` unit vectors `v_j` in `R^m`, stored as the
/// rows of two `n x m` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorEnsemble {
    u: Matrix,
    v: Matrix,
}

impl VectorEnsemble {
    pub fn new(u: Matrix, v: Matrix) -> Result<Self> {
        if u.shape() != v.shape() {
            return Err(invalid(format!(
                "u is {:?} but v is {:?}",
                u.shape(),
                v.shape()
            )));
        }
        let (n, m) = u.shape();
        if n == 0 || m == 0 {
            return Err(invalid("ensemble needs n >= 1 and m >= 1"));
        }
        for (name, mat) in [("u", &u), ("v", &v)] {
            for (i, row) in mat.row_iter().enumerate() {
                let norm = row.norm();
                if (norm - 1.0).abs() > tolerance::UNIT_NORM || !norm.is_finite() {
                    return Err(invalid(format!("{name}_{i} has norm {norm}, expected 1")));
                }
            }
        }
        Ok(Self { u, v })
    }

    pub fn n(&self) -> usize {
        self.u.nrows()
    }

    pub fn m(&self) -> usize {
        self.u.ncols()
    }

    /// Alice's vectors, one per row.
    pub fn u(&self) -> &Matrix {
        &self.u
    }

    /// Bob's vectors, one per row.
    pub fn v(&self) -> &Matrix {
        &self.v
    }
}

/// `gamma_ij` for i, j < n, optionally tied to the ensemble that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    entries: Matrix,
    provenance: Option<Arc<VectorEnsemble>>,
}

impl CorrelationMatrix {
    /// Validates squareness and `|gamma_ij| <= 1`.
    pub fn new(entries: Matrix) -> Result<Self> {
        let (r, c) = entries.shape();
        if r != c {
            return Err(Error::Dimension { expected: r, got: c });
        }
        if r == 0 {
            return Err(invalid("correlation matrix must be at least 1x1"));
        }
        if let Some(bad) = entries
            .iter()
            .find(|x| !(x.abs() <= 1.0 + tolerance::ENTRY_BOUND))
        {
            return Err(invalid(format!("entry {bad} outside [-1, 1]")));
        }
        Ok(Self {
            entries,
            provenance: None,
        })
    }

    pub fn from_row_slice(n: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                got: data.len(),
            });
        }
        Self::new(Matrix::from_row_slice(n, n, data))
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn provenance(&self) -> Option<&VectorEnsemble> {
        self.provenance.as_deref()
    }
}

/// `gamma_ij = <u_i, v_j>`.
pub fn gram(ensemble: &VectorEnsemble) -> CorrelationMatrix {
    let entries = ensemble.u() * ensemble.v().transpose();
    CorrelationMatrix {
        entries,
        provenance: Some(Arc::new(ensemble.clone())),
    }
}

/// What is known about the classical value `omega(A)` of a witness.
#[derive(Debug, Clone, PartialEq)]
pub enum ClassicalBound {
    /// `omega(A)` itself, from exhaustive enumeration.
    Exact(f64),
    /// A proven upper bound on `omega(A)`.
    Upper(f64),
    /// A high-probability bound with no per-instance proof.
    Statistical { threshold: f64, note: String },
}

/// Bell functional `A`: the game value is `sum_ij a_ij gamma_ij`.
#[derive(Debug, Clone, PartialEq)]
pub struct BellWitness {
    entries: Matrix,
    bound: ClassicalBound,
}

impl BellWitness {
    pub fn new(entries: Matrix, bound: ClassicalBound) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::Dimension {
                expected: entries.nrows(),
                got: entries.ncols(),
            });
        }
        Ok(Self { entries, bound })
    }

    /// Computes `omega(A)` exhaustively (n <= 20) and attaches it.
    pub fn with_exact_bound(entries: Matrix) -> Result<Self> {
        let (omega, _) = classical_value_exact(&entries)?;
        Self::new(entries, ClassicalBound::Exact(omega))
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &Matrix {
        &self.entries
    }

    pub fn bound(&self) -> &ClassicalBound {
        &self.bound
    }

    /// `sum_ij a_ij gamma_ij`.
    pub fn evaluate(&self, gamma: &Matrix) -> f64 {
        self.entries.dot(gamma)
    }
}

/// Deterministic strategy: Alice answers `s_i`, Bob answers `t_j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SignPair {
    s: Vec<i8>,
    t: Vec<i8>,
}

impl SignPair {
    pub fn new(s: Vec<i8>, t: Vec<i8>) -> Result<Self> {
        if s.len() != t.len() {
            return Err(Error::Dimension {
                expected: s.len(),
                got: t.len(),
            });
        }
        if s.iter().chain(&t).any(|&x| x != 1 && x != -1) {
            return Err(invalid("sign vectors must have entries exactly +1 or -1"));
        }
        Ok(Self { s, t })
    }

    pub fn n(&self) -> usize {
        self.s.len()
    }

    pub fn s(&self) -> &[i8] {
        &self.s
    }

    pub fn t(&self) -> &[i8] {
        &self.t
    }

    /// The deterministic correlation `s t^T`.
    pub fn outer(&self) -> Matrix {
        let n = self.n();
        Matrix::from_fn(n, n, |i, j| f64::from(self.s[i] * self.t[j]))
    }

    /// `s^T A t`.
    pub fn evaluate(&self, a: &Matrix) -> f64 {
        let mut total = 0.0;
        for (j, &tj) in self.t.iter().enumerate() {
            let col: f64 = self
                .s
                .iter()
                .enumerate()
                .map(|(i, &si)| f64::from(si) * a[(i, j)])
                .sum();
            total += f64::from(tj) * col;
        }
        total
    }

    /// Representative of `{(s, t), (-s, -t)}` with `s_0 = +1`; both give the
    /// same `s t^T`.
    pub fn canonical(mut self) -> Self {
        if self.s.first() == Some(&-1) {
            self.s.iter_mut().for_each(|x| *x = -*x);
            self.t.iter_mut().for_each(|x| *x = -*x);
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Certificate {
    /// `gamma = sum_k weight_k s_k t_k^T` with `total = sum_k weight_k`.
    LocalDecomposition {
        terms: Vec<(f64, SignPair)>,
        total: f64,
    },
    /// `sqrt(2) * ||gamma||_{l_inf(l_2)} <= 1`, which bounds the projective norm by 1.
    LocalNormBound { linf_l2: f64 },
    /// `<A, gamma> > omega(A)` with `omega(A)` known exactly.
    NonlocalExact {
        witness: BellWitness,
        inner_product: f64,
    },
    /// A CHSH sub-block on rows `(i, i')` and columns `(j, j')` exceeding 2.
    NonlocalChsh {
        rows: (usize, usize),
        cols: (usize, usize),
        value: f64,
    },
    /// `<A, gamma>` above a high-probability bound on `omega(A)`; not a proof.
    NonlocalStatistical {
        witness: BellWitness,
        inner_product: f64,
        threshold: f64,
    },
}

impl Certificate {
    pub fn kind(&self) -> &'static str {
        match self {
            Certificate::LocalDecomposition { .. } => "local_decomposition",
            Certificate::LocalNormBound { .. } => "local_norm_bound",
            Certificate::NonlocalExact { .. } => "nonlocal_exact",
            Certificate::NonlocalChsh { .. } => "nonlocal_chsh",
            Certificate::NonlocalStatistical { .. } => "nonlocal_statistical",
        }
    }

    pub fn is_local(&self) -> bool {
        matches!(
            self,
            Certificate::LocalDecomposition { .. } | Certificate::LocalNormBound { .. }
        )
    }

    /// Compact JSON description, without the full witness matrices.
    pub fn summary(&self) -> serde_json::Value {
        use serde_json::json;
        match self {
            Certificate::LocalDecomposition { terms, total } => json!({
                "kind": self.kind(),
                "terms": terms.len(),
                "total": total,
            }),
            Certificate::LocalNormBound { linf_l2 } => json!({
                "kind": self.kind(),
                "linf_l2": linf_l2,
                "bound": std::f64::consts::SQRT_2 * linf_l2,
            }),
            Certificate::NonlocalExact {
                witness,
                inner_product,
            } => json!({
                "kind": self.kind(),
                "inner_product": inner_product,
                "classical_value": match witness.bound() {
                    ClassicalBound::Exact(w) | ClassicalBound::Upper(w) => Some(*w),
                    ClassicalBound::Statistical { .. } => None,
                },
            }),
            Certificate::NonlocalChsh { rows, cols, value } => json!({
                "kind": self.kind(),
                "rows": [rows.0, rows.1],
                "cols": [cols.0, cols.1],
                "value": value,
            }),
            Certificate::NonlocalStatistical {
                inner_product,
                threshold,
                ..
            } => json!({
                "kind": self.kind(),
                "inner_product": inner_product,
                "threshold": threshold,
                "rigorous": false,
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    LocalCertified,
    NonlocalCertified,
    StatisticallyNonlocal,
    Undecided,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::LocalCertified => "local",
            Verdict::NonlocalCertified => "nonlocal",
            Verdict::StatisticallyNonlocal => "statistical",
            Verdict::Undecided => "undecided",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "local" => Some(Verdict::LocalCertified),
            "nonlocal" => Some(Verdict::NonlocalCertified),
            "statistical" => Some(Verdict::StatisticallyNonlocal),
            "undecided" => Some(Verdict::Undecided),
            _ => None,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub verdict: Verdict,
    pub certificate: Option<Certificate>,
    pub diagnostics: BTreeMap<String, f64>,
}

/// Outcome of re-checking a certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub valid: bool,
    /// False for statistical certificates, which are never proofs.
    pub rigorous: bool,
    pub reason: Option<String>,
}

impl Verification {
    fn pass(rigorous: bool) -> Self {
        Self {
            valid: true,
            rigorous,
            reason: None,
        }
    }

    fn fail(reason: impl Into<String>) -> Self {
        Self {
            valid: false,
            rigorous: true,
            reason: Some(reason.into()),
        }
    }
}

/// Re-checks a certificate against `gamma` from its stored data alone.
///
/// Statistical certificates only have their arithmetic checked and come back
/// with `rigorous = false`.
pub fn verify_certificate(gamma: &CorrelationMatrix, cert: &Certificate) -> Result<Verification> {
    let n = gamma.n();
    let g = gamma.entries();
    match cert {
        Certificate::LocalDecomposition { terms, total } => {
            let mut recon = Matrix::zeros(n, n);
            let mut sum = 0.0;
            for (w, pair) in terms {
                if pair.n() != n {
                    return Err(Error::Dimension {
                        expected: n,
                        got: pair.n(),
                    });
                }
                if !(*w > 0.0) {
                    return Ok(Verification::fail(format!("non-positive weight {w}")));
                }
                sum += w;
                for i in 0..n {
                    let si = f64::from(pair.s()[i]) * w;
                    for j in 0..n {
                        recon[(i, j)] += si * f64::from(pair.t()[j]);
                    }
                }
            }
            let err = (&recon - g).amax();
            if err > tolerance::RECONSTRUCTION {
                return Ok(Verification::fail(format!(
                    "reconstruction error {err:e} exceeds {:e}",
                    tolerance::RECONSTRUCTION
                )));
            }
            if (sum - total).abs() > tolerance::RECONSTRUCTION {
                return Ok(Verification::fail(format!(
                    "stated total {total} but weights sum to {sum}"
                )));
            }
            if sum > 1.0 + tolerance::RECONSTRUCTION {
                return Ok(Verification::fail(format!("weights sum to {sum} > 1")));
            }
            Ok(Verification::pass(true))
        }
        Certificate::LocalNormBound { linf_l2 } => {
            let actual = linf_l2_norm(g);
            if (actual - linf_l2).abs() > 1e-12 * actual.max(1.0) {
                return Ok(Verification::fail(format!(
                    "stated l_inf(l_2) norm {linf_l2} but recomputed {actual}"
                )));
            }
            if !crate::values::norms::within_fast_bound(g) {
                return Ok(Verification::fail(format!(
                    "sqrt(2) * {actual} exceeds 1"
                )));
            }
            Ok(Verification::pass(true))
        }
        Certificate::NonlocalExact {
            witness,
            inner_product,
        } => {
            check_witness_size(witness, n)?;
            let actual = witness.evaluate(g);
            if let Some(v) = inner_product_mismatch(actual, *inner_product) {
                return Ok(v);
            }
            let omega = match witness.bound() {
                ClassicalBound::Exact(w) => *w,
                other => {
                    return Ok(Verification::fail(format!(
                        "exact certificate carries a non-exact bound {other:?}"
                    )))
                }
            };
            if n > tolerance::EXACT_LIMIT {
                return Ok(Verification::fail(format!(
                    "cannot re-check omega(A) exhaustively at n = {n}"
                )));
            }
            let (recomputed, _) = classical_value_exact(witness.entries())?;
            if (recomputed - omega).abs() > 1e-9 * recomputed.abs().max(1.0) {
                return Ok(Verification::fail(format!(
                    "stated omega(A) = {omega} but enumeration gives {recomputed}"
                )));
            }
            if actual > recomputed + tolerance::STRICT_MARGIN {
                Ok(Verification::pass(true))
            } else {
                Ok(Verification::fail(format!(
                    "<A, gamma> = {actual} does not exceed omega(A) = {recomputed}"
                )))
            }
        }
        Certificate::NonlocalChsh { rows, cols, value } => {
            let (i, i2) = *rows;
            let (j, j2) = *cols;
            if i.max(i2).max(j).max(j2) >= n || i == i2 || j == j2 {
                return Ok(Verification::fail(format!(
                    "invalid CHSH indices rows {rows:?} cols {cols:?}"
                )));
            }
            let actual = chsh_value_at(g, *rows, *cols);
            if (actual - value).abs() > tolerance::STRICT_MARGIN {
                return Ok(Verification::fail(format!(
                    "stated CHSH value {value} but recomputed {actual}"
                )));
            }
            if actual > 2.0 + tolerance::STRICT_MARGIN {
                Ok(Verification::pass(true))
            } else {
                Ok(Verification::fail(format!("CHSH value {actual} does not exceed 2")))
            }
        }
        Certificate::NonlocalStatistical {
            witness,
            inner_product,
            threshold,
        } => {
            check_witness_size(witness, n)?;
            let actual = witness.evaluate(g);
            if let Some(v) = inner_product_mismatch(actual, *inner_product) {
                return Ok(v);
            }
            if actual > *threshold {
                Ok(Verification::pass(false))
            } else {
                Ok(Verification::fail(format!(
                    "<A, gamma> = {actual} does not exceed threshold {threshold}"
                )))
            }
        }
    }
}

fn check_witness_size(witness: &BellWitness, n: usize) -> Result<()> {
    if witness.n() != n {
        return Err(Error::Dimension {
            expected: n,
            got: witness.n(),
        });
    }
    Ok(())
}

fn inner_product_mismatch(actual: f64, stated: f64) -> Option<Verification> {
    if (actual - stated).abs() > 1e-10 * actual.abs().max(1.0) {
        Some(Verification::fail(format!(
            "stated <A, gamma> = {stated} but recomputed {actual}"
        )))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn chsh_gamma() -> CorrelationMatrix {
        let u = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        let v = Matrix::from_row_slice(
            2,
            2,
            &[FRAC_1_SQRT_2, FRAC_1_SQRT_2, FRAC_1_SQRT_2, -FRAC_1_SQRT_2],
        );
        gram(&VectorEnsemble::new(u, v).unwrap())
    }

    #[test]
    fn gram_of_standard_basis_is_identity() {
        let e = Matrix::identity(4, 4);
        let gamma = gram(&VectorEnsemble::new(e.clone(), e).unwrap());
        assert_eq!(gamma.entries(), &Matrix::identity(4, 4));
        assert!(gamma.provenance().is_some());
    }

    #[test]
    fn gram_reproduces_chsh_correlation() {
        let gamma = chsh_gamma();
        let expected = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]) * FRAC_1_SQRT_2;
        assert!((gamma.entries() - expected).amax() < 1e-15);
    }

    #[test]
    fn shared_first_vector_gives_unit_correlation() {
        let u = Matrix::from_row_slice(2, 3, &[0.6, 0.8, 0.0, 0.0, 0.0, 1.0]);
        let v = Matrix::from_row_slice(2, 3, &[0.6, 0.8, 0.0, 1.0, 0.0, 0.0]);
        let gamma = gram(&VectorEnsemble::new(u, v).unwrap());
        assert!((gamma.get(0, 0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ensemble_rejects_non_unit_vectors() {
        let u = Matrix::from_row_slice(1, 2, &[1.0, 1.0]);
        assert!(VectorEnsemble::new(u.clone(), u).is_err());
        assert!(VectorEnsemble::new(Matrix::zeros(0, 2), Matrix::zeros(0, 2)).is_err());
    }

    #[test]
    fn correlation_rejects_large_entries() {
        assert!(CorrelationMatrix::from_row_slice(1, &[1.5]).is_err());
        assert!(CorrelationMatrix::new(Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn sign_pair_rejects_zero() {
        assert!(SignPair::new(vec![1, 0], vec![1, 1]).is_err());
        assert!(SignPair::new(vec![1], vec![1, 1]).is_err());
    }

    #[test]
    fn deterministic_correlation_verifies() {
        let pair = SignPair::new(vec![1, -1, 1], vec![-1, -1, 1]).unwrap();
        let gamma = CorrelationMatrix::new(pair.outer()).unwrap();
        let cert = Certificate::LocalDecomposition {
            terms: vec![(1.0, pair)],
            total: 1.0,
        };
        assert!(verify_certificate(&gamma, &cert).unwrap().valid);
    }

    #[test]
    fn decomposition_with_too_much_weight_fails() {
        let pair = SignPair::new(vec![1, 1], vec![1, 1]).unwrap();
        let gamma = CorrelationMatrix::new(pair.outer() * 0.5).unwrap();
        let bad = Certificate::LocalDecomposition {
            terms: vec![(0.5, pair.clone()), (0.25, pair.clone()), (0.25, pair)],
            total: 1.0,
        };
        assert!(!verify_certificate(&gamma, &bad).unwrap().valid);
    }

    #[test]
    fn chsh_certificate_verifies_on_chsh_correlation() {
        let cert = Certificate::NonlocalChsh {
            rows: (0, 1),
            cols: (0, 1),
            value: 2.0 * std::f64::consts::SQRT_2,
        };
        assert!(verify_certificate(&chsh_gamma(), &cert).unwrap().valid);
    }

    #[test]
    fn chsh_certificate_rejected_on_identity() {
        // The 8 odd-parity placements on the 2x2 identity all evaluate to +-2.
        let gamma = CorrelationMatrix::new(Matrix::identity(2, 2)).unwrap();
        let cert = Certificate::NonlocalChsh {
            rows: (0, 1),
            cols: (0, 1),
            value: 2.0 * std::f64::consts::SQRT_2,
        };
        let v = verify_certificate(&gamma, &cert).unwrap();
        assert!(!v.valid);
        assert!(v.reason.unwrap().contains("recomputed 2"));
    }

    #[test]
    fn exact_witness_on_chsh() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]);
        let witness = BellWitness::with_exact_bound(a).unwrap();
        assert_eq!(witness.bound(), &ClassicalBound::Exact(2.0));
        let gamma = chsh_gamma();
        let ip = witness.evaluate(gamma.entries());
        let cert = Certificate::NonlocalExact {
            witness: witness.clone(),
            inner_product: ip,
        };
        assert!(verify_certificate(&gamma, &cert).unwrap().valid);

        let lying = Certificate::NonlocalExact {
            witness: BellWitness::new(witness.entries().clone(), ClassicalBound::Exact(1.0))
                .unwrap(),
            inner_product: ip,
        };
        assert!(!verify_certificate(&gamma, &lying).unwrap().valid);
    }

    #[test]
    fn statistical_certificate_is_not_rigorous() {
        let gamma = chsh_gamma();
        let witness = BellWitness::new(
            Matrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, -1.0]),
            ClassicalBound::Statistical {
                threshold: 2.5,
                note: "test".into(),
            },
        )
        .unwrap();
        let ip = witness.evaluate(gamma.entries());
        let cert = Certificate::NonlocalStatistical {
            witness,
            inner_product: ip,
            threshold: 2.5,
        };
        let v = verify_certificate(&gamma, &cert).unwrap();
        assert!(v.valid);
        assert!(!v.rigorous);
    }

    #[test]
    fn size_mismatch_is_an_error() {
        let gamma = CorrelationMatrix::new(Matrix::identity(3, 3)).unwrap();
        let pair = SignPair::new(vec![1, 1], vec![1, 1]).unwrap();
        let cert = Certificate::LocalDecomposition {
            terms: vec![(1.0, pair)],
            total: 1.0,
        };
        assert!(matches!(
            verify_certificate(&gamma, &cert),
            Err(Error::Dimension { .. })
        ));
    }
}
