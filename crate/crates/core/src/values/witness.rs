use crate::correlations::{gram, BellWitness, ClassicalBound, CorrelationMatrix, VectorEnsemble};
use crate::error::{invalid, Result};
use crate::sampling::{truncate_and_normalize_rows, CoupledSvdSample};
use crate::tolerance::CLASSICAL_GAUSSIAN_CONSTANT;

/// Which high-probability bound on `omega(A)` for gaussian `A` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ThresholdMode {
    /// `1.6651 n^{3/2}`.
    #[default]
    Asymptotic,
    /// `(2 sqrt(ln 2) + 2 sqrt(ln n) / sqrt(n)) n^{3/2}`, the Chernoff level
    /// before the `n -> infinity` limit.
    FiniteN,
}

impl ThresholdMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "asymptotic" => Some(Self::Asymptotic),
            "finite_n" => Some(Self::FiniteN),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Asymptotic => "asymptotic",
            Self::FiniteN => "finite_n",
        }
    }
}

pub fn statistical_threshold(n: usize, mode: ThresholdMode) -> f64 {
    let nf = n as f64;
    let scale = nf.powf(1.5);
    match mode {
        ThresholdMode::Asymptotic => CLASSICAL_GAUSSIAN_CONSTANT * scale,
        ThresholdMode::FiniteN => {
            (2.0 * std::f64::consts::LN_2.sqrt() + 2.0 * nf.ln().sqrt() / nf.sqrt()) * scale
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvdWitness {
    /// The gaussian matrix `A`, tagged with the statistical bound.
    pub witness: BellWitness,
    /// Correlation of the truncated, normalized rows of `U` and `V`.
    pub gamma: CorrelationMatrix,
    pub inner_product: f64,
    pub threshold: f64,
}

impl SvdWitness {
    /// `inner_product > threshold (1 + margin)`.
    pub fn exceeds(&self, margin: f64) -> bool {
        self.inner_product > self.threshold * (1.0 + margin)
    }
}

/// Uses the sample's gaussian `A` as a Bell functional against the
/// correlation of the first `m` coordinates of the rows of `U` and `V`
/// (normalized). Large `<A, gamma>` compared with the typical `omega(A)` is
/// statistical evidence of nonlocality, not a proof.
pub fn coupled_svd_witness(
    sample: &CoupledSvdSample,
    m: usize,
    mode: ThresholdMode,
) -> Result<SvdWitness> {
    let n = sample.n();
    if m == 0 || m > n {
        return Err(invalid(format!("need 1 <= m <= n, got m = {m}, n = {n}")));
    }
    let u = truncate_and_normalize_rows(&sample.u, m)?;
    let v = truncate_and_normalize_rows(&sample.v, m)?;
    let gamma = gram(&VectorEnsemble::new(u, v)?);
    let threshold = statistical_threshold(n, mode);
    let witness = BellWitness::new(
        sample.a.clone(),
        ClassicalBound::Statistical {
            threshold,
            note: format!(
                "omega(A) <= {} w.h.p. for gaussian A ({} bound)",
                threshold,
                mode.as_str()
            ),
        },
    )?;
    let inner_product = witness.evaluate(gamma.entries());
    Ok(SvdWitness {
        witness,
        gamma,
        inner_product,
        threshold,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{sample_coupled_svd, Seed};

    #[test]
    fn threshold_at_hundred() {
        let t = statistical_threshold(100, ThresholdMode::Asymptotic);
        assert!((t - 1665.1).abs() < 1e-9);
        let f = statistical_threshold(100, ThresholdMode::FiniteN);
        // 2 sqrt(ln 2) = 1.66511, plus 2 sqrt(ln 100)/10 = 0.42919.
        assert!((f / 1000.0 - (1.665109222 + 0.429193)).abs() < 1e-5);
    }

    #[test]
    fn full_dimension_witness_is_positive() {
        let s = sample_coupled_svd(40, &Seed::new(1)).unwrap();
        let w = coupled_svd_witness(&s, 40, ThresholdMode::Asymptotic).unwrap();
        // m = n: rows of U are unit, so gamma = U V^T and <A, gamma> = sum sigma.
        let sum: f64 = s.sigma.iter().sum();
        assert!((w.inner_product - sum).abs() < 1e-9 * sum);
        assert!(w.inner_product > 0.0);
    }

    #[test]
    fn rejects_bad_m() {
        let s = sample_coupled_svd(5, &Seed::new(2)).unwrap();
        assert!(coupled_svd_witness(&s, 0, ThresholdMode::Asymptotic).is_err());
        assert!(coupled_svd_witness(&s, 6, ThresholdMode::Asymptotic).is_err());
    }
}
