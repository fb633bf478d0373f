//! Monte-Carlo tail frequencies against the analytic concentration bounds.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Result};
use crate::sampling::Seed;

#[derive(Debug, Clone, PartialEq)]
pub enum ConcentrationKind {
    /// `P(|g| >= sqrt(m) / sqrt(1 - eps)) <= exp(-eps^2 m / 4)` for
    /// `g ~ N(0, I_m)`.
    GaussianNorm { m: usize, eps: f64 },
    /// `P(|P_L u| >= sqrt(m/n) / (1 - rho)) <= exp(-rho^2 m / 4)` for `u`
    /// uniform on `S^{n-1}` and `L` a fixed `m`-dimensional subspace.
    Projection { n: usize, m: usize, rho: f64 },
    /// `P(|sum a_i X_i| >= t) <= 2 exp(-t^2 / (2 |a|^2))` for i.i.d.
    /// standard normal `X_i`.
    Chernoff { a: Vec<f64>, t: f64 },
}

impl ConcentrationKind {
    pub fn name(&self) -> &'static str {
        match self {
            Self::GaussianNorm { .. } => "gaussian_norm",
            Self::Projection { .. } => "projection",
            Self::Chernoff { .. } => "chernoff",
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Self::GaussianNorm { m, eps } => {
                if *m == 0 || !(*eps > 0.0 && *eps < 1.0) {
                    return Err(invalid(format!(
                        "gaussian_norm needs m >= 1 and 0 < eps < 1, got m = {m}, eps = {eps}"
                    )));
                }
            }
            Self::Projection { n, m, rho } => {
                if *m == 0 || m > n || !(*rho > 0.0 && *rho < 1.0) {
                    return Err(invalid(format!(
                        "projection needs 1 <= m <= n and 0 < rho < 1, got n = {n}, m = {m}, rho = {rho}"
                    )));
                }
            }
            Self::Chernoff { a, t } => {
                let norm2: f64 = a.iter().map(|x| x * x).sum();
                if !(norm2 > 0.0) || !(*t > 1.0) {
                    return Err(invalid(format!(
                        "chernoff needs a nonzero vector and t > 1, got |a|^2 = {norm2}, t = {t}"
                    )));
                }
            }
        }
        Ok(())
    }

    fn bound(&self) -> f64 {
        match self {
            Self::GaussianNorm { m, eps } => (-eps * eps * *m as f64 / 4.0).exp(),
            Self::Projection { m, rho, .. } => (-rho * rho * *m as f64 / 4.0).exp(),
            Self::Chernoff { a, t } => {
                let norm2: f64 = a.iter().map(|x| x * x).sum();
                (2.0 * (-t * t / (2.0 * norm2)).exp()).min(1.0)
            }
        }
    }

    fn event(&self, rng: &mut impl Rng) -> bool {
        let mut normal = || -> f64 { rng.sample(StandardNormal) };
        match self {
            Self::GaussianNorm { m, eps } => {
                let sq: f64 = (0..*m).map(|_| normal().powi(2)).sum();
                sq >= *m as f64 / (1.0 - eps)
            }
            Self::Projection { n, m, rho } => {
                let mut head = 0.0;
                let mut total = 0.0;
                for k in 0..*n {
                    let x = normal().powi(2);
                    total += x;
                    if k < *m {
                        head += x;
                    }
                }
                let level = (*m as f64 / *n as f64).sqrt() / (1.0 - rho);
                (head / total).sqrt() >= level
            }
            Self::Chernoff { a, t } => {
                let s: f64 = a.iter().map(|ai| ai * normal()).sum();
                s.abs() >= *t
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConcentrationReport {
    pub kind: &'static str,
    pub trials: usize,
    pub hits: usize,
    pub frequency: f64,
    pub bound: f64,
    /// Binomial standard deviation at the bound.
    pub sigma: f64,
    /// `frequency <= bound + 3 sigma`.
    pub pass: bool,
}

/// Draws `trials` independent instances, trial `k` from `seed/k`.
pub fn concentration_check(
    kind: &ConcentrationKind,
    trials: usize,
    seed: &Seed,
) -> Result<ConcentrationReport> {
    if trials == 0 {
        return Err(invalid("trials must be >= 1"));
    }
    kind.validate()?;
    let hits = (0..trials)
        .filter(|&k| kind.event(&mut seed.index(k as u64).rng()))
        .count();
    let frequency = hits as f64 / trials as f64;
    let bound = kind.bound();
    let sigma = (bound * (1.0 - bound) / trials as f64).sqrt();
    Ok(ConcentrationReport {
        kind: kind.name(),
        trials,
        hits,
        frequency,
        bound,
        sigma,
        pass: frequency <= bound + 3.0 * sigma,
    })
}
