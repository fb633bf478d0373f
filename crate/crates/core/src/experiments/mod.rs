//! Phase-transition sweeps over an `(n, alpha)` grid: sampling, the staged
//! classification pipeline, aggregation and CSV records.

mod records;

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use crate::correlations::{
    gram, verify_certificate, Certificate, Classification, CorrelationMatrix, Verdict,
};
use crate::error::{invalid, Error, Result};
use crate::sampling::{
    sample_bernoulli_ensemble, sample_coupled_svd, sample_haar_sphere_ensemble, Seed,
};
use crate::tolerance::{EXACT_LIMIT, STRICT_MARGIN};
use crate::values::{
    certify_local_fast, certify_nonlocal_chsh, coupled_svd_witness, linf_l2_norm, pi_norm_exact,
    ChshMode, SvdWitness, ThresholdMode,
};

pub use records::{
    parse_records_csv, records_csv, summary_csv, summary_from_records_csv, RECORDS_HEADER,
    SUMMARY_HEADER,
};

/// How the vectors of a trial are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplingMode {
    /// Independent uniform vectors on the sphere.
    #[default]
    Independent,
    /// Truncated rows of the singular vectors of a gaussian matrix, which
    /// also supplies a Bell witness.
    Coupled,
    /// Normalized random sign vectors.
    Bernoulli,
}

impl SamplingMode {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "independent" => Some(Self::Independent),
            "coupled" => Some(Self::Coupled),
            "bernoulli" => Some(Self::Bernoulli),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Independent => "independent",
            Self::Coupled => "coupled",
            Self::Bernoulli => "bernoulli",
        }
    }
}

/// CHSH stage setting; the trial seed is attached when it runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChshSetting {
    #[default]
    Auto,
    Full,
    Sampled(usize),
    Off,
}

impl ChshSetting {
    /// `auto`, `full`, `off` or `sampled:<row pairs>`.
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "auto" => Some(Self::Auto),
            "full" => Some(Self::Full),
            "off" => Some(Self::Off),
            _ => {
                let k: usize = s.strip_prefix("sampled:")?.parse().ok()?;
                (k > 0).then_some(Self::Sampled(k))
            }
        }
    }

    pub fn to_mode(self, seed: &Seed) -> Option<ChshMode> {
        match self {
            Self::Auto => Some(ChshMode::Auto { seed: seed.clone() }),
            Self::Full => Some(ChshMode::Full),
            Self::Sampled(row_pairs) => Some(ChshMode::Sampled {
                row_pairs,
                seed: seed.clone(),
            }),
            Self::Off => None,
        }
    }
}

impl std::fmt::Display for ChshSetting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Auto => f.write_str("auto"),
            Self::Full => f.write_str("full"),
            Self::Sampled(k) => write!(f, "sampled:{k}"),
            Self::Off => f.write_str("off"),
        }
    }
}

/// Strictness of each certifier.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margins {
    /// CHSH value must exceed `2 + chsh`.
    pub chsh: f64,
    /// Inner product with the dual witness must exceed `1 + pi_norm`.
    pub pi_norm: f64,
    /// Witness value must exceed `threshold (1 + witness)`.
    pub witness: f64,
}

impl Default for Margins {
    fn default() -> Self {
        Self {
            chsh: STRICT_MARGIN,
            pi_norm: STRICT_MARGIN,
            witness: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub n_grid: Vec<usize>,
    pub alpha_grid: Vec<f64>,
    pub trials_per_cell: usize,
    pub master_seed: u64,
    pub mode: SamplingMode,
    /// Exact projective norm runs for `n <= n_exact`.
    pub n_exact: usize,
    pub chsh: ChshSetting,
    pub margins: Margins,
    pub threshold_mode: ThresholdMode,
    /// Re-verify every certificate and cross-check small trials against the
    /// exact projective norm.
    pub audit: bool,
    /// Fill `wall_time_ms`; off by default so records stay reproducible.
    pub timing: bool,
    /// Worker threads; `None` uses the machine's parallelism.
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n_grid: vec![8],
            alpha_grid: vec![0.25, 3.0],
            trials_per_cell: 10,
            master_seed: 0,
            mode: SamplingMode::Independent,
            n_exact: 16,
            chsh: ChshSetting::Auto,
            margins: Margins::default(),
            threshold_mode: ThresholdMode::Asymptotic,
            audit: true,
            timing: false,
            threads: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_grid.is_empty() || self.alpha_grid.is_empty() {
            return Err(invalid("n_grid and alpha_grid must be nonempty"));
        }
        if let Some(n) = self.n_grid.iter().find(|&&n| n < 2) {
            return Err(invalid(format!("every n must be >= 2, got {n}")));
        }
        if let Some(a) = self.alpha_grid.iter().find(|&&a| !(a > 0.0 && a <= 4.0)) {
            return Err(invalid(format!("every alpha must lie in (0, 4], got {a}")));
        }
        if self.trials_per_cell == 0 {
            return Err(invalid("trials_per_cell must be >= 1"));
        }
        if self.n_exact > EXACT_LIMIT {
            return Err(invalid(format!(
                "n_exact = {} exceeds the exact limit {EXACT_LIMIT}",
                self.n_exact
            )));
        }
        if self.threads == Some(0) {
            return Err(invalid("threads must be >= 1"));
        }
        if self.mode == SamplingMode::Coupled {
            for &n in &self.n_grid {
                for &a in &self.alpha_grid {
                    if dimension_for(n, a) > n {
                        return Err(invalid(format!(
                            "coupled mode needs m <= n, but alpha = {a} gives m = {} at n = {n}",
                            dimension_for(n, a)
                        )));
                    }
                }
            }
        }
        for (name, v) in [
            ("chsh_margin", self.margins.chsh),
            ("pi_margin", self.margins.pi_norm),
            ("witness_margin", self.margins.witness),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }
}

/// `m = round(alpha n)`, at least 1.
pub fn dimension_for(n: usize, alpha: f64) -> usize {
    ((alpha * n as f64).round() as usize).max(1)
}

/// Seed of trial `k` in the cell `(n, m)`, independent of the grid layout.
pub fn trial_seed(master: u64, n: usize, m: usize, trial: usize) -> Seed {
    Seed::new(master)
        .tag("n")
        .index(n as u64)
        .tag("m")
        .index(m as u64)
        .tag("trial")
        .index(trial as u64)
}

/// Everything `classify_trial` needs besides the matrix.
#[derive(Debug, Clone)]
pub struct ClassifyContext<'a> {
    pub n_exact: usize,
    pub chsh: Option<ChshMode>,
    pub margins: Margins,
    pub witness: Option<&'a SvdWitness>,
    pub audit: bool,
}

impl Default for ClassifyContext<'_> {
    fn default() -> Self {
        Self {
            n_exact: 16,
            chsh: Some(ChshMode::Full),
            margins: Margins::default(),
            witness: None,
            audit: false,
        }
    }
}

/// Which stage produced the verdict.
pub fn certifier_name(cert: Option<&Certificate>) -> &'static str {
    match cert {
        Some(Certificate::LocalNormBound { .. }) => "fast_local",
        Some(Certificate::NonlocalChsh { .. }) => "chsh",
        Some(Certificate::LocalDecomposition { .. }) | Some(Certificate::NonlocalExact { .. }) => {
            "pi_norm"
        }
        Some(Certificate::NonlocalStatistical { .. }) => "svd_witness",
        None => "none",
    }
}

fn timed<T>(diag: &mut BTreeMap<String, f64>, stage: &str, f: impl FnOnce() -> T) -> T {
    let start = Instant::now();
    let out = f();
    diag.insert(
        format!("time_ms_{stage}"),
        start.elapsed().as_secs_f64() * 1e3,
    );
    out
}

/// Runs the certifiers cheapest first and stops at the first certificate:
/// row-norm bound, CHSH scan, exact projective norm (`n <= n_exact`), then
/// the SVD witness when one is supplied. A failing stage is logged and
/// skipped.
///
/// Diagnostics: `linf_l2`, `chsh_max`, `pi_norm`, `pi_norm_lower`,
/// `witness_value`, `stat_threshold`, `stage_errors`, `audit_failures`, and
/// `time_ms_<stage>` for each stage run.
pub fn classify_trial(gamma: &CorrelationMatrix, ctx: &ClassifyContext<'_>) -> Classification {
    let n = gamma.n();
    let mut diag = BTreeMap::new();
    let mut errors = 0.0;
    let mut pi_value: Option<f64> = None;
    let mut found: Option<(Verdict, Certificate)> = None;

    let fast = timed(&mut diag, "fast_local", || certify_local_fast(gamma));
    diag.insert("linf_l2".into(), linf_l2_norm(gamma.entries()));
    if let Some(cert) = fast {
        found = Some((Verdict::LocalCertified, cert));
    }

    if let Some(mode) = &ctx.chsh {
        if n >= 2 {
            let scan = timed(&mut diag, "chsh", || {
                certify_nonlocal_chsh(gamma, ctx.margins.chsh, mode)
            });
            match scan {
                Ok((scan, cert)) => {
                    diag.insert("chsh_max".into(), scan.value);
                    if let (None, Some(cert)) = (&found, cert) {
                        found = Some((Verdict::NonlocalCertified, cert));
                    }
                }
                Err(e) => {
                    log::warn!("CHSH stage failed: {e}");
                    errors += 1.0;
                }
            }
        }
    }

    let need_exact = n <= ctx.n_exact && (found.is_none() || ctx.audit);
    if need_exact {
        match timed(&mut diag, "pi_norm", || pi_norm_exact(gamma.entries(), 1e-10)) {
            Ok(res) => {
                diag.insert("pi_norm".into(), res.value);
                diag.insert("pi_norm_lower".into(), res.lower);
                pi_value = Some(res.value);
                if found.is_none() {
                    if let Some(cert) = res.local_certificate() {
                        found = Some((Verdict::LocalCertified, cert.clone()));
                    } else if let Some(cert) = res.nonlocal_certificate(ctx.margins.pi_norm) {
                        found = Some((Verdict::NonlocalCertified, cert));
                    }
                }
            }
            Err(e) => {
                log::warn!("projective norm stage failed at n = {n}: {e}");
                errors += 1.0;
            }
        }
    }

    if let (None, Some(w)) = (&found, ctx.witness) {
        diag.insert("witness_value".into(), w.inner_product);
        diag.insert("stat_threshold".into(), w.threshold);
        if w.exceeds(ctx.margins.witness) {
            found = Some((
                Verdict::StatisticallyNonlocal,
                Certificate::NonlocalStatistical {
                    witness: w.witness.clone(),
                    inner_product: w.inner_product,
                    threshold: w.threshold,
                },
            ));
        }
    }

    if ctx.audit {
        let mut failures = 0.0;
        if let Some((verdict, cert)) = &found {
            match verify_certificate(gamma, cert) {
                Ok(v) if v.valid => {}
                Ok(v) => {
                    log::warn!("certificate failed re-verification: {:?}", v.reason);
                    failures += 1.0;
                }
                Err(e) => {
                    log::warn!("certificate could not be re-verified: {e}");
                    failures += 1.0;
                }
            }
            if let Some(p) = pi_value {
                let local = *verdict == Verdict::LocalCertified;
                let nonlocal = *verdict == Verdict::NonlocalCertified;
                if (local && p > 1.0 + 1e-6) || (nonlocal && p <= 1.0) {
                    log::warn!("verdict {verdict} disagrees with projective norm {p}");
                    failures += 1.0;
                }
            }
        }
        diag.insert("audit_failures".into(), failures);
    }
    if errors > 0.0 {
        diag.insert("stage_errors".into(), errors);
    }

    match found {
        Some((verdict, cert)) => Classification {
            verdict,
            certificate: Some(cert),
            diagnostics: diag,
        },
        None => Classification {
            verdict: Verdict::Undecided,
            certificate: None,
            diagnostics: diag,
        },
    }
}

/// One sampled instance.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub n: usize,
    pub m: usize,
    pub alpha_nominal: f64,
    pub alpha_actual: f64,
    pub trial: usize,
    pub seed_path: String,
    pub verdict: Verdict,
    pub certifier: String,
    pub linf_l2: Option<f64>,
    pub chsh_max: Option<f64>,
    pub pi_norm: Option<f64>,
    pub witness_value: Option<f64>,
    pub stat_threshold: Option<f64>,
    pub wall_time_ms: Option<f64>,
    /// Everything `classify_trial` reported, plus `error` when sampling failed.
    pub diagnostics: BTreeMap<String, f64>,
    pub error: Option<String>,
}

/// Draws the correlation matrix of one trial (and, in coupled mode, its
/// witness) from `seed`.
pub fn sample_instance(
    mode: SamplingMode,
    n: usize,
    m: usize,
    threshold_mode: ThresholdMode,
    seed: &Seed,
) -> Result<(CorrelationMatrix, Option<SvdWitness>)> {
    match mode {
        SamplingMode::Independent => {
            sample_haar_sphere_ensemble(n, m, &seed.tag("ensemble")).map(|e| (gram(&e), None))
        }
        SamplingMode::Bernoulli => {
            sample_bernoulli_ensemble(n, m, &seed.tag("ensemble")).map(|e| (gram(&e), None))
        }
        SamplingMode::Coupled => sample_coupled_svd(n, &seed.tag("svd"))
            .and_then(|s| coupled_svd_witness(&s, m, threshold_mode))
            .map(|w| (w.gamma.clone(), Some(w))),
    }
}

/// Samples and classifies trial `trial` of the cell `(n, alpha)`.
pub fn run_trial(config: &ExperimentConfig, n: usize, alpha: f64, trial: usize) -> TrialRecord {
    let start = Instant::now();
    let m = dimension_for(n, alpha);
    let seed = trial_seed(config.master_seed, n, m, trial);
    let mut record = TrialRecord {
        n,
        m,
        alpha_nominal: alpha,
        alpha_actual: m as f64 / n as f64,
        trial,
        seed_path: seed.to_string(),
        verdict: Verdict::Undecided,
        certifier: "none".into(),
        linf_l2: None,
        chsh_max: None,
        pi_norm: None,
        witness_value: None,
        stat_threshold: None,
        wall_time_ms: None,
        diagnostics: BTreeMap::new(),
        error: None,
    };

    let sampled = sample_instance(config.mode, n, m, config.threshold_mode, &seed);
    match sampled {
        Ok((gamma, witness)) => {
            let ctx = ClassifyContext {
                n_exact: config.n_exact,
                chsh: config.chsh.to_mode(&seed.tag("chsh")),
                margins: config.margins,
                witness: witness.as_ref(),
                audit: config.audit,
            };
            let c = classify_trial(&gamma, &ctx);
            record.verdict = c.verdict;
            record.certifier = certifier_name(c.certificate.as_ref()).into();
            let get = |k: &str| c.diagnostics.get(k).copied();
            record.linf_l2 = get("linf_l2");
            record.chsh_max = get("chsh_max");
            record.pi_norm = get("pi_norm");
            record.witness_value = get("witness_value");
            record.stat_threshold = get("stat_threshold");
            record.diagnostics = c.diagnostics;
        }
        Err(e) => {
            log::warn!("trial {} failed: {e}", record.seed_path);
            record.certifier = "error".into();
            record.diagnostics.insert("error".into(), 1.0);
            record.error = Some(e.to_string());
        }
    }
    if config.timing {
        record.wall_time_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    record
}

/// Verdict fractions of one `(n, alpha)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub n: usize,
    pub alpha_nominal: f64,
    pub frac_local: f64,
    pub frac_nonlocal: f64,
    pub frac_statistical: f64,
    pub frac_undecided: f64,
    pub trials: usize,
    pub mean_linf_l2: Option<f64>,
    pub mean_chsh_max: Option<f64>,
}

fn mean(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (mut sum, mut count) = (0.0, 0usize);
    for v in values.flatten() {
        sum += v;
        count += 1;
    }
    (count > 0).then(|| sum / count as f64)
}

fn record_order(a: &TrialRecord, b: &TrialRecord) -> std::cmp::Ordering {
    a.n.cmp(&b.n)
        .then(a.alpha_nominal.total_cmp(&b.alpha_nominal))
        .then(a.trial.cmp(&b.trial))
}

/// Per-cell fractions, folded over the records in sorted order.
pub fn summarize(records: &[TrialRecord]) -> Vec<Summary> {
    let mut sorted: Vec<&TrialRecord> = records.iter().collect();
    sorted.sort_by(|a, b| record_order(a, b));
    let mut out = Vec::new();
    for cell in sorted.chunk_by(|a, b| a.n == b.n && a.alpha_nominal == b.alpha_nominal) {
        let total = cell.len();
        let frac = |v: Verdict| cell.iter().filter(|r| r.verdict == v).count() as f64 / total as f64;
        out.push(Summary {
            n: cell[0].n,
            alpha_nominal: cell[0].alpha_nominal,
            frac_local: frac(Verdict::LocalCertified),
            frac_nonlocal: frac(Verdict::NonlocalCertified),
            frac_statistical: frac(Verdict::StatisticallyNonlocal),
            frac_undecided: frac(Verdict::Undecided),
            trials: total,
            mean_linf_l2: mean(cell.iter().map(|r| r.linf_l2)),
            mean_chsh_max: mean(cell.iter().map(|r| r.chsh_max)),
        });
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Sorted by `(n, alpha_nominal, trial)`.
    pub records: Vec<TrialRecord>,
    pub summary: Vec<Summary>,
}

/// Runs every `(n, alpha, trial)` of the grid. Records depend only on the
/// configuration, not on the thread count or scheduling.
pub fn run_phase_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let mut ns = config.n_grid.clone();
    ns.sort_unstable();
    ns.dedup();
    let mut alphas = config.alpha_grid.clone();
    alphas.sort_by(f64::total_cmp);
    alphas.dedup();

    let mut tasks = Vec::new();
    for &n in &ns {
        for &a in &alphas {
            for t in 0..config.trials_per_cell {
                tasks.push((n, a, t));
            }
        }
    }

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = config.threads {
        builder = builder.num_threads(k);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Internal(format!("cannot start worker threads: {e}")))?;
    let mut records: Vec<TrialRecord> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(n, a, t)| run_trial(config, n, a, t))
            .collect()
    });
    records.sort_by(record_order);
    let summary = summarize(&records);
    Ok(SweepResult { records, summary })
}
