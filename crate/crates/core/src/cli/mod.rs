//! Command-line front end. [`run`] does the work and reports failures as
//! [`CliError`]; the binary maps them to exit codes.

mod config;

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::experiments::{
    certifier_name, classify_trial, records_csv, run_phase_sweep, sample_instance, summary_csv,
    trial_seed, ChshSetting, ClassifyContext, ExperimentConfig, Margins, SamplingMode,
};
use crate::format::fmt12;
use crate::rmt::{
    alpha0, alpha0_margin, concentration_check, decoupling_residual, mp, mp_inverse, theta,
    ConcentrationKind,
};
use crate::sampling::{sample_coupled_svd, sample_gaussian_matrix, Seed};
use crate::tolerance::{CLASSICAL_GAUSSIAN_CONSTANT, GROTHENDIECK_UPPER};
use crate::values::{coupled_svd_witness, ThresholdMode};

pub use config::{CliConfig, KEYS};

/// Exit code for bad arguments or configuration.
pub const EXIT_CONFIG: i32 = 2;
/// Exit code for file-system failures.
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Config(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn out_err(e: std::io::Error) -> CliError {
    CliError::Io(format!("standard output: {e}"))
}

fn config_help() -> String {
    let mut s = String::from("Config keys (file lines or --set key=value):\n");
    for (k, d) in KEYS {
        let _ = writeln!(s, "  {k:<15} {d}");
    }
    s
}

#[derive(Debug, Parser)]
#[command(name = "bellcorr", version, about = "Random correlation matrices: locality certificates and phase sweeps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Independent,
    Coupled,
    Bernoulli,
}

impl From<ModeArg> for SamplingMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Independent => SamplingMode::Independent,
            ModeArg::Coupled => SamplingMode::Coupled,
            ModeArg::Bernoulli => SamplingMode::Bernoulli,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ThresholdArg {
    Asymptotic,
    FiniteN,
}

impl From<ThresholdArg> for ThresholdMode {
    fn from(t: ThresholdArg) -> Self {
        match t {
            ThresholdArg::Asymptotic => ThresholdMode::Asymptotic,
            ThresholdArg::FiniteN => ThresholdMode::FiniteN,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Check {
    Mp,
    Theta,
    Alpha0,
    Decouple,
    Tails,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a phase sweep and write records.csv and summary.csv.
    #[command(after_help = config_help())]
    Sweep {
        /// Flat key=value config file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
        /// Override a config key; may be repeated.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Master seed (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (overrides the config).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Classify one sampled correlation matrix; prints JSON.
    Classify {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Independent)]
        mode: ModeArg,
        /// auto | full | off | sampled:<row pairs>
        #[arg(long, default_value = "auto")]
        chsh: String,
        #[arg(long, default_value_t = 16)]
        n_exact: usize,
        #[arg(long, value_enum, default_value_t = ThresholdArg::Asymptotic)]
        threshold: ThresholdArg,
    },
    /// Evaluate the SVD witness of a coupled sample; prints JSON.
    Witness {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ThresholdArg::Asymptotic)]
        threshold: ThresholdArg,
    },
    /// Random-matrix checks.
    Rmt {
        #[arg(long, value_enum)]
        check: Check,
        /// Level for `mp`.
        #[arg(long = "C", default_value_t = 1.0)]
        c: f64,
        /// Ratio for `theta`.
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 250)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Monte-Carlo trials for `tails`.
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        /// Write the `mp` or `theta` curve to this CSV file.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Gram-Schmidt decoupling residuals over several seeds.
    Decouple {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of seeds, `seed/0 .. seed/(count-1)`.
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Envelope factor `1 + eps`.
        #[arg(long, default_value_t = 1.15)]
        envelope: f64,
    },
}

/// Executes `cli`, writing reports to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<(), CliError> {
    match &cli.command {
        Command::Sweep {
            config,
            out: dir,
            overrides,
            seed,
            threads,
        } => cmd_sweep(config.as_deref(), dir, overrides, *seed, *threads, out),
        Command::Classify {
            n,
            m,
            seed,
            mode,
            chsh,
            n_exact,
            threshold,
        } => cmd_classify(*n, *m, *seed, (*mode).into(), chsh, *n_exact, (*threshold).into(), out),
        Command::Witness {
            n,
            m,
            seed,
            threshold,
        } => cmd_witness(*n, *m, *seed, (*threshold).into(), out),
        Command::Rmt {
            check,
            c,
            alpha,
            n,
            m,
            seed,
            trials,
            curve,
        } => cmd_rmt(*check, *c, *alpha, *n, *m, *seed, *trials, curve.as_deref(), out),
        Command::Decouple {
            n,
            m,
            seed,
            count,
            envelope,
        } => cmd_decouple(*n, *m, *seed, *count, *envelope, out),
    }
}

/// Loads the config file (if any) and applies overrides in order.
pub fn load_config(
    path: Option<&Path>,
    overrides: &[String],
    seed: Option<u64>,
    threads: Option<usize>,
) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| {
                CliError::Config(format!("cannot read config file {}: {e}", p.display()))
            })?;
            CliConfig::parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?
        }
        None => CliConfig::default(),
    };
    for o in overrides {
        cfg.set(o).map_err(CliError::Config)?;
    }
    if let Some(s) = seed {
        cfg.set(&format!("seed={s}")).map_err(CliError::Config)?;
    }
    if let Some(t) = threads {
        cfg.set(&format!("threads={t}")).map_err(CliError::Config)?;
    }
    cfg.to_experiment().map_err(CliError::Config)
}

fn cmd_sweep(
    config: Option<&Path>,
    dir: &Path,
    overrides: &[String],
    seed: Option<u64>,
    threads: Option<usize>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let cfg = load_config(config, overrides, seed, threads)?;
    let res = run_phase_sweep(&cfg)?;
    std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let records = dir.join("records.csv");
    std::fs::write(&records, records_csv(&res.records)).map_err(|e| io_err(&records, e))?;
    let summary = dir.join("summary.csv");
    std::fs::write(&summary, summary_csv(&res.summary)).map_err(|e| io_err(&summary, e))?;
    writeln!(
        out,
        "{} trials in {} cells; wrote {} and {}",
        res.records.len(),
        res.summary.len(),
        records.display(),
        summary.display()
    )
    .map_err(out_err)
}

fn check_dims(n: usize, m: usize) -> Result<(), CliError> {
    if n < 1 || m < 1 {
        return Err(CliError::Config(format!(
            "--n and --m must be >= 1, got n = {n}, m = {m}"
        )));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_classify(
    n: usize,
    m: usize,
    seed: u64,
    mode: SamplingMode,
    chsh: &str,
    n_exact: usize,
    threshold: ThresholdMode,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    check_dims(n, m)?;
    let chsh = ChshSetting::parse(chsh)
        .ok_or_else(|| CliError::Config(format!("invalid --chsh '{chsh}'")))?;
    if n_exact > crate::tolerance::EXACT_LIMIT {
        return Err(CliError::Config(format!("--n-exact {n_exact} exceeds 20")));
    }
    let tseed = trial_seed(seed, n, m, 0);
    let (gamma, witness) = sample_instance(mode, n, m, threshold, &tseed)?;
    let ctx = ClassifyContext {
        n_exact,
        chsh: chsh.to_mode(&tseed.tag("chsh")),
        margins: Margins::default(),
        witness: witness.as_ref(),
        audit: true,
    };
    let c = classify_trial(&gamma, &ctx);
    let diagnostics: serde_json::Map<String, serde_json::Value> = c
        .diagnostics
        .iter()
        .filter(|(k, _)| !k.starts_with("time_ms_"))
        .map(|(k, v)| (k.clone(), json!(v)))
        .collect();
    let report = json!({
        "n": n,
        "m": m,
        "mode": mode.as_str(),
        "seed_path": tseed.to_string(),
        "verdict": c.verdict.as_str(),
        "certifier": certifier_name(c.certificate.as_ref()),
        "certificate": c.certificate.as_ref().map(|c| c.summary()),
        "diagnostics": diagnostics,
    });
    writeln!(out, "{report:#}").map_err(out_err)
}

fn cmd_witness(
    n: usize,
    m: usize,
    seed: u64,
    threshold: ThresholdMode,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    check_dims(n, m)?;
    if m > n {
        return Err(CliError::Config(format!("--m {m} exceeds --n {n}")));
    }
    let tseed = trial_seed(seed, n, m, 0);
    let sample = sample_coupled_svd(n, &tseed.tag("svd"))?;
    let w = coupled_svd_witness(&sample, m, threshold)?;
    let report = json!({
        "n": n,
        "m": m,
        "seed_path": tseed.to_string(),
        "threshold_mode": threshold.as_str(),
        "inner_product": w.inner_product,
        "threshold": w.threshold,
        "normalized": w.inner_product / (n as f64).powf(1.5),
        "exceeds": w.exceeds(0.0),
    });
    writeln!(out, "{report:#}").map_err(out_err)
}

fn write_curve(path: &Path, header: &str, rows: &[(f64, f64)]) -> Result<(), CliError> {
    let mut s = format!("{header}\n");
    for (x, y) in rows {
        let _ = writeln!(s, "{},{}", fmt12(*x), fmt12(*y));
    }
    std::fs::write(path, s).map_err(|e| io_err(path, e))
}

#[allow(clippy::too_many_arguments)]
fn cmd_rmt(
    check: Check,
    c: f64,
    alpha: f64,
    n: usize,
    m: usize,
    seed: u64,
    trials: usize,
    curve: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let mut report = String::new();
    match check {
        Check::Mp => {
            let _ = writeln!(report, "f({}) = {}", fmt12(c), fmt12(mp(c)?));
            if let Some(path) = curve {
                let rows = (0..=200)
                    .map(|k| {
                        let x = k as f64 / 100.0;
                        mp(x).map(|y| (x, y))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                write_curve(path, "C,f", &rows)?;
            }
        }
        Check::Theta => {
            let _ = writeln!(report, "theta({}) = {}", fmt12(alpha), fmt12(theta(alpha)?));
            if let Some(path) = curve {
                let rows = (1..=100)
                    .map(|k| {
                        let a = k as f64 / 100.0;
                        theta(a).map(|t| (a, t))
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                write_curve(path, "alpha,theta", &rows)?;
            }
        }
        Check::Alpha0 => {
            let a0 = alpha0()?;
            let reference = 0.00404;
            let margin = |a: f64| alpha0_margin(a, GROTHENDIECK_UPPER, CLASSICAL_GAUSSIAN_CONSTANT);
            let _ = writeln!(report, "alpha0 computed  = {}", fmt12(a0));
            let _ = writeln!(report, "alpha0 reference = {reference}");
            let _ = writeln!(report, "f^-1(alpha0)     = {}", fmt12(mp_inverse(a0)?));
            let _ = writeln!(report, "theta(alpha0)    = {}", fmt12(theta(a0)?));
            let _ = writeln!(report, "margin at reference = {}", fmt12(margin(reference)?));
        }
        Check::Decouple => {
            check_dims(n, m)?;
            let g = sample_gaussian_matrix(n, n, &Seed::new(seed).tag("decouple").index(0))?;
            let r = decoupling_residual(&g, m)?;
            let _ = writeln!(
                report,
                "n = {} m = {} residual = {} theta = {} ratio = {}",
                r.n,
                r.m,
                fmt12(r.residual),
                fmt12(r.theta_alpha),
                fmt12(r.ratio)
            );
        }
        Check::Tails => {
            let kinds = [
                ConcentrationKind::GaussianNorm { m: 400, eps: 0.3 },
                ConcentrationKind::Projection {
                    n: 400,
                    m: 100,
                    rho: 0.5,
                },
                ConcentrationKind::Chernoff {
                    a: vec![1.0],
                    t: 2.0,
                },
            ];
            let base = Seed::new(seed).tag("tails");
            for k in &kinds {
                let r = concentration_check(k, trials, &base.tag(k.name()))?;
                let _ = writeln!(
                    report,
                    "{}: frequency = {} bound = {} sigma = {} pass = {}",
                    r.kind,
                    fmt12(r.frequency),
                    fmt12(r.bound),
                    fmt12(r.sigma),
                    r.pass
                );
            }
        }
    }
    out.write_all(report.as_bytes()).map_err(out_err)
}

fn cmd_decouple(
    n: usize,
    m: usize,
    seed: u64,
    count: usize,
    envelope: f64,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    check_dims(n, m)?;
    if count == 0 {
        return Err(CliError::Config("--count must be >= 1".into()));
    }
    let base = Seed::new(seed).tag("decouple");
    let mut within = 0usize;
    let mut report = String::from("seed,residual,theta,ratio\n");
    for k in 0..count {
        let g = sample_gaussian_matrix(n, n, &base.index(k as u64))?;
        let r = decoupling_residual(&g, m)?;
        if r.ratio <= envelope {
            within += 1;
        }
        let _ = writeln!(
            report,
            "{k},{},{},{}",
            fmt12(r.residual),
            fmt12(r.theta_alpha),
            fmt12(r.ratio)
        );
    }
    let _ = writeln!(
        report,
        "# ratio <= {envelope} in {within} of {count} seeds"
    );
    out.write_all(report.as_bytes()).map_err(out_err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> (Result<(), CliError>, String) {
        let cli = Cli::try_parse_from(std::iter::once("bellcorr").chain(args.iter().copied()))
            .expect("arguments parse");
        let mut buf = Vec::new();
        let r = run(&cli, &mut buf);
        (r, String::from_utf8(buf).unwrap())
    }

    #[test]
    fn rmt_mp_and_theta() {
        let (r, s) = run_args(&["rmt", "--check", "mp", "--C", "0"]);
        r.unwrap();
        assert_eq!(s.trim(), "f(0) = 1");
        let (r, s) = run_args(&["rmt", "--check", "theta", "--alpha", "1"]);
        r.unwrap();
        assert!(s.contains("0.816496580928"), "{s}");
    }

    #[test]
    fn classify_rejects_zero_m() {
        let (r, _) = run_args(&["classify", "--n", "4", "--m", "0"]);
        assert_eq!(r.unwrap_err().exit_code(), EXIT_CONFIG);
    }

    #[test]
    fn classify_bernoulli_is_local() {
        let (r, s) = run_args(&["classify", "--n", "6", "--m", "3", "--mode", "bernoulli", "--seed", "4"]);
        r.unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["verdict"], "local");
    }

    #[test]
    fn missing_config_names_path() {
        let (r, _) = run_args(&["sweep", "--config", "/nonexistent/x.conf", "--out", "/tmp/unused"]);
        let e = r.unwrap_err();
        assert_eq!(e.exit_code(), EXIT_CONFIG);
        assert!(e.to_string().contains("/nonexistent/x.conf"));
    }
}
