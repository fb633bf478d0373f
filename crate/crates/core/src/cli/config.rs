//! Flat `key = value` configuration for sweeps.

use std::collections::BTreeMap;

use crate::experiments::{ChshSetting, ExperimentConfig, SamplingMode};
use crate::values::ThresholdMode;

/// Every accepted key with its meaning, in `--help` order.
pub const KEYS: &[(&str, &str)] = &[
    ("n_grid", "comma-separated sizes n (default 8)"),
    ("alpha_grid", "comma-separated ratios alpha = m/n in (0, 4] (default 0.25,3.0)"),
    ("trials", "trials per (n, alpha) cell (default 10)"),
    ("seed", "master seed (default 0)"),
    ("mode", "independent | coupled | bernoulli (default independent)"),
    ("n_exact", "exact projective norm for n <= n_exact, at most 20 (default 16)"),
    ("chsh", "auto | full | off | sampled:<row pairs> (default auto)"),
    ("chsh_margin", "CHSH value must exceed 2 + margin (default 1e-8)"),
    ("pi_margin", "dual witness must exceed 1 + margin (default 1e-8)"),
    ("witness_margin", "SVD witness must exceed threshold * (1 + margin) (default 0)"),
    ("threshold", "asymptotic | finite_n (default asymptotic)"),
    ("audit", "true | false: re-verify certificates (default true)"),
    ("timing", "true | false: fill wall_time_ms (default false)"),
    ("threads", "worker threads (default: all cores)"),
];

/// `key=value` pairs, later entries overriding earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CliConfig {
    values: BTreeMap<String, String>,
}

fn unknown_key(key: &str) -> String {
    let valid: Vec<&str> = KEYS.iter().map(|(k, _)| *k).collect();
    format!("unknown key '{key}'; valid keys: {}", valid.join(", "))
}

impl CliConfig {
    /// Parses config text: one `key = value` per line, `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cfg = Self::default();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            cfg.set(line).map_err(|e| format!("line {}: {e}", k + 1))?;
        }
        Ok(cfg)
    }

    /// Applies one `key=value` assignment.
    pub fn set(&mut self, assignment: &str) -> Result<(), String> {
        let (key, value) = assignment
            .split_once('=')
            .ok_or_else(|| format!("expected key=value, got '{assignment}'"))?;
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(unknown_key(key));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    pub fn to_experiment(&self) -> Result<ExperimentConfig, String> {
        let mut c = ExperimentConfig::default();
        for (key, value) in &self.values {
            let v = value.as_str();
            match key.as_str() {
                "n_grid" => c.n_grid = list(key, v)?,
                "alpha_grid" => c.alpha_grid = list(key, v)?,
                "trials" => c.trials_per_cell = num(key, v)?,
                "seed" => c.master_seed = num(key, v)?,
                "mode" => {
                    c.mode = SamplingMode::parse(v).ok_or_else(|| bad(key, v))?;
                }
                "n_exact" => c.n_exact = num(key, v)?,
                "chsh" => c.chsh = ChshSetting::parse(v).ok_or_else(|| bad(key, v))?,
                "chsh_margin" => c.margins.chsh = num(key, v)?,
                "pi_margin" => c.margins.pi_norm = num(key, v)?,
                "witness_margin" => c.margins.witness = num(key, v)?,
                "threshold" => {
                    c.threshold_mode = ThresholdMode::parse(v).ok_or_else(|| bad(key, v))?;
                }
                "audit" => c.audit = num(key, v)?,
                "timing" => c.timing = num(key, v)?,
                "threads" => c.threads = Some(num(key, v)?),
                other => return Err(unknown_key(other)),
            }
        }
        c.validate().map_err(|e| e.to_string())?;
        Ok(c)
    }
}

fn bad(key: &str, value: &str) -> String {
    format!("invalid value '{value}' for {key}")
}

fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| bad(key, value))
}

fn list<T: std::str::FromStr>(key: &str, value: &str) -> Result<Vec<T>, String> {
    value
        .split(',')
        .map(|x| x.trim())
        .filter(|x| !x.is_empty())
        .map(|x| num(key, x))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_overrides() {
        let mut c = CliConfig::parse(
            "# demo\nn_grid = 8, 10\nalpha_grid=0.25,3.0 # two cells\n\ntrials = 4\nmode = bernoulli\n",
        )
        .unwrap();
        c.set("trials=7").unwrap();
        let e = c.to_experiment().unwrap();
        assert_eq!(e.n_grid, vec![8, 10]);
        assert_eq!(e.alpha_grid, vec![0.25, 3.0]);
        assert_eq!(e.trials_per_cell, 7);
        assert_eq!(e.mode, SamplingMode::Bernoulli);
    }

    #[test]
    fn unknown_key_lists_valid_keys() {
        let err = CliConfig::parse("colour = red\n").unwrap_err();
        assert!(err.contains("line 1") && err.contains("colour") && err.contains("n_grid"));
    }

    #[test]
    fn bad_values() {
        for text in [
            "trials = ten",
            "alpha_grid = 0.5,x",
            "mode = quantum",
            "chsh = sampled:",
            "audit = yes",
            "n_exact = 30",
            "novalue",
        ] {
            let parsed = CliConfig::parse(text).and_then(|c| c.to_experiment());
            assert!(parsed.is_err(), "{text}");
        }
    }

    #[test]
    fn numbers_ignore_locale_conventions() {
        // A comma is a list separator, never a decimal mark.
        let e = CliConfig::parse("alpha_grid = 0.5,1.5").unwrap().to_experiment().unwrap();
        assert_eq!(e.alpha_grid, vec![0.5, 1.5]);
    }
}
