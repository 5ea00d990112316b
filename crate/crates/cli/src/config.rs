//! Experiment settings from a config file and command-line flags.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};

use roundrank_core::{AlgoConstants, AlgorithmKind, ExperimentConfig, KSpec, NoiseKind};

use crate::CliError;

/// Contents of a `--config` file, TOML or JSON by extension.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub algorithm: Option<AlgorithmKind>,
    pub n: Option<usize>,
    pub k: Option<KSpec>,
    pub r: Option<u32>,
    pub noise: Option<NoiseKind>,
    pub p: Option<f64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub scale: Option<f64>,
    pub constants: Option<AlgoConstants>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub timing: Option<bool>,
    pub n_grid: Option<Vec<usize>>,
    pub k_grid: Option<Vec<KSpec>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"));
        let parsed = if json {
            serde_json::from_str(&text).map_err(|e| e.to_string())
        } else {
            toml::from_str(&text).map_err(|e| e.to_string())
        };
        parsed.map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }
}

fn parse_algo(s: &str) -> Result<AlgorithmKind, String> {
    s.parse().map_err(|e: roundrank_core::Error| e.to_string())
}

pub fn parse_k(s: &str) -> Result<KSpec, String> {
    s.parse().map_err(|e: roundrank_core::Error| e.to_string())
}

fn parse_noise(s: &str) -> Result<NoiseKind, String> {
    match s {
        "noiseless" => Ok(NoiseKind::Noiseless),
        "bernoulli" => Ok(NoiseKind::Bernoulli),
        _ => Err(format!("unknown noise {s:?}, expected noiseless or bernoulli")),
    }
}

/// Flags shared by `run` and `sweep`. Each one overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentFlags {
    /// Structured config file (.toml or .json).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Algorithm name, e.g. rsorted1 or two_round_topk.
    #[arg(long, value_parser = parse_algo)]
    pub algo: Option<AlgorithmKind>,
    #[arg(long)]
    pub n: Option<usize>,
    /// An integer, `n`, or `n/<d>`.
    #[arg(long, value_parser = parse_k)]
    pub k: Option<KSpec>,
    #[arg(long)]
    pub r: Option<u32>,
    /// noiseless or bernoulli.
    #[arg(long, value_parser = parse_noise)]
    pub noise: Option<NoiseKind>,
    /// Probability of a correct comparison under bernoulli noise.
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long, env = "ROUNDRANK_SEED")]
    pub seed: Option<u64>,
    /// Multiplier on every repetition constant.
    #[arg(long)]
    pub scale: Option<f64>,
    /// Worker threads.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Result stream path; standard output if absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record per-trial wall time.
    #[arg(long)]
    pub timing: bool,
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub experiment: ExperimentConfig,
    pub jobs: usize,
    pub out: Option<PathBuf>,
    pub n_grid: Option<Vec<usize>>,
    pub k_grid: Option<Vec<KSpec>>,
}

impl ExperimentFlags {
    /// Defaults, then the config file, then flags.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let file = match &self.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let mut e = ExperimentConfig::default();
        if let Some(c) = file.constants {
            e.constants = c;
        }
        let algorithm = self.algo.or(file.algorithm).ok_or_else(|| CliError::Usage("--algo is required".into()))?;
        e.algorithm = algorithm;
        e.n = self.n.or(file.n).unwrap_or(e.n);
        e.k = self.k.or(file.k).unwrap_or(if algorithm == AlgorithmKind::FindMax {
            KSpec::Fixed(1)
        } else {
            KSpec::Fraction(1)
        });
        e.r = self.r.or(file.r).unwrap_or(e.r);
        e.noise = self.noise.or(file.noise).unwrap_or(e.noise);
        e.p = self.p.or(file.p).unwrap_or(e.p);
        e.trials = self.trials.or(file.trials).unwrap_or(e.trials);
        e.seed = self.seed.or(file.seed).unwrap_or(e.seed);
        if let Some(s) = self.scale.or(file.scale) {
            e.constants.constant_scale = s;
        }
        e.timing = self.timing || file.timing.unwrap_or(false);
        let jobs = self.jobs.or(file.jobs).unwrap_or(1);
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be at least 1".into()));
        }
        Ok(Resolved {
            experiment: e,
            jobs,
            out: self.out.clone().or(file.out),
            n_grid: file.n_grid,
            k_grid: file.k_grid,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "algorithm = \"rsorted1\"\nn = 100\nk = \"n/2\"\nr = 3\nseed = 5\n").unwrap();
        let flags = ExperimentFlags {
            config: Some(path),
            n: Some(50),
            ..Default::default()
        };
        let r = flags.resolve().unwrap();
        assert_eq!(r.experiment.algorithm, AlgorithmKind::Rsorted1);
        assert_eq!(r.experiment.n, 50);
        assert_eq!(r.experiment.k(), 25);
        assert_eq!(r.experiment.r, 3);
        assert_eq!(r.experiment.seed, 5);
    }

    #[test]
    fn unknown_file_fields_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.json");
        std::fs::write(&path, r#"{"algorithm": "rsorted1", "colour": 3}"#).unwrap();
        let flags = ExperimentFlags {
            config: Some(path),
            ..Default::default()
        };
        assert!(matches!(flags.resolve(), Err(CliError::Usage(_))));
    }
}
