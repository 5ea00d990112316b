//! Seeded multi-trial experiments and their per-trial records.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{execute, HarnessConfig, RoundAlgorithm};
use crate::model::{GroundTruth, NoiseKind, NoiseModel};
use crate::noise::derive_seed;
use crate::noiseless::{noiseless_sorted_topk, one_round_sorted_topk, r_round_sort, rsorted1, rsorted2};
use crate::noisy::{
    find_max, lift_reps, one_round_sorted_topk_noisy, one_round_topk, repeat_lift, two_round_sorted_topk_noisy,
    two_round_topk, AlgoConstants,
};
use crate::verify::{is_correct, SuccessRate, TaskKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlgorithmKind {
    OneRoundSortedTopk,
    Rsorted1,
    Rsorted2,
    NoiselessDispatch,
    RRoundSort,
    FindMax,
    OneRoundTopk,
    TwoRoundTopk,
    OneRoundSortedTopkNoisy,
    TwoRoundSortedTopkNoisy,
    RepeatLift,
}

impl AlgorithmKind {
    pub const ALL: [AlgorithmKind; 11] = [
        Self::OneRoundSortedTopk,
        Self::Rsorted1,
        Self::Rsorted2,
        Self::NoiselessDispatch,
        Self::RRoundSort,
        Self::FindMax,
        Self::OneRoundTopk,
        Self::TwoRoundTopk,
        Self::OneRoundSortedTopkNoisy,
        Self::TwoRoundSortedTopkNoisy,
        Self::RepeatLift,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::OneRoundSortedTopk => "one_round_sorted_topk",
            Self::Rsorted1 => "rsorted1",
            Self::Rsorted2 => "rsorted2",
            Self::NoiselessDispatch => "noiseless_dispatch",
            Self::RRoundSort => "r_round_sort",
            Self::FindMax => "find_max",
            Self::OneRoundTopk => "one_round_topk",
            Self::TwoRoundTopk => "two_round_topk",
            Self::OneRoundSortedTopkNoisy => "one_round_sorted_topk_noisy",
            Self::TwoRoundSortedTopkNoisy => "two_round_sorted_topk_noisy",
            Self::RepeatLift => "repeat_lift",
        }
    }

    pub fn task(self) -> TaskKind {
        match self {
            Self::RRoundSort => TaskKind::Sort,
            Self::FindMax | Self::OneRoundTopk | Self::TwoRoundTopk => TaskKind::TopK,
            _ => TaskKind::SortedTopK,
        }
    }

    /// Rounds the algorithm may use for round parameter `r`.
    pub fn rounds(self, r: u32) -> u32 {
        match self {
            Self::OneRoundSortedTopk | Self::FindMax | Self::OneRoundTopk | Self::OneRoundSortedTopkNoisy => 1,
            Self::TwoRoundTopk | Self::TwoRoundSortedTopkNoisy => 2,
            _ => r,
        }
    }

    /// Whether `r` is read at all.
    pub fn uses_r(self) -> bool {
        matches!(self, Self::Rsorted1 | Self::Rsorted2 | Self::NoiselessDispatch | Self::RRoundSort | Self::RepeatLift)
    }
}

impl fmt::Display for AlgorithmKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AlgorithmKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown algorithm {s:?}")))
    }
}

/// `k` as a fixed count or as `n / d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "KRepr", into = "KRepr")]
pub enum KSpec {
    Fixed(usize),
    Fraction(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum KRepr {
    Int(usize),
    Text(String),
}

impl TryFrom<KRepr> for KSpec {
    type Error = Error;

    fn try_from(r: KRepr) -> Result<Self> {
        match r {
            KRepr::Int(k) => Ok(Self::Fixed(k)),
            KRepr::Text(s) => s.parse(),
        }
    }
}

impl From<KSpec> for KRepr {
    fn from(k: KSpec) -> Self {
        match k {
            KSpec::Fixed(k) => KRepr::Int(k),
            other => KRepr::Text(other.to_string()),
        }
    }
}

impl KSpec {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            Self::Fixed(k) => k,
            Self::Fraction(d) => (n / d).max(1),
        }
    }
}

impl fmt::Display for KSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Fixed(k) => write!(f, "{k}"),
            Self::Fraction(1) => f.write_str("n"),
            Self::Fraction(d) => write!(f, "n/{d}"),
        }
    }
}

impl FromStr for KSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("k must be an integer, \"n\" or \"n/<d>\", got {s:?}"));
        let s = s.trim();
        if s == "n" {
            return Ok(Self::Fraction(1));
        }
        if let Some(d) = s.strip_prefix("n/") {
            let d: usize = d.trim().parse().map_err(|_| bad())?;
            return if d == 0 { Err(bad()) } else { Ok(Self::Fraction(d)) };
        }
        s.parse().map(Self::Fixed).map_err(|_| bad())
    }
}

/// Everything needed to reproduce a batch of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub algorithm: AlgorithmKind,
    pub n: usize,
    pub k: KSpec,
    pub r: u32,
    pub noise: NoiseKind,
    pub p: f64,
    pub trials: u64,
    pub seed: u64,
    pub constants: AlgoConstants,
    /// Record wall-clock time per trial.
    pub timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            algorithm: AlgorithmKind::OneRoundSortedTopk,
            n: 64,
            k: KSpec::Fixed(1),
            r: 2,
            noise: NoiseKind::Noiseless,
            p: NoiseModel::DEFAULT_P,
            trials: 1,
            seed: 0,
            constants: AlgoConstants::default(),
            timing: false,
        }
    }
}

impl ExperimentConfig {
    pub fn k(&self) -> usize {
        self.k.resolve(self.n)
    }

    pub fn noise_model(&self) -> Result<NoiseModel> {
        match self.noise {
            NoiseKind::Noiseless => Ok(NoiseModel::noiseless()),
            NoiseKind::Bernoulli => NoiseModel::bernoulli(self.p),
        }
    }

    /// Checks every parameter by building one instance.
    pub fn validate(&self) -> Result<()> {
        self.noise_model()?;
        self.constants.validate()?;
        if self.algorithm.uses_r() && self.r == 0 {
            return Err(Error::InvalidParameter("r must be at least 1".into()));
        }
        build(self, self.k(), 0).map(|_| ())
    }

    /// Noise probability as recorded: 1 for the noiseless oracle.
    pub fn recorded_p(&self) -> f64 {
        match self.noise {
            NoiseKind::Noiseless => 1.0,
            NoiseKind::Bernoulli => self.p,
        }
    }
}

/// Builds the configured algorithm and its halting budget, if any.
pub fn build(cfg: &ExperimentConfig, k: usize, seed: u64) -> Result<(Box<dyn RoundAlgorithm>, Option<u64>)> {
    let (n, r, c) = (cfg.n, cfg.r, cfg.constants);
    Ok(match cfg.algorithm {
        AlgorithmKind::OneRoundSortedTopk => (Box::new(one_round_sorted_topk(n, k)?), None),
        AlgorithmKind::Rsorted1 => (Box::new(rsorted1(n, k, r, seed)?), None),
        AlgorithmKind::Rsorted2 => (Box::new(rsorted2(n, k, r, seed)?), None),
        AlgorithmKind::NoiselessDispatch => (Box::new(noiseless_sorted_topk(n, k, r, seed)?), None),
        AlgorithmKind::RRoundSort => (Box::new(r_round_sort(crate::model::items(0..n as u32), r, seed)?), None),
        AlgorithmKind::FindMax => {
            if k != 1 {
                return Err(Error::InvalidParameter(format!("find_max needs k = 1, got {k}")));
            }
            (Box::new(find_max(n, 1.0 / 9.0, c)?), None)
        }
        AlgorithmKind::OneRoundTopk => (Box::new(one_round_topk(n, k, c, seed)?), None),
        AlgorithmKind::TwoRoundTopk => {
            let a = two_round_topk(n, k, c, seed)?;
            let budget = a.budget();
            (Box::new(a), Some(budget))
        }
        AlgorithmKind::OneRoundSortedTopkNoisy => (Box::new(one_round_sorted_topk_noisy(n, k, c, seed)?), None),
        AlgorithmKind::TwoRoundSortedTopkNoisy => (Box::new(two_round_sorted_topk_noisy(n, k, c, seed)?), None),
        AlgorithmKind::RepeatLift => {
            let reps = lift_reps(n, c.constant_scale);
            (Box::new(repeat_lift(noiseless_sorted_topk(n, k, r, seed)?, reps)?), None)
        }
    })
}

/// One line of a result stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultRecord {
    pub algorithm: AlgorithmKind,
    pub n: usize,
    pub k: usize,
    pub r: u32,
    pub p: f64,
    pub seed: u64,
    pub rounds_used: u32,
    pub comparisons_per_round: Vec<u64>,
    pub total_comparisons: u64,
    pub halted: bool,
    pub correct: bool,
    pub wall_ms: Option<f64>,
}

/// Seed of trial `index`; every random choice of the trial derives from it.
pub fn trial_seed(base: u64, index: u64) -> u64 {
    derive_seed(base, 0x0074_7269_616c, index)
}

/// Runs trial `index` of `cfg`.
pub fn run_trial(cfg: &ExperimentConfig, index: u64) -> Result<ResultRecord> {
    let seed = trial_seed(cfg.seed, index);
    let k = cfg.k();
    let gt = GroundTruth::random(cfg.n, derive_seed(seed, 1, 0))?;
    let noise = cfg.noise_model()?;
    let start = Instant::now();
    let (mut alg, budget) = build(cfg, k, derive_seed(seed, 2, 0))?;
    let mut hcfg = HarnessConfig::new(cfg.algorithm.rounds(cfg.r), derive_seed(seed, 3, 0));
    if let Some(b) = budget {
        hcfg = hcfg.with_budget(b);
    }
    let (stats, correct) = match execute(&mut alg, &gt, &noise, &hcfg) {
        Ok(s) => {
            let ok = is_correct(cfg.algorithm.task(), &gt, k, &s.output);
            (Some(s), ok)
        }
        // noise can make verdicts inconsistent; the trial simply fails
        Err(Error::PartitionInconsistency(_)) if noise.kind == NoiseKind::Bernoulli => (None, false),
        Err(e) => return Err(e),
    };
    let wall_ms = cfg.timing.then(|| start.elapsed().as_secs_f64() * 1e3);
    let stats = stats.unwrap_or_else(|| crate::harness::RunStats {
        comparisons_per_round: Vec::new(),
        total_comparisons: 0,
        rounds_used: 0,
        halted: false,
        output: Vec::new(),
        correct: Some(false),
    });
    Ok(ResultRecord {
        algorithm: cfg.algorithm,
        n: cfg.n,
        k,
        r: cfg.algorithm.rounds(cfg.r),
        p: cfg.recorded_p(),
        seed,
        rounds_used: stats.rounds_used,
        comparisons_per_round: stats.comparisons_per_round,
        total_comparisons: stats.total_comparisons,
        halted: stats.halted,
        correct,
        wall_ms,
    })
}

/// Runs every trial on `jobs` worker threads; records come back in trial
/// order whatever the thread count.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: usize) -> Result<Vec<ResultRecord>> {
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| (0..cfg.trials).into_par_iter().map(|i| run_trial(cfg, i)).collect())
}

/// Aggregates computed from records alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub success: SuccessRate,
    pub mean_comparisons: f64,
    pub max_comparisons: u64,
    pub halted: u64,
}

impl Summary {
    pub fn from_records(records: &[ResultRecord]) -> Self {
        let total: u64 = records.iter().map(|r| r.total_comparisons).sum();
        Self {
            success: SuccessRate::from_flags(records.iter().map(|r| r.correct)),
            mean_comparisons: if records.is_empty() { 0.0 } else { total as f64 / records.len() as f64 },
            max_comparisons: records.iter().map(|r| r.total_comparisons).max().unwrap_or(0),
            halted: records.iter().filter(|r| r.halted).count() as u64,
        }
    }
}
