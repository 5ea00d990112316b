//! Property suites behind `roundrank verify`.

use std::fmt;

use roundrank_core::experiment::{build, run_experiment};
use roundrank_core::harness::{audit_adaptiveness, BatchBuilder, RoundAlgorithm, Step};
use roundrank_core::model::{compare, items, ComparisonRequest, GroundTruth, ItemId, NoiseCoordinates, NoiseModel};
use roundrank_core::noiseless::{noiseless_sorted_topk, one_round_sorted_topk, r_round_sort, rsorted1, rsorted2};
use roundrank_core::noisy::{find_max, GroupTop1, OneRoundTopK, SmallKBranch, TwoRoundSortedTopK};
use roundrank_core::verify::{exhaustive_small_check, SmallCase, SmallFactory, TaskKind};
use roundrank_core::{AlgoConstants, AlgorithmKind, ExperimentConfig, KSpec, NoiseKind, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Exhaustive,
    Oracle,
    Adaptiveness,
    Budgets,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Exhaustive, Suite::Oracle, Suite::Adaptiveness, Suite::Budgets];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Exhaustive => "exhaustive",
            Suite::Oracle => "oracle",
            Suite::Adaptiveness => "adaptiveness",
            Suite::Budgets => "budgets",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| format!("unknown suite {s:?}, expected exhaustive, oracle, adaptiveness or budgets"))
    }
}

/// Outcome of one property.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}: {}", self.name, self.detail)
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<Vec<Check>> {
    match suite {
        Suite::Exhaustive => exhaustive(8, &[seed, seed + 1, seed + 2]),
        Suite::Oracle => oracle(1_000_000, seed),
        Suite::Adaptiveness => adaptiveness(seed),
        Suite::Budgets => budgets(seed),
    }
}

type Boxed = Box<dyn RoundAlgorithm>;

/// Noiseless algorithms checked exhaustively, with their task and round
/// limit.
pub fn exhaustive_targets() -> Vec<(String, TaskKind, u32, Box<SmallFactory<'static>>)> {
    let mut out: Vec<(String, TaskKind, u32, Box<SmallFactory<'static>>)> = Vec::new();
    out.push((
        "one_round_sorted_topk".into(),
        TaskKind::SortedTopK,
        1,
        Box::new(|c: &SmallCase| -> Result<Boxed> { Ok(Box::new(one_round_sorted_topk(c.n, c.k)?)) }),
    ));
    for r in [2, 3] {
        out.push((
            format!("rsorted1 r={r}"),
            TaskKind::SortedTopK,
            r,
            Box::new(move |c: &SmallCase| -> Result<Boxed> { Ok(Box::new(rsorted1(c.n, c.k, r, c.seed)?)) }),
        ));
    }
    out.push((
        "rsorted2 r=3".into(),
        TaskKind::SortedTopK,
        3,
        Box::new(|c: &SmallCase| -> Result<Boxed> { Ok(Box::new(rsorted2(c.n, c.k, 3, c.seed)?)) }),
    ));
    for r in 1..=4 {
        out.push((
            format!("noiseless_dispatch r={r}"),
            TaskKind::SortedTopK,
            r,
            Box::new(move |c: &SmallCase| -> Result<Boxed> { Ok(Box::new(noiseless_sorted_topk(c.n, c.k, r, c.seed)?)) }),
        ));
    }
    for r in 1..=3 {
        out.push((
            format!("r_round_sort r={r}"),
            TaskKind::Sort,
            r,
            Box::new(move |c: &SmallCase| -> Result<Boxed> {
                Ok(Box::new(r_round_sort(items(0..c.n as u32), r, c.seed)?))
            }),
        ));
    }
    out
}

pub fn exhaustive(n_max: usize, seeds: &[u64]) -> Result<Vec<Check>> {
    exhaustive_targets()
        .into_iter()
        .map(|(name, task, rounds, factory)| {
            let report = exhaustive_small_check(&*factory, task, rounds, n_max, seeds, 3)?;
            let mut detail = format!("{} cases, {} failures", report.cases, report.failed);
            if let Some(f) = report.failures.first() {
                detail.push_str(&format!("; first: {}", serde_json::to_string(f).unwrap_or_default()));
            }
            Ok(Check::new(name, report.passed(), detail))
        })
        .collect()
}

/// Fraction of correct outcomes for one pair over `draws` coordinates.
pub fn bernoulli_marginal(draws: u64, seed: u64) -> Result<f64> {
    let gt = GroundTruth::random(10, seed)?;
    let noise = NoiseModel::default();
    let req = ComparisonRequest::new(ItemId(3), ItemId(7))?;
    let truth = if gt.better(req.a, req.b) { req.a } else { req.b };
    let mut right = 0u64;
    for ordinal in 0..draws {
        let coords = NoiseCoordinates {
            run_seed: seed,
            round_index: 1,
            ordinal,
        };
        right += u64::from(compare(&gt, &noise, req, coords)?.winner == truth);
    }
    Ok(right as f64 / draws as f64)
}

pub fn oracle(draws: u64, seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let p = 2.0 / 3.0;
    let freq = bernoulli_marginal(draws, seed)?;
    let sd = (p * (1.0 - p) / draws as f64).sqrt();
    let dev = (freq - p).abs();
    checks.push(Check::new(
        "bernoulli marginal",
        dev <= 0.002 && dev <= 3.0 * sd,
        format!("{freq:.5} over {draws} draws, |dev| = {dev:.5}, 3 sd = {:.5}", 3.0 * sd),
    ));

    let gt = GroundTruth::random(40, seed)?;
    let noiseless = NoiseModel::noiseless();
    let mut wins = [0u32; 40];
    let mut ordinal = 0;
    for a in 0..40u32 {
        for b in a + 1..40 {
            let req = ComparisonRequest::new(ItemId(a), ItemId(b))?;
            let coords = NoiseCoordinates {
                run_seed: seed,
                round_index: 1,
                ordinal,
            };
            ordinal += 1;
            let w = compare(&gt, &noiseless, req, coords)?.winner;
            wins[w.index()] += 1;
        }
    }
    let mut by_wins = items(0..40);
    by_wins.sort_by_key(|x| std::cmp::Reverse(wins[x.index()]));
    checks.push(Check::new(
        "noiseless tournament is the rank order",
        by_wins == gt.sorted_items(),
        "40 items, all pairs",
    ));

    let noise = NoiseModel::default();
    let req = ComparisonRequest::new(ItemId(1), ItemId(2))?;
    let same = (0..1000).all(|o| {
        let c = NoiseCoordinates {
            run_seed: seed,
            round_index: 4,
            ordinal: o,
        };
        compare(&gt, &noise, req, c).ok() == compare(&gt, &noise, req, c).ok()
    });
    checks.push(Check::new("oracle determinism", same, "1000 repeated coordinates"));

    let mut counts = std::collections::HashMap::new();
    let seeds = 10_000u64;
    for s in 0..seeds {
        *counts.entry(GroundTruth::random(3, s)?.ranks().to_vec()).or_insert(0u64) += 1;
    }
    let worst = counts.values().map(|&c| (c as f64 / seeds as f64 - 1.0 / 6.0).abs()).fold(0.0, f64::max);
    checks.push(Check::new(
        "ground truth permutations uniform",
        counts.len() == 6 && worst <= 0.02,
        format!("{} permutations seen, worst deviation {worst:.4}", counts.len()),
    ));
    Ok(checks)
}

/// Builds its second request from the peeked outcome of its first.
pub struct PeekingDouble;

impl RoundAlgorithm for PeekingDouble {
    fn next_batch(&mut self, previous: Option<&[u32]>, batch: &mut BatchBuilder<'_>) -> Result<Step> {
        if previous.is_some() {
            return Ok(Step::Final(vec![ItemId(0)]));
        }
        let first = batch.push(ItemId(0), ItemId(1), 1);
        match batch.peek(first) {
            Some(1) => batch.push(ItemId(0), ItemId(2), 1),
            _ => batch.push(ItemId(1), ItemId(2), 1),
        };
        Ok(Step::Batch)
    }

    fn finalize_on_halt(&mut self) -> Vec<ItemId> {
        vec![ItemId(0)]
    }
}

/// Algorithms designed for the noiseless oracle.
pub fn noiseless_only(a: AlgorithmKind) -> bool {
    matches!(
        a,
        AlgorithmKind::OneRoundSortedTopk
            | AlgorithmKind::Rsorted1
            | AlgorithmKind::Rsorted2
            | AlgorithmKind::NoiselessDispatch
            | AlgorithmKind::RRoundSort
    )
}

fn small_config(algorithm: AlgorithmKind, n: usize, k: usize, r: u32) -> ExperimentConfig {
    ExperimentConfig {
        algorithm,
        n,
        k: KSpec::Fixed(k),
        r,
        noise: if noiseless_only(algorithm) { NoiseKind::Noiseless } else { NoiseKind::Bernoulli },
        constants: AlgoConstants::scaled(0.02),
        ..ExperimentConfig::default()
    }
}

/// One representative configuration per shipped algorithm.
pub fn audit_targets() -> Vec<(String, ExperimentConfig)> {
    let mut out = Vec::new();
    for a in AlgorithmKind::ALL {
        let (n, k, rs): (usize, usize, &[u32]) = match a {
            AlgorithmKind::FindMax => (40, 1, &[1]),
            AlgorithmKind::RRoundSort => (60, 60, &[1, 2, 3]),
            AlgorithmKind::Rsorted1 => (200, 20, &[2, 3]),
            AlgorithmKind::Rsorted2 => (300, 30, &[3, 4]),
            AlgorithmKind::NoiselessDispatch => (300, 30, &[1, 2, 3, 4]),
            AlgorithmKind::RepeatLift => (60, 6, &[2, 3]),
            AlgorithmKind::TwoRoundSortedTopkNoisy => (200, 4, &[2]),
            _ => (64, 6, &[1]),
        };
        for &r in rs {
            let label = if a.uses_r() { format!("{a} r={r}") } else { a.to_string() };
            out.push((label, small_config(a, n, k, r)));
        }
    }
    out
}

pub fn adaptiveness(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (label, cfg) in audit_targets() {
        let k = cfg.k();
        let factory = || -> Box<dyn RoundAlgorithm> { build(&cfg, k, seed).expect("valid audit config").0 };
        let report = audit_adaptiveness(&factory, cfg.n, cfg.algorithm.rounds(cfg.r), 12, seed)?;
        checks.push(Check::new(
            format!("audit {label}"),
            report.passed(),
            format!("{} probes, {} violations", report.probes, report.violations.len()),
        ));
    }
    let groups = |top1: GroupTop1| {
        move || -> Box<dyn RoundAlgorithm> {
            Box::new(
                TwoRoundSortedTopK::new(125, 2, AlgoConstants::scaled(0.05), seed, SmallKBranch::Groups, top1)
                    .expect("valid"),
            )
        }
    };
    for (label, top1) in [("one-round top-1", GroupTop1::OneRound), ("find_max", GroupTop1::FindMax)] {
        let report = audit_adaptiveness(&groups(top1), 125, 2, 8, seed)?;
        checks.push(Check::new(
            format!("audit two_round_sorted_topk_noisy groups with {label}"),
            report.passed(),
            format!("{} probes, {} violations", report.probes, report.violations.len()),
        ));
    }
    let double = || -> Box<dyn RoundAlgorithm> { Box::new(PeekingDouble) };
    let report = audit_adaptiveness(&double, 5, 1, 8, seed)?;
    checks.push(Check::new(
        "audit flags the peeking double",
        !report.passed(),
        format!("{} violations", report.violations.len()),
    ));

    for (label, cfg) in audit_targets() {
        // noise can end a lifted run early, which would hide its rounds
        let mut cfg = cfg;
        cfg.noise = NoiseKind::Noiseless;
        cfg.trials = 3;
        cfg.seed = seed;
        let limit = cfg.algorithm.rounds(cfg.r);
        let recs = run_experiment(&cfg, 1)?;
        let worst = recs.iter().map(|r| r.rounds_used).max().unwrap_or(0);
        checks.push(Check::new(
            format!("rounds {label}"),
            worst >= 1 && worst <= limit,
            format!("max rounds_used {worst}, limit {limit}"),
        ));
    }
    Ok(checks)
}

pub fn budgets(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut cfg = small_config(AlgorithmKind::TwoRoundTopk, 512, 256, 2);
    cfg.constants = AlgoConstants::default();
    cfg.trials = 10;
    cfg.seed = seed;
    let budget = cfg.constants.budget(cfg.n);
    let recs = run_experiment(&cfg, 1)?;
    let over = recs.iter().filter(|r| r.total_comparisons > budget).count();
    checks.push(Check::new(
        "two_round_topk within halting budget",
        over == 0,
        format!("{} runs at n = 512, {over} over {budget}", recs.len()),
    ));

    let c = AlgoConstants::default();
    for n in [256usize, 1024] {
        let planned = OneRoundTopK::planned_comparisons(n, &c);
        let bound = OneRoundTopK::static_bound(n, &c);
        checks.push(Check::new(
            format!("one_round_topk static bound n={n}"),
            (planned as f64) <= bound,
            format!("{planned} <= {bound:.0}"),
        ));
    }

    let gt = GroundTruth::random(64, seed)?;
    let mut fm = find_max(64, 1.0 / 9.0, c)?;
    let cfgh = roundrank_core::HarnessConfig::new(1, seed);
    let s = roundrank_core::execute(&mut fm, &gt, &NoiseModel::default(), &cfgh)?;
    let bound = 100.0 * 64.0 * 64.0 * 9f64.ln();
    checks.push(Check::new(
        "find_max comparison bound n=64",
        (s.total_comparisons as f64) <= bound,
        format!("{} <= {bound:.0}", s.total_comparisons),
    ));
    Ok(checks)
}
