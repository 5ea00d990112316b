use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{BatchBuilder, RoundAlgorithm, Step};
use crate::model::{items, ItemId, Padding};
use crate::noiseless::{algo_rng, ceil_real};
use crate::tables::CrossTable;

use super::{level_ladder, sample_without_replacement, AlgoConstants, TrimLevel, TrimState};

/// One round of level-wise pivot comparisons followed by the trim cascade.
pub struct OneRoundTopK {
    items: Vec<ItemId>,
    k: usize,
    levels: Vec<f64>,
    consts: AlgoConstants,
    padding: Padding,
    rng: ChaCha8Rng,
    tables: Vec<(CrossTable, Vec<ItemId>, usize)>,
    trace: Option<OneRoundTrace>,
    started: bool,
}

/// Every level's decision and the final state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneRoundTrace {
    pub levels: Vec<TrimLevel>,
    pub end: TrimState,
}

pub fn one_round_topk(n: usize, k: usize, consts: AlgoConstants, seed: u64) -> Result<OneRoundTopK> {
    OneRoundTopK::new(items(0..n as u32), k, consts, Padding::none(n), seed)
}

impl OneRoundTopK {
    /// Top-`k` of `items`, which may include dummies of `padding`.
    pub fn new(
        items: Vec<ItemId>,
        k: usize,
        consts: AlgoConstants,
        padding: Padding,
        seed: u64,
    ) -> Result<Self> {
        consts.validate()?;
        if items.is_empty() {
            return Err(Error::InvalidUniverse);
        }
        if k == 0 || k > items.len() {
            return Err(Error::InvalidParameter(format!("k = {k} outside 1..={}", items.len())));
        }
        let levels = level_ladder(items.len()).working().to_vec();
        Ok(Self {
            items,
            k,
            levels,
            consts,
            padding,
            rng: algo_rng(seed),
            tables: Vec::new(),
            trace: None,
            started: false,
        })
    }

    /// Sample size of level `l`.
    fn sample_size(n: usize, l: f64) -> usize {
        ceil_real(n as f64 / (l * l)).clamp(1, n)
    }

    /// Comparisons of one run on `n` real items, which depend only on `n`.
    pub fn planned_comparisons(n: usize, consts: &AlgoConstants) -> u64 {
        level_ladder(n)
            .working()
            .iter()
            .map(|&l| {
                let s = Self::sample_size(n, l) as u64;
                let pairs = s * (n as u64 - 1) - s * (s - 1) / 2;
                consts.reps(consts.c * l) as u64 * pairs
            })
            .sum()
    }

    /// `c n^2 (1 + sum 1/l_i)`.
    pub fn static_bound(n: usize, consts: &AlgoConstants) -> f64 {
        let sum: f64 = level_ladder(n).working().iter().map(|l| 1.0 / l).sum();
        consts.c * consts.constant_scale * (n * n) as f64 * (1.0 + sum)
    }

    pub fn trace(&self) -> Option<&OneRoundTrace> {
        self.trace.as_ref()
    }

    fn emit(&mut self, batch: &mut BatchBuilder<'_>) {
        let n = self.items.len();
        for i in 0..self.levels.len() {
            let l = self.levels[i];
            let pivots = sample_without_replacement(&self.items, Self::sample_size(n, l), &mut self.rng);
            let reps = self.consts.reps(self.consts.c * l);
            let mut t = CrossTable::new(&self.items, &pivots, reps, self.padding);
            let count = t.emit(batch);
            self.tables.push((t, pivots, count));
        }
    }

    fn finish(&mut self, outcomes: &[u32]) -> Result<Vec<ItemId>> {
        let mut at = 0;
        for (t, _, count) in &mut self.tables {
            let end = at + *count;
            if outcomes.len() < end {
                return Err(Error::OutcomeLength {
                    expected: end,
                    got: outcomes.len(),
                });
            }
            t.absorb(&outcomes[at..end])?;
            at = end;
        }
        let mut state = TrimState::new(self.items.clone(), self.k);
        let mut levels = Vec::with_capacity(self.tables.len());
        for (t, pivots, _) in &self.tables {
            levels.push(state.step(pivots, |j, x| t.beats(j, x)));
        }
        let out = state.accepted.clone();
        self.trace = Some(OneRoundTrace { levels, end: state });
        self.tables.clear();
        Ok(out)
    }
}

impl RoundAlgorithm for OneRoundTopK {
    fn next_batch(
        &mut self,
        previous: Option<&[u32]>,
        batch: &mut BatchBuilder<'_>,
    ) -> Result<Step> {
        if !self.started {
            self.started = true;
            if self.items.len() == 1 {
                return Ok(Step::Final(self.items.clone()));
            }
            self.emit(batch);
            return Ok(Step::Batch);
        }
        Ok(Step::Final(self.finish(previous.unwrap_or_default())?))
    }

    fn finalize_on_halt(&mut self) -> Vec<ItemId> {
        self.items[..self.k].to_vec()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{execute, HarnessConfig};
    use crate::model::{GroundTruth, NoiseModel};

    fn run(n: usize, k: usize, noise: NoiseModel, seed: u64) -> (crate::RunStats, GroundTruth, OneRoundTopK) {
        let gt = GroundTruth::random(n, seed).unwrap();
        let mut a = one_round_topk(n, k, AlgoConstants::default(), seed + 1).unwrap();
        let s = execute(&mut a, &gt, &noise, &HarnessConfig::new(1, seed)).unwrap();
        (s, gt, a)
    }

    fn same_set(a: &[ItemId], b: &[ItemId]) -> bool {
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        a.sort();
        b.sort();
        a == b
    }

    #[test]
    fn duel_of_two() {
        let (s, gt, _) = run(2, 1, NoiseModel::default(), 3);
        assert_eq!(s.total_comparisons, 865);
        assert_eq!(s.output.len(), 1);
        let _ = gt;
    }

    #[test]
    fn count_matches_plan_and_static_bound() {
        let c = AlgoConstants::default();
        let (s, _, _) = run(256, 64, NoiseModel::noiseless(), 1);
        assert_eq!(s.total_comparisons, OneRoundTopK::planned_comparisons(256, &c));
        assert!((s.total_comparisons as f64) <= OneRoundTopK::static_bound(256, &c));
    }

    #[test]
    fn truthful_verdicts_give_exact_top_k() {
        for n in 1..=64usize {
            for k in 1..=n {
                let gt = GroundTruth::random(n, (n * 100 + k) as u64).unwrap();
                let mut a = one_round_topk(n, k, AlgoConstants::scaled(0.001), k as u64).unwrap();
                let s = execute(&mut a, &gt, &NoiseModel::noiseless(), &HarnessConfig::new(1, 0)).unwrap();
                let want = crate::model::true_sorted_topk(&gt, k).unwrap();
                assert!(same_set(&s.output, &want), "n={n} k={k}");
                let tr = a.trace();
                if let Some(tr) = tr {
                    let mut all: Vec<ItemId> = tr.end.accepted.clone();
                    all.extend(&tr.end.rejected);
                    all.extend(&tr.end.active);
                    all.sort();
                    assert_eq!(all, items(0..n as u32));
                    assert_eq!(tr.end.accepted.len() + tr.end.quota, k);
                }
            }
        }
    }

    #[test]
    fn usually_right_under_noise() {
        let ok = (0..40)
            .filter(|&seed| {
                let (s, gt, _) = run(64, 16, NoiseModel::default(), seed);
                same_set(&s.output, &crate::model::true_sorted_topk(&gt, 16).unwrap())
            })
            .count();
        assert!(ok >= 30, "{ok}");
    }
}
