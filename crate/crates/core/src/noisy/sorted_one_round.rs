use crate::error::{Error, Result};
use crate::harness::{BatchBuilder, Lockstep, RoundAlgorithm, Step};
use crate::model::{items, ItemId, Padding};
use crate::noise::derive_seed;
use crate::noiseless::check_k;
use crate::tables::PairTable;

use super::{plurality, AlgoConstants, FindMax, OneRoundTopK};

/// Sorted top-`k` in one round: three top-`k` copies pick the set, and an
/// all-pairs table orders it.
pub struct OneRoundSortedTopK {
    items: Vec<ItemId>,
    k: usize,
    copies: Lockstep,
    pairs: PairTable,
    split: usize,
    started: bool,
}

/// One-round noisy sorted top-`k`; `k = 1` uses [`FindMax`].
pub enum NoisySortedOneRound {
    Max(FindMax),
    Sorted(OneRoundSortedTopK),
}

pub fn one_round_sorted_topk_noisy(n: usize, k: usize, consts: AlgoConstants, seed: u64) -> Result<NoisySortedOneRound> {
    check_k(n, k)?;
    let all = items(0..n as u32);
    Ok(if k == 1 {
        NoisySortedOneRound::Max(FindMax::new(all, 1.0 / 9.0, consts, Padding::none(n))?)
    } else {
        NoisySortedOneRound::Sorted(OneRoundSortedTopK::new(all, k, consts, Padding::none(n), seed)?)
    })
}

impl OneRoundSortedTopK {
    pub fn new(items: Vec<ItemId>, k: usize, consts: AlgoConstants, padding: Padding, seed: u64) -> Result<Self> {
        check_k(items.len(), k)?;
        if k < 2 {
            return Err(Error::InvalidParameter("k = 1 goes to find_max".into()));
        }
        let copies = (0..3)
            .map(|c| {
                OneRoundTopK::new(items.clone(), k, consts, padding, derive_seed(seed, 8, c))
                    .map(|a| Box::new(a) as Box<dyn RoundAlgorithm>)
            })
            .collect::<Result<Vec<_>>>()?;
        let reps = consts.reps(100.0 * ((k as f64).ln() + 1.0));
        Ok(Self {
            pairs: PairTable::new(&items, reps, padding),
            items,
            k,
            copies: Lockstep::new(copies),
            split: 0,
            started: false,
        })
    }

    /// `3 * (one copy) + reps * C(n, 2)` on `n` real items.
    pub fn planned_comparisons(n: usize, k: usize, consts: &AlgoConstants) -> u64 {
        let reps = consts.reps(100.0 * ((k as f64).ln() + 1.0)) as u64;
        let n64 = n as u64;
        3 * OneRoundTopK::planned_comparisons(n, consts) + reps * (n64 * (n64 - 1) / 2)
    }

    fn finish(&mut self, outcomes: &[u32]) -> Result<Vec<ItemId>> {
        if outcomes.len() < self.split {
            return Err(Error::OutcomeLength {
                expected: self.split,
                got: outcomes.len(),
            });
        }
        let mut scratch = BatchBuilder::new();
        self.copies.advance(Some(&outcomes[..self.split]), &mut scratch)?;
        self.pairs.absorb(&outcomes[self.split..])?;
        let answers: Vec<Vec<ItemId>> = std::mem::replace(&mut self.copies, Lockstep::new(Vec::new()))
            .into_outputs()
            .into_iter()
            .map(|mut a| {
                a.sort();
                a
            })
            .collect();
        let set = plurality(&answers).unwrap_or_default();
        Ok(self.pairs.order_subset(&set))
    }
}

impl RoundAlgorithm for OneRoundSortedTopK {
    fn next_batch(
        &mut self,
        previous: Option<&[u32]>,
        batch: &mut BatchBuilder<'_>,
    ) -> Result<Step> {
        if !self.started {
            self.started = true;
            let base = batch.len();
            self.copies.advance(None, batch)?;
            self.split = batch.len() - base;
            self.pairs.emit(batch);
            return Ok(Step::Batch);
        }
        Ok(Step::Final(self.finish(previous.unwrap_or_default())?))
    }

    fn finalize_on_halt(&mut self) -> Vec<ItemId> {
        self.items[..self.k].to_vec()
    }
}

impl RoundAlgorithm for NoisySortedOneRound {
    fn next_batch(
        &mut self,
        previous: Option<&[u32]>,
        batch: &mut BatchBuilder<'_>,
    ) -> Result<Step> {
        match self {
            Self::Max(a) => a.next_batch(previous, batch),
            Self::Sorted(a) => a.next_batch(previous, batch),
        }
    }

    fn finalize_on_halt(&mut self) -> Vec<ItemId> {
        match self {
            Self::Max(a) => a.finalize_on_halt(),
            Self::Sorted(a) => a.finalize_on_halt(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{execute, HarnessConfig};
    use crate::model::{true_sorted_topk, GroundTruth, NoiseModel};

    #[test]
    fn closed_form_count() {
        let c = AlgoConstants::default();
        assert_eq!(c.reps(100.0 * (4f64.ln() + 1.0)), 239);
        let gt = GroundTruth::random(100, 3).unwrap();
        let mut a = one_round_sorted_topk_noisy(100, 4, c, 1).unwrap();
        let s = execute(&mut a, &gt, &NoiseModel::default(), &HarnessConfig::new(1, 2)).unwrap();
        assert_eq!(s.total_comparisons, OneRoundSortedTopK::planned_comparisons(100, 4, &c));
        assert_eq!(
            s.total_comparisons - 3 * OneRoundTopK::planned_comparisons(100, &c),
            1_183_050
        );
    }

    #[test]
    fn k_one_is_find_max() {
        let a = one_round_sorted_topk_noisy(10, 1, AlgoConstants::default(), 0).unwrap();
        assert!(matches!(a, NoisySortedOneRound::Max(_)));
    }

    #[test]
    fn truthful_verdicts_sort_exactly() {
        for n in 2..=30usize {
            for k in 2..=n {
                let gt = GroundTruth::random(n, (n * 31 + k) as u64).unwrap();
                let mut a = one_round_sorted_topk_noisy(n, k, AlgoConstants::scaled(0.001), 5).unwrap();
                let s = execute(&mut a, &gt, &NoiseModel::noiseless(), &HarnessConfig::new(1, 0)).unwrap();
                assert_eq!(s.output, true_sorted_topk(&gt, k).unwrap(), "n={n} k={k}");
            }
        }
    }
}
