use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::harness::{BatchBuilder, Lockstep, RoundAlgorithm, Step};
use crate::model::{items, ItemId, Padding};
use crate::tables::CrossTable;

use super::sort::chunk_sorters;
use super::{algo_rng, ceil_real, check_k, check_rounds, dedup, partition_by_pivots, PivotPartition};

/// `ceil(k^((r-1)/r) * n^((2-r)/r))`, at least 1 and at most `n`.
pub fn rsorted1_alpha(n: usize, k: usize, r: u32) -> usize {
    let r = r as f64;
    let a = (k as f64).powf((r - 1.0) / r) * (n as f64).powf((2.0 - r) / r);
    ceil_real(a).clamp(1, n)
}

/// Random pivots in round one, then the chunks holding the top `k` are
/// sorted in the remaining `r - 1` rounds.
pub struct Rsorted1 {
    n: usize,
    k: usize,
    r: u32,
    alpha: usize,
    seed: u64,
    rng: ChaCha8Rng,
    phase: Phase,
    round_one: u64,
}

enum Phase {
    Start,
    Pivots(CrossTable, Vec<ItemId>),
    Chunks(Lockstep, PivotPartition),
    Done,
}

pub fn rsorted1(n: usize, k: usize, r: u32, seed: u64) -> Result<Rsorted1> {
    check_k(n, k)?;
    check_rounds(r, 2)?;
    Ok(Rsorted1 {
        n,
        k,
        r,
        alpha: rsorted1_alpha(n, k, r),
        seed,
        rng: algo_rng(seed),
        phase: Phase::Start,
        round_one: 0,
    })
}

impl Rsorted1 {
    pub fn alpha(&self) -> usize {
        self.alpha
    }

    /// Requests issued in round one.
    pub fn round_one_requests(&self) -> u64 {
        self.round_one
    }

    fn finish(&self, part: &PivotPartition, sorted: Vec<Vec<ItemId>>) -> Vec<ItemId> {
        let mut out = part.prefix_order(&sorted);
        out.truncate(self.k);
        out
    }
}

impl RoundAlgorithm for Rsorted1 {
    fn next_batch(
        &mut self,
        previous: Option<&[u32]>,
        batch: &mut BatchBuilder<'_>,
    ) -> Result<Step> {
        match std::mem::replace(&mut self.phase, Phase::Done) {
            Phase::Start => {
                let n = self.n;
                // drawn with repetition, compared once
                let draws: Vec<ItemId> = (0..self.alpha)
                    .map(|_| ItemId(self.rng.random_range(0..n as u32)))
                    .collect();
                let pivots = dedup(draws);
                let mut t = CrossTable::new(&items(0..n as u32), &pivots, 1, Padding::none(n));
                self.round_one = t.emit(batch) as u64;
                self.phase = Phase::Pivots(t, pivots);
                Ok(Step::Batch)
            }
            Phase::Pivots(mut t, pivots) => {
                t.absorb(previous.unwrap_or_default())?;
                let part = partition_by_pivots(&items(0..self.n as u32), &pivots, self.k, |p, x| {
                    t.beats(p, x)
                })?;
                let mut group = chunk_sorters(&part.chunks[..part.l], self.r - 1, self.seed);
                if group.advance(None, batch)? {
                    return Ok(Step::Final(self.finish(&part, group.into_outputs())));
                }
                self.phase = Phase::Chunks(group, part);
                Ok(Step::Batch)
            }
            Phase::Chunks(mut group, part) => {
                if group.advance(previous, batch)? {
                    return Ok(Step::Final(self.finish(&part, group.into_outputs())));
                }
                self.phase = Phase::Chunks(group, part);
                Ok(Step::Batch)
            }
            Phase::Done => Err(Error::InvalidParameter("rsorted1 already finished".into())),
        }
    }

    fn finalize_on_halt(&mut self) -> Vec<ItemId> {
        items(0..self.k as u32)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{execute, HarnessConfig};
    use crate::model::{true_sorted_topk, GroundTruth, NoiseModel};

    #[test]
    fn alpha_at_full_k() {
        assert_eq!(rsorted1_alpha(4096, 4096, 2), 64);
        assert_eq!(rsorted1_alpha(4096, 4096, 3), 16);
        assert_eq!(rsorted1_alpha(10, 1, 5), 1);
    }

    #[test]
    fn round_one_size_at_4096() {
        let n = 4096;
        let gt = GroundTruth::random(n, 8).unwrap();
        let mut a = rsorted1(n, n, 2, 3).unwrap();
        let s = execute(&mut a, &gt, &NoiseModel::noiseless(), &HarnessConfig::new(2, 0)).unwrap();
        assert_eq!(s.output, gt.sorted_items());
        // deduplicated pivots m: m(n-1) - C(m,2) <= alpha * n
        let m = {
            let r1 = s.comparisons_per_round[0];
            (1..=64u64).find(|&m| m * (n as u64 - 1) - m * (m - 1) / 2 == r1)
        };
        assert!(m.is_some(), "{:?}", s.comparisons_per_round);
        assert!(s.comparisons_per_round[0] <= 64 * 4096);
        assert_eq!(a.round_one_requests(), s.comparisons_per_round[0]);
    }

    #[test]
    fn exact_on_random_instances() {
        for seed in 0..40 {
            for (n, k, r) in [(50, 7, 2), (200, 200, 2), (300, 30, 3), (64, 1, 4), (9, 9, 3)] {
                let gt = GroundTruth::random(n, seed).unwrap();
                let mut a = rsorted1(n, k, r, seed + 100).unwrap();
                let s = execute(&mut a, &gt, &NoiseModel::noiseless(), &HarnessConfig::new(r, 0))
                    .unwrap();
                assert_eq!(s.output, true_sorted_topk(&gt, k).unwrap());
            }
        }
    }

    #[test]
    fn needs_two_rounds() {
        assert!(rsorted1(10, 3, 1, 0).is_err());
    }
}
