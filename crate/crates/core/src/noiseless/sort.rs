use rand::seq::IndexedRandom;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::harness::{BatchBuilder, Lockstep, RoundAlgorithm, Step};
use crate::model::{ItemId, Padding};
use crate::noise::derive_seed;
use crate::tables::{CrossTable, PairTable};

use super::{algo_rng, ceil_real, check_rounds, partition_by_pivots, PivotPartition};

/// Sets at or below this size are sorted by comparing all pairs.
const SMALL: usize = 4;

/// Randomized recursive pivot sort in at most `r` rounds.
///
/// With `r > 1` the first round compares every item against
/// `ceil(n^(1/r))` random pivots; the chunks between pivots are then
/// sorted in parallel with `r - 1` rounds each.
pub struct RRoundSort {
    items: Vec<ItemId>,
    rounds: u32,
    rng: ChaCha8Rng,
    seed: u64,
    phase: Phase,
}

enum Phase {
    Start,
    AllPairs(PairTable),
    Pivots(CrossTable, Vec<ItemId>),
    Chunks(Lockstep, PivotPartition),
    Done,
}

pub fn r_round_sort(items: Vec<ItemId>, r: u32, seed: u64) -> Result<RRoundSort> {
    check_rounds(r, 1)?;
    Ok(RRoundSort::new(items, r, seed))
}

impl RRoundSort {
    pub fn new(items: Vec<ItemId>, rounds: u32, seed: u64) -> Self {
        Self {
            items,
            rounds: rounds.max(1),
            rng: algo_rng(seed),
            seed,
            phase: Phase::Start,
        }
    }

    fn start(&mut self, batch: &mut BatchBuilder<'_>) -> Step {
        let n = self.items.len();
        if n <= 1 {
            self.phase = Phase::Done;
            return Step::Final(self.items.clone());
        }
        if self.rounds == 1 || n <= SMALL {
            let mut t = PairTable::new(&self.items, 1, Padding::unbounded());
            t.emit(batch);
            self.phase = Phase::AllPairs(t);
            return Step::Batch;
        }
        let m = ceil_real((n as f64).powf(1.0 / self.rounds as f64)).clamp(1, n);
        let pivots: Vec<ItemId> = self.items.choose_multiple(&mut self.rng, m).copied().collect();
        let mut t = CrossTable::new(&self.items, &pivots, 1, Padding::unbounded());
        t.emit(batch);
        self.phase = Phase::Pivots(t, pivots);
        Step::Batch
    }
}

/// Sorts every chunk of `partition` with `rounds` rounds, in lockstep.
pub(crate) fn chunk_sorters(chunks: &[Vec<ItemId>], rounds: u32, seed: u64) -> Lockstep {
    let children: Vec<Box<dyn RoundAlgorithm>> = chunks
        .iter()
        .enumerate()
        .map(|(i, c)| {
            Box::new(RRoundSort::new(c.clone(), rounds, derive_seed(seed, 0x50e7, i as u64)))
                as Box<dyn RoundAlgorithm>
        })
        .collect();
    Lockstep::new(children)
}

impl RoundAlgorithm for RRoundSort {
    fn next_batch(
        &mut self,
        previous: Option<&[u32]>,
        batch: &mut BatchBuilder<'_>,
    ) -> Result<Step> {
        match std::mem::replace(&mut self.phase, Phase::Done) {
            Phase::Start => Ok(self.start(batch)),
            Phase::AllPairs(mut t) => {
                t.absorb(previous.unwrap_or_default())?;
                Ok(Step::Final(t.order_by_wins()))
            }
            Phase::Pivots(mut t, pivots) => {
                t.absorb(previous.unwrap_or_default())?;
                let part = partition_by_pivots(&self.items, &pivots, self.items.len(), |p, x| {
                    t.beats(p, x)
                })?;
                let mut group = chunk_sorters(&part.chunks, self.rounds - 1, self.seed);
                if group.advance(None, batch)? {
                    let out = part.prefix_order(&group.into_outputs());
                    return Ok(Step::Final(out));
                }
                self.phase = Phase::Chunks(group, part);
                Ok(Step::Batch)
            }
            Phase::Chunks(mut group, part) => {
                if group.advance(previous, batch)? {
                    return Ok(Step::Final(part.prefix_order(&group.into_outputs())));
                }
                self.phase = Phase::Chunks(group, part);
                Ok(Step::Batch)
            }
            Phase::Done => Err(Error::InvalidParameter("sort already finished".into())),
        }
    }

    fn finalize_on_halt(&mut self) -> Vec<ItemId> {
        self.items.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{execute, HarnessConfig};
    use crate::model::{items, GroundTruth, NoiseModel};

    fn run(n: usize, r: u32, seed: u64) -> crate::RunStats {
        let gt = GroundTruth::random(n, seed).unwrap();
        let mut a = r_round_sort(items(0..n as u32), r, seed ^ 9).unwrap();
        let s = execute(&mut a, &gt, &NoiseModel::noiseless(), &HarnessConfig::new(r, 0)).unwrap();
        assert_eq!(s.output, gt.sorted_items(), "n={n} r={r} seed={seed}");
        s
    }

    #[test]
    fn one_round_is_all_pairs() {
        assert_eq!(run(6, 1, 2).total_comparisons, 15);
    }

    #[test]
    fn singleton_is_free() {
        assert_eq!(run(1, 3, 2).total_comparisons, 0);
    }

    #[test]
    fn sorts_exactly_within_round_limit() {
        for seed in 0..30 {
            for r in 1..=4 {
                for n in [2, 5, 17, 100, 333] {
                    let s = run(n, r, seed);
                    assert!(s.rounds_used <= r);
                }
            }
        }
    }

    #[test]
    fn two_rounds_cheaper_than_all_pairs() {
        let s = run(2000, 2, 1);
        assert!(s.total_comparisons < 2000 * 1999 / 2 / 10);
    }
}
