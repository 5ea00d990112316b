use crate::error::Result;
use crate::harness::{BatchBuilder, RoundAlgorithm, Step};
use crate::model::{items, ItemId, Padding};
use crate::tables::PairTable;

use super::check_k;

/// Compares every pair once and orders items by wins.
pub struct AllPairsSort {
    items: Vec<ItemId>,
    k: usize,
    table: Option<PairTable>,
}

impl AllPairsSort {
    /// Sorted top-`k` of an arbitrary item set.
    pub fn new(items: Vec<ItemId>, k: usize) -> Self {
        Self {
            items,
            k,
            table: None,
        }
    }
}

pub fn one_round_sorted_topk(n: usize, k: usize) -> Result<AllPairsSort> {
    check_k(n, k)?;
    Ok(AllPairsSort::new(items(0..n as u32), k))
}

impl RoundAlgorithm for AllPairsSort {
    fn next_batch(
        &mut self,
        previous: Option<&[u32]>,
        batch: &mut BatchBuilder<'_>,
    ) -> Result<Step> {
        if self.items.len() <= 1 {
            let mut out = self.items.clone();
            out.truncate(self.k);
            return Ok(Step::Final(out));
        }
        match (&mut self.table, previous) {
            (None, _) => {
                let mut t = PairTable::new(&self.items, 1, Padding::unbounded());
                t.emit(batch);
                self.table = Some(t);
                Ok(Step::Batch)
            }
            (Some(t), Some(outcomes)) => {
                t.absorb(outcomes)?;
                let mut out = t.order_by_wins();
                out.truncate(self.k);
                Ok(Step::Final(out))
            }
            (Some(_), None) => Err(crate::Error::OutcomeLength {
                expected: self.items.len() * (self.items.len() - 1) / 2,
                got: 0,
            }),
        }
    }

    fn finalize_on_halt(&mut self) -> Vec<ItemId> {
        let mut out = self.items.clone();
        out.truncate(self.k);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{execute, HarnessConfig};
    use crate::model::{true_sorted_topk, GroundTruth, NoiseModel};

    fn run(n: usize, k: usize, seed: u64) -> (crate::RunStats, GroundTruth) {
        let gt = GroundTruth::random(n, seed).unwrap();
        let mut a = one_round_sorted_topk(n, k).unwrap();
        let s = execute(&mut a, &gt, &NoiseModel::noiseless(), &HarnessConfig::new(1, 0)).unwrap();
        (s, gt)
    }

    #[test]
    fn five_items_ten_comparisons() {
        let (s, gt) = run(5, 3, 1);
        assert_eq!(s.total_comparisons, 10);
        assert_eq!(s.output, true_sorted_topk(&gt, 3).unwrap());
    }

    #[test]
    fn single_item() {
        let (s, _) = run(1, 1, 1);
        assert_eq!(s.total_comparisons, 0);
        assert_eq!(s.output, vec![ItemId(0)]);
    }

    #[test]
    fn hundred_items() {
        let (s, gt) = run(100, 100, 4);
        assert_eq!(s.comparisons_per_round, vec![4950]);
        assert_eq!(s.output, gt.sorted_items());
    }

    #[test]
    fn rejects_bad_k() {
        assert!(one_round_sorted_topk(4, 0).is_err());
        assert!(one_round_sorted_topk(4, 5).is_err());
    }
}
