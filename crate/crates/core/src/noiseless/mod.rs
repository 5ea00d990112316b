//! Algorithms for an always-correct comparison oracle.

mod all_pairs;
mod dispatch;
mod partition;
mod quantile;
mod rsorted1;
mod rsorted2;
mod sort;

pub use all_pairs::{one_round_sorted_topk, AllPairsSort};
pub use dispatch::{noiseless_sorted_topk, thresholds as dispatch_thresholds, DispatchChoice, NoiselessDispatch};
pub use partition::{partition_by_pivots, PivotPartition};
pub use quantile::{approx_quantile_pivots, ApproxPivotList, ApproxQuantilePivots, QuantileSketch};
pub use rsorted1::{rsorted1, rsorted1_alpha, Rsorted1};
pub use rsorted2::{rsorted2, Rsorted2, Rsorted2State};
pub use sort::{r_round_sort, RRoundSort};

use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::harness::{BatchBuilder, RoundAlgorithm, Step};
use crate::model::ItemId;

pub(crate) fn algo_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Ceiling that ignores floating-point dust just above an integer.
pub fn ceil_real(x: f64) -> usize {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r.max(0.0) as usize
    } else {
        x.ceil().max(0.0) as usize
    }
}

/// First occurrence of each item, in order.
pub(crate) fn dedup(items: impl IntoIterator<Item = ItemId>) -> Vec<ItemId> {
    let mut seen = HashSet::new();
    items.into_iter().filter(|i| seen.insert(*i)).collect()
}

pub(crate) fn check_k(n: usize, k: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidUniverse);
    }
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k = {k} outside 1..={n}")));
    }
    Ok(())
}

pub(crate) fn check_rounds(r: u32, min: u32) -> Result<()> {
    if r < min {
        return Err(Error::InvalidParameter(format!("r = {r}, need at least {min}")));
    }
    Ok(())
}

/// Runs `inner` and keeps the first `k` items of its answer.
pub struct TopOf<A> {
    inner: A,
    k: usize,
}

impl<A: RoundAlgorithm> TopOf<A> {
    pub fn new(inner: A, k: usize) -> Self {
        Self { inner, k }
    }

    pub fn inner(&self) -> &A {
        &self.inner
    }
}

impl<A: RoundAlgorithm> RoundAlgorithm for TopOf<A> {
    fn next_batch(
        &mut self,
        previous: Option<&[u32]>,
        batch: &mut BatchBuilder<'_>,
    ) -> Result<Step> {
        Ok(match self.inner.next_batch(previous, batch)? {
            Step::Final(mut out) => {
                out.truncate(self.k);
                Step::Final(out)
            }
            Step::Batch => Step::Batch,
        })
    }

    fn finalize_on_halt(&mut self) -> Vec<ItemId> {
        let mut out = self.inner.finalize_on_halt();
        out.truncate(self.k);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ceil_real_absorbs_dust() {
        assert_eq!(ceil_real(4096f64.powf(0.5)), 64);
        assert_eq!(ceil_real(64f64.powf(1.0 / 3.0)), 4);
        assert_eq!(ceil_real(4.2), 5);
        assert_eq!(ceil_real(0.0), 0);
    }
}
