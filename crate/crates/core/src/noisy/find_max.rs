use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::harness::{BatchBuilder, RoundAlgorithm, Step};
use crate::model::{items, ItemId, Padding};
use crate::tables::a_wins_majority;

use super::AlgoConstants;

/// Recursive halving tournament, all levels in one round.
///
/// The set is padded to a power of two with empty slots that lose every
/// comparison.
pub struct FindMax {
    slots: Vec<Option<ItemId>>,
    delta: f64,
    consts: AlgoConstants,
    padding: Padding,
    index: HashMap<(usize, ItemId, ItemId), usize>,
    started: bool,
}

pub fn find_max(n: usize, delta: f64, consts: AlgoConstants) -> Result<FindMax> {
    FindMax::new(items(0..n as u32), delta, consts, Padding::none(n))
}

impl FindMax {
    pub fn new(items: Vec<ItemId>, delta: f64, consts: AlgoConstants, padding: Padding) -> Result<Self> {
        consts.validate()?;
        if items.is_empty() {
            return Err(Error::InvalidUniverse);
        }
        if !(delta > 0.0 && delta <= 1.0 / 9.0) {
            return Err(Error::InvalidParameter(format!("delta = {delta}, need 0 < delta <= 1/9")));
        }
        let size = items.len().next_power_of_two();
        let mut slots: Vec<Option<ItemId>> = items.into_iter().map(Some).collect();
        slots.resize(size, None);
        Ok(Self {
            slots,
            delta,
            consts,
            padding,
            index: HashMap::new(),
            started: false,
        })
    }

    /// Repetitions at recursion depth `d`.
    pub fn reps_at(&self, depth: u32) -> u32 {
        self.consts.reps(100.0 * (3f64.powi(depth as i32) / self.delta).ln())
    }

    fn known(&self, a: Option<ItemId>, b: Option<ItemId>) -> Option<Option<ItemId>> {
        match (a, b) {
            (None, _) => Some(b),
            (_, None) => Some(a),
            (Some(x), Some(y)) => self.padding.known_winner(x, y).map(Some),
        }
    }

    fn emit(&mut self, node: usize, lo: usize, hi: usize, depth: u32, base: usize, batch: &mut BatchBuilder<'_>) {
        if hi - lo < 2 {
            return;
        }
        let mid = (lo + hi) / 2;
        let reps = self.reps_at(depth);
        for i in lo..mid {
            for j in mid..hi {
                let (a, b) = (self.slots[i], self.slots[j]);
                if self.known(a, b).is_none() {
                    let (a, b) = (a.unwrap(), b.unwrap());
                    let at = batch.push(a, b, reps);
                    self.index.insert((node, a, b), at - base);
                }
            }
        }
        self.emit(2 * node, lo, mid, depth + 1, base, batch);
        self.emit(2 * node + 1, mid, hi, depth + 1, base, batch);
    }

    fn winner(&self, node: usize, lo: usize, hi: usize, depth: u32, outcomes: &[u32]) -> Result<Option<ItemId>> {
        if hi - lo < 2 {
            return Ok(self.slots[lo]);
        }
        let mid = (lo + hi) / 2;
        let a = self.winner(2 * node, lo, mid, depth + 1, outcomes)?;
        let b = self.winner(2 * node + 1, mid, hi, depth + 1, outcomes)?;
        if let Some(w) = self.known(a, b) {
            return Ok(w);
        }
        let (a, b) = (a.unwrap(), b.unwrap());
        let at = self.index[&(node, a, b)];
        let got = *outcomes.get(at).ok_or(Error::OutcomeLength {
            expected: at + 1,
            got: outcomes.len(),
        })?;
        Ok(Some(if a_wins_majority(got, self.reps_at(depth)) { a } else { b }))
    }
}

impl RoundAlgorithm for FindMax {
    fn next_batch(
        &mut self,
        previous: Option<&[u32]>,
        batch: &mut BatchBuilder<'_>,
    ) -> Result<Step> {
        if !self.started {
            self.started = true;
            let size = self.slots.len();
            let base = batch.len();
            self.emit(1, 0, size, 0, base, batch);
            if !self.index.is_empty() {
                return Ok(Step::Batch);
            }
        }
        let w = self.winner(1, 0, self.slots.len(), 0, previous.unwrap_or_default())?;
        Ok(Step::Final(w.into_iter().collect()))
    }

    fn finalize_on_halt(&mut self) -> Vec<ItemId> {
        self.slots[0].into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{execute, HarnessConfig};
    use crate::model::{GroundTruth, NoiseModel};

    fn run(n: usize, noise: NoiseModel, seed: u64) -> (crate::RunStats, GroundTruth) {
        let gt = GroundTruth::random(n, seed).unwrap();
        let mut a = find_max(n, 1.0 / 9.0, AlgoConstants::default()).unwrap();
        let s = execute(&mut a, &gt, &noise, &HarnessConfig::new(1, seed)).unwrap();
        (s, gt)
    }

    #[test]
    fn four_items_cost() {
        let a = find_max(4, 1.0 / 9.0, AlgoConstants::default()).unwrap();
        assert_eq!((a.reps_at(0), a.reps_at(1)), (221, 331));
        let (s, _) = run(4, NoiseModel::default(), 1);
        assert_eq!(s.total_comparisons, 1546);
        assert_eq!(s.rounds_used, 1);
    }

    #[test]
    fn single_item_is_free() {
        let (s, _) = run(1, NoiseModel::default(), 1);
        assert_eq!(s.total_comparisons, 0);
        assert_eq!(s.output, vec![ItemId(0)]);
    }

    #[test]
    fn rejects_large_delta() {
        assert!(find_max(4, 0.2, AlgoConstants::default()).is_err());
    }

    #[test]
    fn noiseless_exact_for_odd_sizes() {
        for n in 1..40 {
            let (s, gt) = run(n, NoiseModel::noiseless(), n as u64);
            assert_eq!(s.output, vec![gt.sorted_items()[0]]);
            let bound = 100.0 * (n.next_power_of_two().pow(2)) as f64 * 9f64.ln();
            assert!((s.total_comparisons as f64) <= bound);
        }
    }

    #[test]
    fn existing_dummies_lose() {
        let pad = Padding {
            real: 3,
            top: 0,
            bottom: 2,
        };
        let gt = GroundTruth::random(3, 5).unwrap();
        let mut a = FindMax::new(pad.all_items(), 1.0 / 9.0, AlgoConstants::default(), pad).unwrap();
        let s = execute(&mut a, &gt, &NoiseModel::noiseless(), &HarnessConfig::new(1, 0)).unwrap();
        assert_eq!(s.output, vec![gt.sorted_items()[0]]);
    }
}
