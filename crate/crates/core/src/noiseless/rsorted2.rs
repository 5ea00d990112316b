use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{BatchBuilder, Lockstep, RoundAlgorithm, Step};
use crate::model::{items, ItemId, Padding};
use crate::tables::{CrossTable, PairTable};

use super::quantile::{ApproxPivotList, QuantileSketch};
use super::sort::chunk_sorters;
use super::{
    algo_rng, ceil_real, check_k, check_rounds, dedup, partition_by_pivots, rsorted1_alpha,
    PivotPartition,
};

/// What the run learned about its boundary item and pivots.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Rsorted2State {
    pub probes: Vec<ItemId>,
    pub s: Option<ItemId>,
    pub n_prime: Vec<ItemId>,
    pub tolerance: usize,
    pub fail: bool,
}

/// Careful-pivot sorted top-`k` in `r >= 3` rounds.
///
/// Round one compares everything to a random probe set and, alongside,
/// estimates pivots near ranks `i k / alpha^2`. Round two keeps the items
/// above a probe of rank in `[2n/alpha, 3n/alpha]` and compares them to
/// the pivots. Rounds three onward sort the chunks between pivots, or
/// compare all pairs if any check failed.
pub struct Rsorted2 {
    n: usize,
    k: usize,
    r: u32,
    alpha: usize,
    seed: u64,
    rng: ChaCha8Rng,
    forced_probes: Option<Vec<ItemId>>,
    state: Rsorted2State,
    phase: Phase,
}

enum Phase {
    Start,
    Probe {
        probes: CrossTable,
        sketch: QuantileSketch,
        split: usize,
    },
    Place {
        table: CrossTable,
        list: ApproxPivotList,
    },
    AllPairs(PairTable),
    Chunks(Lockstep, PivotPartition),
    Done,
}

pub fn rsorted2(n: usize, k: usize, r: u32, seed: u64) -> Result<Rsorted2> {
    check_k(n, k)?;
    check_rounds(r, 3)?;
    Ok(Rsorted2 {
        n,
        k,
        r,
        alpha: rsorted1_alpha(n, k, r),
        seed,
        rng: algo_rng(seed),
        forced_probes: None,
        state: Rsorted2State::default(),
        phase: Phase::Start,
    })
}

impl Rsorted2 {
    /// Replaces the random probe set.
    pub fn with_probes(mut self, probes: Vec<ItemId>) -> Self {
        self.forced_probes = Some(probes);
        self
    }

    pub fn alpha(&self) -> usize {
        self.alpha
    }

    pub fn state(&self) -> &Rsorted2State {
        &self.state
    }

    pub fn failed(&self) -> bool {
        self.state.fail
    }

    fn universe(&self) -> Vec<ItemId> {
        items(0..self.n as u32)
    }

    fn targets(&self, tolerance: usize) -> Vec<f64> {
        let a2 = (self.alpha * self.alpha) as f64;
        let k = self.k as f64;
        let n = self.n as f64;
        let mut t: Vec<f64> = (1..=self.alpha * self.alpha).map(|i| (i as f64 * k / a2).min(n)).collect();
        // the last pivot must land at or below rank k even at full deviation
        t.push((k + (k / a2).max(tolerance as f64)).min(n));
        t
    }

    fn fail_now(&mut self, batch: &mut BatchBuilder<'_>) -> Step {
        self.state.fail = true;
        let mut t = PairTable::new(&self.universe(), 1, Padding::none(self.n));
        t.emit(batch);
        self.phase = Phase::AllPairs(t);
        Step::Batch
    }

    fn start(&mut self, batch: &mut BatchBuilder<'_>) -> Result<Step> {
        let n = self.n;
        let ln_n = (n as f64).ln();
        let probes = match self.forced_probes.take() {
            Some(p) => dedup(p),
            None => {
                let size = ceil_real(self.alpha as f64 * ln_n).max(1);
                dedup((0..size).map(|_| ItemId(self.rng.random_range(0..n as u32))))
            }
        };
        let budget = (ceil_real(self.alpha as f64 * n as f64 * ln_n) as u64).max(n as u64);
        let t = ((budget as f64).sqrt().floor() as usize).clamp(1, n);
        let tolerance = QuantileSketch::tolerance_for(n, t);
        let mut sketch = QuantileSketch::new(n, self.targets(tolerance), budget, &mut self.rng)?;
        let mut table = CrossTable::new(&self.universe(), &probes, 1, Padding::none(n));
        let split = table.emit(batch);
        sketch.emit(batch);
        self.state.probes = probes;
        self.state.tolerance = tolerance;
        self.phase = Phase::Probe {
            probes: table,
            sketch,
            split,
        };
        Ok(Step::Batch)
    }

    fn place(
        &mut self,
        mut probes: CrossTable,
        mut sketch: QuantileSketch,
        split: usize,
        outcomes: &[u32],
        batch: &mut BatchBuilder<'_>,
    ) -> Result<Step> {
        if outcomes.len() < split {
            return Err(Error::OutcomeLength {
                expected: split,
                got: outcomes.len(),
            });
        }
        probes.absorb(&outcomes[..split])?;
        let list = sketch.absorb(&outcomes[split..])?;
        let all = self.universe();
        let (lo, hi) = (
            2.0 * self.n as f64 / self.alpha as f64,
            3.0 * self.n as f64 / self.alpha as f64,
        );
        let boundary = self
            .state
            .probes
            .iter()
            .map(|&s| (1 + all.iter().filter(|&&x| x != s && !probes.beats(s, x)).count(), s))
            .filter(|&(rank, _)| rank as f64 >= lo && rank as f64 <= hi)
            .min();
        let Some((_, s)) = boundary else {
            return Ok(self.fail_now(batch));
        };
        let n_prime: Vec<ItemId> = all
            .into_iter()
            .filter(|&x| x != s && !probes.beats(s, x))
            .collect();
        self.state.s = Some(s);
        self.state.n_prime = n_prime;
        let pivots = dedup(list.pivots.iter().copied());
        let inside: std::collections::HashSet<ItemId> =
            self.state.n_prime.iter().copied().collect();
        if !pivots.iter().all(|p| inside.contains(p)) {
            // a pivot below s is already out of tolerance
            return Ok(self.fail_now(batch));
        }
        let mut table = CrossTable::new(&self.state.n_prime, &pivots, 1, Padding::none(self.n));
        table.emit(batch);
        self.phase = Phase::Place { table, list };
        Ok(Step::Batch)
    }

    fn split_chunks(
        &mut self,
        mut table: CrossTable,
        list: ApproxPivotList,
        outcomes: &[u32],
        batch: &mut BatchBuilder<'_>,
    ) -> Result<Step> {
        table.absorb(outcomes)?;
        let n_prime = &self.state.n_prime;
        let rank_in = |p: ItemId| 1 + n_prime.iter().filter(|&&x| x != p && !table.beats(p, x)).count();
        let d = self.state.tolerance as f64;
        let off = list
            .pivots
            .iter()
            .zip(&list.targets)
            .any(|(&p, &tau)| (rank_in(p) as f64 - tau).abs() > d);
        let last = *list.pivots.last().expect("at least one target");
        if off || rank_in(last) < self.k {
            return Ok(self.fail_now(batch));
        }
        let part = partition_by_pivots(n_prime, &list.pivots, self.k, |p, x| table.beats(p, x))?;
        let mut group = chunk_sorters(&part.chunks[..part.l], self.r - 2, self.seed);
        if group.advance(None, batch)? {
            return Ok(Step::Final(self.finish(&part, group.into_outputs())));
        }
        self.phase = Phase::Chunks(group, part);
        Ok(Step::Batch)
    }

    fn finish(&self, part: &PivotPartition, sorted: Vec<Vec<ItemId>>) -> Vec<ItemId> {
        let mut out = part.prefix_order(&sorted);
        out.truncate(self.k);
        out
    }
}

impl RoundAlgorithm for Rsorted2 {
    fn next_batch(
        &mut self,
        previous: Option<&[u32]>,
        batch: &mut BatchBuilder<'_>,
    ) -> Result<Step> {
        let outcomes = previous.unwrap_or_default();
        match std::mem::replace(&mut self.phase, Phase::Done) {
            Phase::Start => self.start(batch),
            Phase::Probe {
                probes,
                sketch,
                split,
            } => self.place(probes, sketch, split, outcomes, batch),
            Phase::Place { table, list } => self.split_chunks(table, list, outcomes, batch),
            Phase::AllPairs(mut t) => {
                t.absorb(outcomes)?;
                let mut out = t.order_by_wins();
                out.truncate(self.k);
                Ok(Step::Final(out))
            }
            Phase::Chunks(mut group, part) => {
                if group.advance(previous, batch)? {
                    return Ok(Step::Final(self.finish(&part, group.into_outputs())));
                }
                self.phase = Phase::Chunks(group, part);
                Ok(Step::Batch)
            }
            Phase::Done => Err(Error::InvalidParameter("rsorted2 already finished".into())),
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

    fn run(alg: &mut Rsorted2, gt: &GroundTruth, r: u32) -> crate::RunStats {
        execute(alg, gt, &NoiseModel::noiseless(), &HarnessConfig::new(r, 0)).unwrap()
    }

    #[test]
    fn forced_fail_still_exact() {
        let (n, k) = (4096, 1000);
        let gt = GroundTruth::random(n, 2).unwrap();
        let a = rsorted2(n, k, 3, 1).unwrap();
        let hi = 3 * n / a.alpha();
        assert!(hi + 6 < n);
        let worst: Vec<ItemId> = gt.sorted_items()[hi + 1..hi + 6].to_vec();
        let mut a = a.with_probes(worst);
        let s = run(&mut a, &gt, 3);
        assert!(a.failed());
        assert!(a.state().s.is_none());
        assert_eq!(s.output, true_sorted_topk(&gt, k).unwrap());
    }

    #[test]
    fn exact_on_random_instances() {
        for seed in 0..20 {
            for (n, k, r) in [(1000, 40, 3), (4096, 256, 3), (300, 300, 3), (500, 5, 4), (7, 2, 3)] {
                let gt = GroundTruth::random(n, seed).unwrap();
                let mut a = rsorted2(n, k, r, seed * 7 + 1).unwrap();
                let s = run(&mut a, &gt, r);
                assert_eq!(s.output, true_sorted_topk(&gt, k).unwrap(), "{n} {k} {r} {seed}");
                assert!(s.rounds_used <= r);
            }
        }
    }

    #[test]
    fn boundary_item_in_range_when_not_failing() {
        let (n, k) = (4096, 256);
        let gt = GroundTruth::random(n, 11).unwrap();
        let mut a = rsorted2(n, k, 3, 5).unwrap();
        run(&mut a, &gt, 3);
        assert!(!a.failed());
        let s = a.state().s.unwrap();
        let rank = gt.rank(s) as f64;
        let alpha = a.alpha() as f64;
        assert!(rank >= 2.0 * n as f64 / alpha && rank <= 3.0 * n as f64 / alpha);
        assert!(a.state().n_prime.iter().all(|&x| gt.rank(x) < gt.rank(s)));
        assert_eq!(a.state().n_prime.len() as u32, gt.rank(s) - 1);
    }

    #[test]
    fn needs_three_rounds() {
        assert!(rsorted2(10, 3, 2, 0).is_err());
    }
}
