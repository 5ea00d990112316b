use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::harness::{BatchBuilder, RoundAlgorithm, Step};
use crate::model::{ItemId, Padding};
use crate::noiseless::{algo_rng, ceil_real, check_k};
use crate::tables::{CrossTable, PairTable};

use super::{level_ladder, sample_without_replacement, AlgoConstants, PlacementState, TrimState};

/// Top-`k` in two rounds: pivot placement, then a trim cascade on a
/// window of chunks around the boundary.
pub struct TwoRoundTopK {
    n: usize,
    k: usize,
    consts: AlgoConstants,
    padding: Padding,
    universe: Vec<ItemId>,
    k_padded: usize,
    rng: ChaCha8Rng,
    phase: Phase,
    placement: Option<PlacementState>,
}

enum Phase {
    Start,
    Placing {
        cross: CrossTable,
        pivots: PairTable,
        split: usize,
    },
    Trimming {
        levels: Vec<(CrossTable, Vec<ItemId>)>,
        seed: Vec<ItemId>,
        active: Vec<ItemId>,
        quota: usize,
    },
    Done,
}

pub fn two_round_topk(n: usize, k: usize, consts: AlgoConstants, seed: u64) -> Result<TwoRoundTopK> {
    TwoRoundTopK::new(n, k, consts, seed)
}

impl TwoRoundTopK {
    pub fn new(n: usize, k: usize, consts: AlgoConstants, seed: u64) -> Result<Self> {
        check_k(n, k)?;
        consts.validate()?;
        let pad = Self::pad_size(n);
        let padding = if k.min(n - k) < pad {
            Padding {
                real: n as u32,
                top: pad as u32,
                bottom: pad as u32,
            }
        } else {
            Padding::none(n)
        };
        if padding.total() > u32::MAX as usize / 2 {
            return Err(Error::InvalidParameter(format!("n = {n} too large")));
        }
        Ok(Self {
            n,
            k,
            consts,
            universe: padding.all_items(),
            k_padded: k + padding.top as usize,
            padding,
            rng: algo_rng(seed),
            phase: Phase::Start,
            placement: None,
        })
    }

    /// Dummies added at each end when `k` or `n - k` is small.
    pub fn pad_size(n: usize) -> usize {
        let n = n as f64;
        ceil_real(40.0 * n.ln() * n.powf(2.0 / 3.0))
    }

    pub fn padding(&self) -> Padding {
        self.padding
    }

    /// Halting budget, from the unpadded `n`.
    pub fn budget(&self) -> u64 {
        self.consts.budget(self.n)
    }

    /// The first round's placement, once known.
    pub fn placement(&self) -> Option<&PlacementState> {
        self.placement.as_ref()
    }

    fn round_one(&mut self, batch: &mut BatchBuilder<'_>) {
        let total = self.universe.len();
        let m = ceil_real((total as f64).powf(1.0 / 3.0));
        let s = sample_without_replacement(&self.universe, m, &mut self.rng);
        let mut cross = CrossTable::new(&self.universe, &s, self.consts.reps(self.consts.c1), self.padding);
        let reps = self.consts.reps(100.0 * (total as f64).ln());
        let mut pivots = PairTable::new(&s, reps, self.padding);
        let split = cross.emit(batch);
        pivots.emit(batch);
        self.phase = Phase::Placing { cross, pivots, split };
    }

    fn round_two(
        &mut self,
        mut cross: CrossTable,
        mut pivots: PairTable,
        split: usize,
        outcomes: &[u32],
        batch: &mut BatchBuilder<'_>,
    ) -> Result<()> {
        let end = split + pivots.request_count();
        if outcomes.len() != end {
            return Err(Error::OutcomeLength {
                expected: end,
                got: outcomes.len(),
            });
        }
        cross.absorb(&outcomes[..split])?;
        pivots.absorb(&outcomes[split..])?;
        let order = pivots.order_by_wins();
        let place = PlacementState::build(&self.universe, order.clone(), self.k_padded, |j, x| {
            cross.beats(order[j], x)
        });
        let m = place.m;
        let top = place.pivots.len();
        let window = |l: f64| {
            let h = ceil_real(l);
            (m.saturating_sub(h), (m + h).min(top))
        };
        let mut levels = Vec::new();
        for &l in level_ladder(self.universe.len()).working() {
            let (lo, hi) = window(l);
            let w: Vec<ItemId> = place.chunks[lo..=hi].concat();
            let size = ceil_real(w.len() as f64 / l.powi(4));
            let s = sample_without_replacement(&w, size, &mut self.rng);
            let mut t = CrossTable::new(&w, &s, self.consts.reps(self.consts.c2 * l), self.padding);
            t.emit(batch);
            levels.push((t, s));
        }
        let (lo, hi) = window(level_ladder(self.universe.len()).working()[0]);
        let seed: Vec<ItemId> = place.chunks[..lo].concat();
        let active: Vec<ItemId> = place.chunks[lo..=hi].concat();
        let quota = self.k_padded.saturating_sub(seed.len());
        self.placement = Some(place);
        self.phase = Phase::Trimming {
            levels,
            seed,
            active,
            quota,
        };
        Ok(())
    }

    fn finish(
        &mut self,
        mut levels: Vec<(CrossTable, Vec<ItemId>)>,
        seed: Vec<ItemId>,
        active: Vec<ItemId>,
        quota: usize,
        outcomes: &[u32],
    ) -> Result<Vec<ItemId>> {
        let mut at = 0;
        for (t, _) in &mut levels {
            let end = at + t.request_count();
            if outcomes.len() < end {
                return Err(Error::OutcomeLength {
                    expected: end,
                    got: outcomes.len(),
                });
            }
            t.absorb(&outcomes[at..end])?;
            at = end;
        }
        let place = &self.placement.as_ref().expect("placement precedes trimming").place;
        let mut state = TrimState::new(active, quota);
        for (t, s) in &levels {
            // pairs outside the level's window fall back to the placement
            state.step(s, |j, x| {
                t.try_beats(j, x)
                    .unwrap_or_else(|| place[j.index()] < place[x.index()])
            });
        }
        let mut out = seed;
        out.extend_from_slice(&state.accepted);
        if state.quota > 0 {
            let mut rest = state.active.clone();
            rest.sort_by_key(|x| (place[x.index()], *x));
            out.extend(rest.into_iter().take(state.quota));
        }
        Ok(self.fit(self.padding.strip(&out)))
    }

    /// Real items by placement, best first.
    fn by_placement(&self) -> Vec<ItemId> {
        let mut real: Vec<ItemId> = self.padding.strip(&self.universe);
        if let Some(p) = &self.placement {
            real.sort_by_key(|x| (p.place[x.index()], *x));
        }
        real
    }

    /// Trims or fills `out` to exactly `k` items using the placement order.
    fn fit(&self, mut out: Vec<ItemId>) -> Vec<ItemId> {
        if out.len() == self.k {
            return out;
        }
        let order = self.by_placement();
        if out.len() > self.k {
            let rank: std::collections::HashMap<ItemId, usize> =
                order.iter().enumerate().map(|(i, &x)| (x, i)).collect();
            out.sort_by_key(|x| rank[x]);
            out.truncate(self.k);
            return out;
        }
        let have: std::collections::HashSet<ItemId> = out.iter().copied().collect();
        let need = self.k - out.len();
        out.extend(order.into_iter().filter(|x| !have.contains(x)).take(need));
        out
    }
}

impl RoundAlgorithm for TwoRoundTopK {
    fn next_batch(
        &mut self,
        previous: Option<&[u32]>,
        batch: &mut BatchBuilder<'_>,
    ) -> Result<Step> {
        match std::mem::replace(&mut self.phase, Phase::Done) {
            Phase::Start => {
                self.round_one(batch);
                Ok(Step::Batch)
            }
            Phase::Placing { cross, pivots, split } => {
                self.round_two(cross, pivots, split, previous.unwrap_or_default(), batch)?;
                Ok(Step::Batch)
            }
            Phase::Trimming {
                levels,
                seed,
                active,
                quota,
            } => Ok(Step::Final(self.finish(levels, seed, active, quota, previous.unwrap_or_default())?)),
            Phase::Done => Err(Error::InvalidParameter("algorithm already finished".into())),
        }
    }

    fn finalize_on_halt(&mut self) -> Vec<ItemId> {
        let mut out = self.by_placement();
        out.truncate(self.k);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{execute, HarnessConfig};
    use crate::model::{true_sorted_topk, GroundTruth, NoiseModel};

    fn same_set(a: &[ItemId], b: &[ItemId]) -> bool {
        let mut a = a.to_vec();
        let mut b = b.to_vec();
        a.sort();
        b.sort();
        a == b
    }

    #[test]
    fn pad_size_formula() {
        assert_eq!(TwoRoundTopK::pad_size(1), 0);
        let want = (40.0 * 4096f64.ln() * 256.0f64).ceil() as usize;
        assert_eq!(TwoRoundTopK::pad_size(4096), want);
        let a = two_round_topk(4096, 2048, AlgoConstants::default(), 0).unwrap();
        assert_eq!(a.padding().top as usize, want);
    }

    #[test]
    fn truthful_verdicts_give_exact_top_k() {
        for n in 1..=64usize {
            for k in 1..=n {
                let gt = GroundTruth::random(n, (7 * n + k) as u64).unwrap();
                let mut a = two_round_topk(n, k, AlgoConstants::scaled(0.01), k as u64).unwrap();
                let cfg = HarnessConfig::new(2, 0).with_budget(a.budget());
                let s = execute(&mut a, &gt, &NoiseModel::noiseless(), &cfg).unwrap();
                assert!(!s.halted);
                assert!(same_set(&s.output, &true_sorted_topk(&gt, k).unwrap()), "n={n} k={k}");
            }
        }
    }

    #[test]
    fn pivots_sit_at_their_index() {
        let gt = GroundTruth::random(500, 1).unwrap();
        let mut a = two_round_topk(500, 250, AlgoConstants::scaled(0.05), 3).unwrap();
        execute(&mut a, &gt, &NoiseModel::default(), &HarnessConfig::new(2, 9)).unwrap();
        let p = a.placement().unwrap();
        for (j, s) in p.pivots.iter().enumerate() {
            assert_eq!(p.place[s.index()] as usize, j + 1);
        }
        let sizes: usize = p.chunks.iter().map(Vec::len).sum();
        assert_eq!(sizes, a.padding().total());
    }

    #[test]
    fn noisy_run_is_mostly_right() {
        let ok = (0..20)
            .filter(|&seed| {
                let gt = GroundTruth::random(300, seed).unwrap();
                let mut a = two_round_topk(300, 100, AlgoConstants::default(), seed).unwrap();
                let cfg = HarnessConfig::new(2, seed).with_budget(a.budget());
                let s = execute(&mut a, &gt, &NoiseModel::default(), &cfg).unwrap();
                assert!(s.total_comparisons <= a.budget());
                same_set(&s.output, &true_sorted_topk(&gt, 100).unwrap())
            })
            .count();
        assert!(ok >= 14, "{ok}");
    }
}
