use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{BatchBuilder, Lockstep, RoundAlgorithm, Step};
use crate::model::{ItemId, Padding};
use crate::noise::derive_seed;
use crate::noiseless::{algo_rng, ceil_real, check_k, noiseless_sorted_topk, NoiselessDispatch};

use super::{lift_reps, plurality, repeat_lift, AlgoConstants, FindMax, NoisySortedOneRound, OneRoundSortedTopK, OneRoundTopK, RepeatLift};

/// Which branch handles a given `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmallKBranch {
    /// Groups when `k < n^(1/10)`, the lift otherwise.
    #[default]
    Auto,
    Lift,
    Groups,
}

/// Per-group top-1 routine of the grouping branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupTop1 {
    #[default]
    OneRound,
    FindMax,
}

/// Noisy sorted top-`k` in two rounds.
pub struct TwoRoundSortedTopK {
    inner: Inner,
}

enum Inner {
    Lift(RepeatLift<NoiselessDispatch>),
    Groups(Box<Groups>),
    Max(FindMax),
}

struct Groups {
    k: usize,
    consts: AlgoConstants,
    padding: Padding,
    seed: u64,
    groups: Vec<Vec<ItemId>>,
    copies: usize,
    top1: GroupTop1,
    stage: Stage,
}

enum Stage {
    Start,
    Winners(Lockstep),
    Sort(NoisySortedOneRound),
    Done,
}

pub fn two_round_sorted_topk_noisy(n: usize, k: usize, consts: AlgoConstants, seed: u64) -> Result<TwoRoundSortedTopK> {
    TwoRoundSortedTopK::new(n, k, consts, seed, SmallKBranch::Auto, GroupTop1::OneRound)
}

impl TwoRoundSortedTopK {
    pub fn new(
        n: usize,
        k: usize,
        consts: AlgoConstants,
        seed: u64,
        branch: SmallKBranch,
        top1: GroupTop1,
    ) -> Result<Self> {
        check_k(n, k)?;
        consts.validate()?;
        if k == 1 {
            let all = crate::model::items(0..n as u32);
            return Ok(Self {
                inner: Inner::Max(FindMax::new(all, 1.0 / 9.0, consts, Padding::none(n))?),
            });
        }
        let lift = match branch {
            SmallKBranch::Auto => (k as f64) >= (n as f64).powf(0.1),
            SmallKBranch::Lift => true,
            SmallKBranch::Groups => false,
        };
        let inner = if lift {
            let reps = lift_reps(n, consts.constant_scale);
            Inner::Lift(repeat_lift(noiseless_sorted_topk(n, k, 2, seed)?, reps)?)
        } else {
            Inner::Groups(Box::new(Groups::new(n, k, consts, seed, top1)?))
        };
        Ok(Self { inner })
    }

    pub fn uses_lift(&self) -> bool {
        matches!(self.inner, Inner::Lift(_))
    }

    /// Group sizes of the grouping branch.
    pub fn group_sizes(&self) -> Option<Vec<usize>> {
        match &self.inner {
            Inner::Groups(g) => Some(g.groups.iter().map(Vec::len).collect()),
            _ => None,
        }
    }

    /// Copies of the top-1 routine run per group.
    pub fn copies_per_group(&self) -> Option<usize> {
        match &self.inner {
            Inner::Groups(g) => Some(g.copies),
            _ => None,
        }
    }
}

impl Groups {
    fn new(n: usize, k: usize, consts: AlgoConstants, seed: u64, top1: GroupTop1) -> Result<Self> {
        let c = ceil_real((n as f64).powf(1.0 / 3.0)).max(1);
        let total = c * c * c;
        let padding = Padding {
            real: n as u32,
            top: 0,
            bottom: (total - n) as u32,
        };
        let mut all = padding.all_items();
        all.shuffle(&mut algo_rng(seed));
        let groups = all.chunks(c).map(<[ItemId]>::to_vec).collect();
        let copies = consts.reps(200.0 * (k as f64).ln()) as usize;
        Ok(Self {
            k,
            consts,
            padding,
            seed,
            groups,
            copies,
            top1,
            stage: Stage::Start,
        })
    }

    fn winners(&self) -> Result<Lockstep> {
        let mut children: Vec<Box<dyn RoundAlgorithm>> = Vec::with_capacity(self.groups.len() * self.copies);
        for (g, items) in self.groups.iter().enumerate() {
            for c in 0..self.copies {
                let child: Box<dyn RoundAlgorithm> = match self.top1 {
                    GroupTop1::OneRound => Box::new(OneRoundTopK::new(
                        items.clone(),
                        1,
                        self.consts,
                        self.padding,
                        derive_seed(self.seed, 9 + g as u64, c as u64),
                    )?),
                    GroupTop1::FindMax => Box::new(FindMax::new(items.clone(), 1.0 / 9.0, self.consts, self.padding)?),
                };
                children.push(child);
            }
        }
        Ok(Lockstep::new(children))
    }

    fn sorter(&self, lock: Lockstep) -> Result<NoisySortedOneRound> {
        let answers = lock.into_outputs();
        let t: Vec<ItemId> = answers
            .chunks(self.copies)
            .map(|copies| {
                let firsts: Vec<ItemId> = copies.iter().filter_map(|a| a.first().copied()).collect();
                plurality(&firsts).ok_or_else(|| Error::InvalidParameter("empty group".into()))
            })
            .collect::<Result<_>>()?;
        let k = self.k.min(t.len());
        Ok(if k < 2 {
            NoisySortedOneRound::Max(FindMax::new(t, 1.0 / 9.0, self.consts, self.padding)?)
        } else {
            NoisySortedOneRound::Sorted(OneRoundSortedTopK::new(
                t,
                k,
                self.consts,
                self.padding,
                derive_seed(self.seed, 2, 0),
            )?)
        })
    }

    fn next(&mut self, previous: Option<&[u32]>, batch: &mut BatchBuilder<'_>) -> Result<Step> {
        match std::mem::replace(&mut self.stage, Stage::Done) {
            Stage::Start => {
                let mut lock = self.winners()?;
                if lock.advance(None, batch)? {
                    return self.start_sort(lock, batch);
                }
                self.stage = Stage::Winners(lock);
                Ok(Step::Batch)
            }
            Stage::Winners(mut lock) => {
                let mut scratch = BatchBuilder::new();
                if !lock.advance(previous, &mut scratch)? {
                    return Err(Error::InvalidParameter("top-1 copies exceeded one round".into()));
                }
                self.start_sort(lock, batch)
            }
            Stage::Sort(mut alg) => match alg.next_batch(previous, batch)? {
                Step::Final(out) => Ok(Step::Final(self.padding.strip(&out))),
                Step::Batch => {
                    self.stage = Stage::Sort(alg);
                    Ok(Step::Batch)
                }
            },
            Stage::Done => Err(Error::InvalidParameter("algorithm already finished".into())),
        }
    }

    fn start_sort(&mut self, lock: Lockstep, batch: &mut BatchBuilder<'_>) -> Result<Step> {
        let mut alg = self.sorter(lock)?;
        match alg.next_batch(None, batch)? {
            Step::Final(out) => Ok(Step::Final(self.padding.strip(&out))),
            Step::Batch => {
                self.stage = Stage::Sort(alg);
                Ok(Step::Batch)
            }
        }
    }
}

impl RoundAlgorithm for TwoRoundSortedTopK {
    fn next_batch(
        &mut self,
        previous: Option<&[u32]>,
        batch: &mut BatchBuilder<'_>,
    ) -> Result<Step> {
        match &mut self.inner {
            Inner::Lift(a) => a.next_batch(previous, batch),
            Inner::Groups(g) => g.next(previous, batch),
            Inner::Max(a) => a.next_batch(previous, batch),
        }
    }

    fn finalize_on_halt(&mut self) -> Vec<ItemId> {
        match &mut self.inner {
            Inner::Lift(a) => a.finalize_on_halt(),
            Inner::Max(a) => a.finalize_on_halt(),
            Inner::Groups(g) => {
                let k = g.k;
                let mut real = g.padding.strip(&g.groups.concat());
                real.sort();
                real.truncate(k);
                real
            }
        }
    }
}
