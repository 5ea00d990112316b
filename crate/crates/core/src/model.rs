//! Items, hidden orders and the pairwise comparison oracle.
//!
//! Items are 0-based labels; ranks are 1-based with rank 1 the best item.
//! Every noisy draw is addressed by a [`NoiseCoordinates`] triple so that a
//! run can be replayed bit-for-bit regardless of evaluation order.

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise;

/// Label of an item in a universe `0..n`.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct ItemId(pub u32);

impl ItemId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u32> for ItemId {
    fn from(v: u32) -> Self {
        ItemId(v)
    }
}

/// Convenience for building item lists in tests and examples.
pub fn items(range: std::ops::Range<u32>) -> Vec<ItemId> {
    range.map(ItemId).collect()
}

/// The hidden total order: a bijection from items onto ranks `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroundTruth {
    rank_of: Vec<u32>,
    seed: u64,
}

impl GroundTruth {
    /// Uniformly random permutation drawn by Fisher-Yates from `seed`.
    pub fn random(n: usize, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidUniverse);
        }
        let mut ranks: Vec<u32> = (1..=n as u32).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ranks.shuffle(&mut rng);
        Ok(Self {
            rank_of: ranks,
            seed,
        })
    }

    /// Builds a ground truth from an explicit `rank_of` table.
    pub fn from_ranks(rank_of: Vec<u32>) -> Result<Self> {
        let n = rank_of.len();
        if n == 0 {
            return Err(Error::InvalidUniverse);
        }
        let mut seen = vec![false; n];
        for &r in &rank_of {
            let r = r as usize;
            if r == 0 || r > n || seen[r - 1] {
                return Err(Error::InvalidParameter(format!(
                    "rank table is not a bijection onto 1..={n}"
                )));
            }
            seen[r - 1] = true;
        }
        Ok(Self { rank_of, seed: 0 })
    }

    /// Identity order: item `i` has rank `i + 1`.
    pub fn identity(n: usize) -> Result<Self> {
        Self::from_ranks((1..=n as u32).collect())
    }

    /// The same universe with every rank mirrored (`n + 1 - rank`).
    pub fn reversed(&self) -> Self {
        let n = self.n() as u32;
        Self {
            rank_of: self.rank_of.iter().map(|&r| n + 1 - r).collect(),
            seed: self.seed,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.rank_of.len()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    #[inline]
    pub fn rank(&self, item: ItemId) -> u32 {
        self.rank_of[item.index()]
    }

    pub fn ranks(&self) -> &[u32] {
        &self.rank_of
    }

    #[inline]
    pub fn contains(&self, item: ItemId) -> bool {
        item.index() < self.rank_of.len()
    }

    /// True when `a` is strictly better than `b`.
    #[inline]
    pub fn better(&self, a: ItemId, b: ItemId) -> bool {
        self.rank(a) < self.rank(b)
    }

    /// All items ordered best first.
    pub fn sorted_items(&self) -> Vec<ItemId> {
        let mut order = vec![ItemId(0); self.n()];
        for (i, &r) in self.rank_of.iter().enumerate() {
            order[(r - 1) as usize] = ItemId(i as u32);
        }
        order
    }
}

/// Builds the ground truth for a universe of `n` items from `seed`.
pub fn make_ground_truth(n: usize, seed: u64) -> Result<GroundTruth> {
    GroundTruth::random(n, seed)
}

/// The `k` best items in rank order.
pub fn true_sorted_topk(gt: &GroundTruth, k: usize) -> Result<Vec<ItemId>> {
    if k == 0 || k > gt.n() {
        return Err(Error::InvalidParameter(format!(
            "k = {k} outside 1..={}",
            gt.n()
        )));
    }
    let mut order = gt.sorted_items();
    order.truncate(k);
    Ok(order)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    #[default]
    Noiseless,
    Bernoulli,
}

/// Each comparison independently agrees with the hidden order with
/// probability `p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub kind: NoiseKind,
    pub p: f64,
}

impl NoiseModel {
    pub const DEFAULT_P: f64 = 2.0 / 3.0;

    pub fn noiseless() -> Self {
        Self {
            kind: NoiseKind::Noiseless,
            p: 1.0,
        }
    }

    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(p > 0.5 && p <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "correct-outcome probability {p} outside (1/2, 1]"
            )));
        }
        Ok(Self {
            kind: NoiseKind::Bernoulli,
            p,
        })
    }

    /// Probability that an outcome agrees with the hidden order.
    #[inline]
    pub fn p_correct(&self) -> f64 {
        match self.kind {
            NoiseKind::Noiseless => 1.0,
            NoiseKind::Bernoulli => self.p,
        }
    }
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self {
            kind: NoiseKind::Bernoulli,
            p: Self::DEFAULT_P,
        }
    }
}

/// An unordered request to compare two distinct items.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ComparisonRequest {
    pub a: ItemId,
    pub b: ItemId,
}

impl ComparisonRequest {
    pub fn new(a: ItemId, b: ItemId) -> Result<Self> {
        if a == b {
            return Err(Error::SelfComparison(a));
        }
        Ok(Self { a, b })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonOutcome {
    pub request: ComparisonRequest,
    pub winner: ItemId,
}

/// Address of one uniform variate in the noise stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NoiseCoordinates {
    pub run_seed: u64,
    pub round_index: u32,
    pub ordinal: u64,
}

impl NoiseCoordinates {
    #[inline]
    pub fn uniform(&self) -> f64 {
        noise::uniform(self.run_seed, self.round_index, self.ordinal)
    }
}

/// One trial of `req` against the hidden order.
///
/// The truly better item wins iff the variate at `coords` is below `p`.
pub fn compare(
    gt: &GroundTruth,
    noise: &NoiseModel,
    req: ComparisonRequest,
    coords: NoiseCoordinates,
) -> Result<ComparisonOutcome> {
    if req.a == req.b {
        return Err(Error::SelfComparison(req.a));
    }
    for item in [req.a, req.b] {
        if !gt.contains(item) {
            return Err(Error::UnknownItem { item, n: gt.n() });
        }
    }
    let winner = match noise.kind {
        NoiseKind::Noiseless => winner_for_variate(gt, noise, req, 0.0),
        NoiseKind::Bernoulli => winner_for_variate(gt, noise, req, coords.uniform()),
    };
    Ok(ComparisonOutcome {
        request: req,
        winner,
    })
}

/// The outcome rule applied to an explicit variate `u`.
pub fn winner_for_variate(gt: &GroundTruth, noise: &NoiseModel, req: ComparisonRequest, u: f64) -> ItemId {
    let (best, worst) = if gt.better(req.a, req.b) {
        (req.a, req.b)
    } else {
        (req.b, req.a)
    };
    if u < noise.p_correct() {
        best
    } else {
        worst
    }
}

/// Dummy items appended to a universe of `real` items.
///
/// Ids `real..real+top` are dummies better than every real item, ids
/// `real+top..total` dummies worse than every real item; within each
/// block a smaller id is better. Comparisons touching a dummy have an
/// answer known to the algorithm that created it, so they are resolved
/// locally and never reach the oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Padding {
    pub real: u32,
    pub top: u32,
    pub bottom: u32,
}

impl Padding {
    pub fn none(n: usize) -> Self {
        Self {
            real: n as u32,
            top: 0,
            bottom: 0,
        }
    }

    /// No dummies, and no bound on real ids.
    pub fn unbounded() -> Self {
        Self {
            real: u32::MAX,
            top: 0,
            bottom: 0,
        }
    }

    pub fn total(&self) -> usize {
        (self.real + self.top + self.bottom) as usize
    }

    #[inline]
    pub fn is_dummy(&self, item: ItemId) -> bool {
        item.0 >= self.real
    }

    pub fn has_dummies(&self) -> bool {
        self.top + self.bottom > 0
    }

    #[inline]
    fn class(&self, item: ItemId) -> (u8, u32) {
        if item.0 < self.real {
            (1, 0)
        } else if item.0 < self.real + self.top {
            (0, item.0)
        } else {
            (2, item.0)
        }
    }

    /// The winner of `a` vs `b` when at least one is a dummy.
    #[inline]
    pub fn known_winner(&self, a: ItemId, b: ItemId) -> Option<ItemId> {
        if a.0 < self.real && b.0 < self.real {
            return None;
        }
        Some(if self.class(a) < self.class(b) { a } else { b })
    }

    pub fn top_dummies(&self) -> impl Iterator<Item = ItemId> {
        (self.real..self.real + self.top).map(ItemId)
    }

    pub fn bottom_dummies(&self) -> impl Iterator<Item = ItemId> {
        let start = self.real + self.top;
        (start..start + self.bottom).map(ItemId)
    }

    /// Every id of the padded universe.
    pub fn all_items(&self) -> Vec<ItemId> {
        (0..self.total() as u32).map(ItemId).collect()
    }

    /// Drops dummies, keeping the order of real items.
    pub fn strip(&self, items: &[ItemId]) -> Vec<ItemId> {
        items
            .iter()
            .copied()
            .filter(|&i| !self.is_dummy(i))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use super::*;

    #[test]
    fn single_item_universe() {
        let gt = make_ground_truth(1, 99).unwrap();
        assert_eq!(gt.ranks(), &[1]);
    }

    #[test]
    fn empty_universe_rejected() {
        assert_eq!(make_ground_truth(0, 1), Err(Error::InvalidUniverse));
    }

    #[test]
    fn same_seed_same_permutation() {
        let a = make_ground_truth(5, 1234).unwrap();
        let b = make_ground_truth(5, 1234).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn permutations_of_three_are_uniform() {
        let mut freq: HashMap<Vec<u32>, usize> = HashMap::new();
        let seeds = 10_000u64;
        for seed in 0..seeds {
            let gt = make_ground_truth(3, seed).unwrap();
            *freq.entry(gt.ranks().to_vec()).or_default() += 1;
        }
        assert_eq!(freq.len(), 6);
        for (perm, count) in freq {
            let f = count as f64 / seeds as f64;
            assert!((f - 1.0 / 6.0).abs() <= 0.02, "{perm:?}: {f}");
        }
    }

    #[test]
    fn from_ranks_rejects_non_bijection() {
        assert!(GroundTruth::from_ranks(vec![1, 1, 2]).is_err());
        assert!(GroundTruth::from_ranks(vec![0, 1]).is_err());
        assert!(GroundTruth::from_ranks(vec![2, 3, 1]).is_ok());
    }

    fn coords(ordinal: u64) -> NoiseCoordinates {
        NoiseCoordinates {
            run_seed: 7,
            round_index: 1,
            ordinal,
        }
    }

    #[test]
    fn noiseless_compare_follows_order() {
        // rank(0) = 1, rank(1) = 5
        let gt = GroundTruth::from_ranks(vec![1, 5, 2, 3, 4]).unwrap();
        let req = ComparisonRequest::new(ItemId(0), ItemId(1)).unwrap();
        for o in 0..100 {
            let out = compare(&gt, &NoiseModel::noiseless(), req, coords(o)).unwrap();
            assert_eq!(out.winner, ItemId(0));
        }
    }

    #[test]
    fn bernoulli_compare_uses_u_below_p() {
        let gt = GroundTruth::from_ranks(vec![1, 5, 2, 3, 4]).unwrap();
        let req = ComparisonRequest::new(ItemId(0), ItemId(1)).unwrap();
        let noise = NoiseModel::bernoulli(2.0 / 3.0).unwrap();
        assert_eq!(winner_for_variate(&gt, &noise, req, 0.9), ItemId(1));
        assert_eq!(winner_for_variate(&gt, &noise, req, 0.1), ItemId(0));
        let high = (0..).map(coords).find(|c| c.uniform() > 0.85).unwrap();
        assert_eq!(compare(&gt, &noise, req, high).unwrap().winner, ItemId(1));
    }

    #[test]
    fn self_comparison_rejected() {
        assert_eq!(
            ComparisonRequest::new(ItemId(3), ItemId(3)),
            Err(Error::SelfComparison(ItemId(3)))
        );
        let gt = GroundTruth::identity(4).unwrap();
        let req = ComparisonRequest {
            a: ItemId(2),
            b: ItemId(2),
        };
        assert!(compare(&gt, &NoiseModel::noiseless(), req, coords(0)).is_err());
    }

    #[test]
    fn bernoulli_marginal_concentrates() {
        let gt = GroundTruth::identity(2).unwrap();
        let noise = NoiseModel::bernoulli(2.0 / 3.0).unwrap();
        let req = ComparisonRequest::new(ItemId(1), ItemId(0)).unwrap();
        let m = 1_000_000u64;
        let correct = (0..m)
            .filter(|&o| compare(&gt, &noise, req, coords(o)).unwrap().winner == ItemId(0))
            .count();
        let f = correct as f64 / m as f64;
        assert!((f - 2.0 / 3.0).abs() < 0.002, "{f}");
    }

    #[test]
    fn noiseless_tournament_is_rank_order() {
        let gt = make_ground_truth(12, 5).unwrap();
        let mut wins = vec![0u32; 12];
        for a in 0..12u32 {
            for b in (a + 1)..12 {
                let req = ComparisonRequest::new(ItemId(a), ItemId(b)).unwrap();
                let w = compare(&gt, &NoiseModel::noiseless(), req, coords(0))
                    .unwrap()
                    .winner;
                wins[w.index()] += 1;
            }
        }
        // acyclic tournament: win counts are n - rank
        for i in 0..12 {
            assert_eq!(wins[i], 12 - gt.ranks()[i]);
        }
    }

    #[test]
    fn true_sorted_topk_reads_permutation() {
        let gt = GroundTruth::from_ranks(vec![3, 1, 4, 2]).unwrap();
        assert_eq!(true_sorted_topk(&gt, 2).unwrap(), vec![ItemId(1), ItemId(3)]);
        assert_eq!(
            true_sorted_topk(&gt, 4).unwrap(),
            vec![ItemId(1), ItemId(3), ItemId(0), ItemId(2)]
        );
        assert!(true_sorted_topk(&gt, 0).is_err());
        assert!(true_sorted_topk(&gt, 5).is_err());
    }

    #[test]
    fn true_sorted_topk_matches_rank_scan() {
        let gt = make_ground_truth(8, 77).unwrap();
        let got = true_sorted_topk(&gt, 5).unwrap();
        for (pos, item) in got.iter().enumerate() {
            let rank = gt.rank(*item) as usize;
            assert_eq!(rank, pos + 1);
            // exhaustive scan: exactly `pos` items beat it
            let better = (0..8u32).filter(|&j| gt.better(ItemId(j), *item)).count();
            assert_eq!(better, pos);
        }
    }

    #[test]
    fn padding_orders_dummies() {
        let pad = Padding {
            real: 3,
            top: 2,
            bottom: 2,
        };
        // 3, 4 top; 5, 6 bottom
        assert_eq!(pad.known_winner(ItemId(0), ItemId(1)), None);
        assert_eq!(pad.known_winner(ItemId(0), ItemId(3)), Some(ItemId(3)));
        assert_eq!(pad.known_winner(ItemId(5), ItemId(2)), Some(ItemId(2)));
        assert_eq!(pad.known_winner(ItemId(4), ItemId(3)), Some(ItemId(3)));
        assert_eq!(pad.known_winner(ItemId(6), ItemId(5)), Some(ItemId(5)));
        assert_eq!(pad.known_winner(ItemId(4), ItemId(5)), Some(ItemId(4)));
        assert_eq!(pad.strip(&items(0..7)), items(0..3));
    }
}
