use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ItemId;

/// Items split into the rank intervals between consecutive pivots.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PivotPartition {
    /// Pivots from best to worst.
    pub pivots: Vec<ItemId>,
    /// Rank of each pivot within the partitioned set.
    pub pivot_ranks: Vec<u32>,
    /// `chunks[i]` holds the items strictly between pivot `i - 1` and
    /// pivot `i`; the last chunk holds everything after the worst pivot.
    pub chunks: Vec<Vec<ItemId>>,
    /// Smallest 1-based pivot index whose rank is at least `k`, or
    /// `pivots.len() + 1` if there is none.
    pub l: usize,
}

impl PivotPartition {
    /// Chunks `N_1..N_l` interleaved with pivots `s_1..s_l`.
    pub fn prefix_order(&self, sorted_chunks: &[Vec<ItemId>]) -> Vec<ItemId> {
        let mut out = Vec::new();
        for (i, chunk) in sorted_chunks.iter().enumerate() {
            out.extend_from_slice(chunk);
            if let Some(&p) = self.pivots.get(i) {
                out.push(p);
            }
        }
        out
    }
}

/// Partitions `items` by `pivots`, given `beats(pivot, x)` for every pivot
/// and every item (pivots included).
///
/// Pivots are ordered by how many other pivots they beat; each remaining
/// item goes to the chunk after the last pivot that beats it. Any ordering
/// that a total order could not produce is reported as an inconsistency.
pub fn partition_by_pivots(
    items: &[ItemId],
    pivots: &[ItemId],
    k: usize,
    beats: impl Fn(ItemId, ItemId) -> bool,
) -> Result<PivotPartition> {
    let pivots = super::dedup(pivots.iter().copied());
    let m = pivots.len();

    let mut by_wins: Vec<(usize, ItemId)> = pivots
        .iter()
        .map(|&p| (pivots.iter().filter(|&&q| q != p && beats(p, q)).count(), p))
        .collect();
    by_wins.sort_by_key(|w| std::cmp::Reverse(w.0));
    for (i, w) in by_wins.iter().enumerate() {
        if w.0 != m - 1 - i {
            return Err(Error::PartitionInconsistency(format!(
                "pivot win counts are not a permutation of 0..{m}"
            )));
        }
    }
    let sorted: Vec<ItemId> = by_wins.into_iter().map(|(_, p)| p).collect();

    let is_pivot: std::collections::HashSet<ItemId> = sorted.iter().copied().collect();
    let mut chunks = vec![Vec::new(); m + 1];
    let mut better_than = vec![0u32; m];
    for &x in items {
        if is_pivot.contains(&x) {
            continue;
        }
        let c = sorted.iter().take_while(|&&p| beats(p, x)).count();
        if sorted[c..].iter().any(|&p| beats(p, x)) {
            return Err(Error::PartitionInconsistency(format!(
                "item {x} is beaten by a pivot below one it beats"
            )));
        }
        for b in &mut better_than[c..] {
            *b += 1;
        }
        chunks[c].push(x);
    }
    // a pivot's rank counts the items and pivots above it
    let pivot_ranks: Vec<u32> = (0..m).map(|j| better_than[j] + j as u32 + 1).collect();
    let l = pivot_ranks
        .iter()
        .position(|&r| r as usize >= k)
        .map_or(m + 1, |j| j + 1);
    Ok(PivotPartition {
        pivots: sorted,
        pivot_ranks,
        chunks,
        l,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{items, GroundTruth};
    use rand::seq::IndexedRandom;
    use rand::SeedableRng;

    #[test]
    fn ten_items_two_pivots() {
        // identity order: item i has rank i + 1
        let gt = GroundTruth::identity(10).unwrap();
        let p = partition_by_pivots(&items(0..10), &[ItemId(6), ItemId(2)], 5, |a, b| {
            gt.better(a, b)
        })
        .unwrap();
        assert_eq!(p.pivots, vec![ItemId(2), ItemId(6)]);
        assert_eq!(p.pivot_ranks, vec![3, 7]);
        assert_eq!(p.chunks[0], items(0..2));
        assert_eq!(p.chunks[1], items(3..6));
        assert_eq!(p.l, 2);
    }

    #[test]
    fn no_pivots_single_chunk() {
        let gt = GroundTruth::random(6, 1).unwrap();
        let p = partition_by_pivots(&items(0..6), &[], 3, |a, b| gt.better(a, b)).unwrap();
        assert_eq!(p.chunks, vec![items(0..6)]);
        assert_eq!(p.l, 1);
    }

    #[test]
    fn matches_brute_force_rank_filter() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for seed in 0..200 {
            let gt = GroundTruth::random(9, seed).unwrap();
            let by_rank = gt.sorted_items();
            let pivots: Vec<ItemId> = [2usize, 5, 8].iter().map(|&r| by_rank[r - 1]).collect();
            let mut shuffled = pivots.clone();
            rand::seq::SliceRandom::shuffle(&mut shuffled[..], &mut rng);
            let k = *[1usize, 4, 7, 9].choose(&mut rng).unwrap();
            let p = partition_by_pivots(&items(0..9), &shuffled, k, |a, b| gt.better(a, b)).unwrap();
            let bounds = [0u32, 2, 5, 8, 10];
            for c in 0..4 {
                let mut want: Vec<ItemId> = items(0..9)
                    .into_iter()
                    .filter(|&x| gt.rank(x) > bounds[c] && gt.rank(x) < bounds[c + 1])
                    .collect();
                let mut got = p.chunks[c].clone();
                want.sort();
                got.sort();
                assert_eq!(got, want);
            }
            let l = [2u32, 5, 8].iter().position(|&r| r as usize >= k).map_or(4, |j| j + 1);
            assert_eq!(p.l, l);
        }
    }

    #[test]
    fn inconsistent_outcomes_detected() {
        // pivot 0 beats pivot 1 and pivot 1 beats pivot 0
        let err = partition_by_pivots(&items(0..3), &items(0..2), 1, |_, _| true).unwrap_err();
        assert!(matches!(err, Error::PartitionInconsistency(_)));
        // an item beaten by the worse pivot only
        let gt = GroundTruth::identity(3).unwrap();
        let err = partition_by_pivots(&items(0..3), &[ItemId(0), ItemId(2)], 1, |a, b| {
            if b == ItemId(1) {
                a == ItemId(2)
            } else {
                gt.better(a, b)
            }
        })
        .unwrap_err();
        assert!(matches!(err, Error::PartitionInconsistency(_)));
    }
}
