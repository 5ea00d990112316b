use serde::{Deserialize, Serialize};

use crate::model::ItemId;

/// Index `J` in `0..=len` maximizing the prefix sum `x_1 + ... + x_J`;
/// the empty prefix counts as 0 and ties go to the smallest `J`.
pub fn place_by_walk(x: impl IntoIterator<Item = i8>) -> usize {
    let (mut best, mut at, mut sum) = (0i64, 0usize, 0i64);
    for (j, v) in x.into_iter().enumerate() {
        sum += v as i64;
        if sum > best {
            best = sum;
            at = j + 1;
        }
    }
    at
}

/// Items assigned to chunk indices by the walk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlacementState {
    /// Pivots from best to worst.
    pub pivots: Vec<ItemId>,
    /// `p(i)` for every item id of the padded universe.
    pub place: Vec<u32>,
    /// `P_j` for `j` in `0..=pivots.len()`.
    pub chunks: Vec<Vec<ItemId>>,
    /// Smallest `J` with `|P_0| + ... + |P_J| >= k`.
    pub m: usize,
}

/// Smallest `J` whose inclusive prefix of chunk sizes reaches `k`.
pub fn boundary_index(sizes: &[usize], k: usize) -> usize {
    let mut acc = 0;
    for (j, s) in sizes.iter().enumerate() {
        acc += s;
        if acc >= k {
            return j;
        }
    }
    sizes.len().saturating_sub(1)
}

impl PlacementState {
    /// Places every item of `universe`; `pivot_beats(j, x)` is the
    /// majority verdict of the `j`-th sorted pivot against `x`.
    pub fn build(
        universe: &[ItemId],
        pivots: Vec<ItemId>,
        k: usize,
        pivot_beats: impl Fn(usize, ItemId) -> bool,
    ) -> Self {
        let size = universe.iter().map(|x| x.index() + 1).max().unwrap_or(0);
        let mut place = vec![0u32; size];
        let mut chunks = vec![Vec::new(); pivots.len() + 1];
        let pivot_at: std::collections::HashMap<ItemId, usize> =
            pivots.iter().enumerate().map(|(j, &p)| (p, j + 1)).collect();
        for &x in universe {
            let p = match pivot_at.get(&x) {
                Some(&j) => j,
                None => place_by_walk((0..pivots.len()).map(|j| if pivot_beats(j, x) { 1 } else { -1 })),
            };
            place[x.index()] = p as u32;
            chunks[p].push(x);
        }
        let sizes: Vec<usize> = chunks.iter().map(Vec::len).collect();
        let m = boundary_index(&sizes, k);
        Self {
            pivots,
            place,
            chunks,
            m,
        }
    }
}
