//! Algorithms for an oracle whose answers are right with probability `p`.

mod constants;
mod find_max;
mod ladder;
mod lift;
mod majority;
mod one_round_topk;
mod placement;
mod sorted_one_round;
mod sorted_two_round;
mod trim;
mod two_round_topk;

pub use constants::{majority_rate, AlgoConstants};
pub use find_max::{find_max, FindMax};
pub use ladder::{level_ladder, LevelLadder};
pub use lift::{lift_reps, repeat_lift, RepeatLift};
pub use majority::{majority, plurality};
pub use one_round_topk::{one_round_topk, OneRoundTopK, OneRoundTrace};
pub use placement::{boundary_index, place_by_walk, PlacementState};
pub use sorted_one_round::{one_round_sorted_topk_noisy, OneRoundSortedTopK, NoisySortedOneRound};
pub use sorted_two_round::{two_round_sorted_topk_noisy, GroupTop1, SmallKBranch, TwoRoundSortedTopK};
pub use trim::{TrimLevel, TrimState};
pub use two_round_topk::{two_round_topk, TwoRoundTopK};

use rand::seq::index;
use rand::Rng;

use crate::model::ItemId;

/// `m` distinct members of `items`, clamped to `1..=items.len()`.
pub(crate) fn sample_without_replacement<R: Rng + ?Sized>(items: &[ItemId], m: usize, rng: &mut R) -> Vec<ItemId> {
    if items.is_empty() {
        return Vec::new();
    }
    let m = m.clamp(1, items.len());
    index::sample(rng, items.len(), m).into_iter().map(|i| items[i]).collect()
}
