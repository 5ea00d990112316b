use serde::{Deserialize, Serialize};

use crate::model::ItemId;

/// State of the accept/reject cascade between levels.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrimState {
    /// `N_i`, items still undecided.
    pub active: Vec<ItemId>,
    /// `T_i`, items accepted so far.
    pub accepted: Vec<ItemId>,
    /// Union of the `B_j`, items rejected so far.
    pub rejected: Vec<ItemId>,
    /// `k_i`, how many more items to accept.
    pub quota: usize,
}

/// What one level decided.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrimLevel {
    pub a: Option<ItemId>,
    pub b: Option<ItemId>,
    pub accepted: Vec<ItemId>,
    pub rejected: Vec<ItemId>,
}

impl TrimState {
    pub fn new(active: Vec<ItemId>, quota: usize) -> Self {
        Self {
            active,
            accepted: Vec::new(),
            rejected: Vec::new(),
            quota,
        }
    }

    /// One level of the cascade. `beats(j, x)` is the level's majority
    /// verdict of pivot `j` against item `x`.
    pub fn step(&mut self, pivots: &[ItemId], beats: impl Fn(ItemId, ItemId) -> bool) -> TrimLevel {
        let active: std::collections::HashSet<ItemId> = self.active.iter().copied().collect();
        let k = self.quota;
        let mut a: Option<(usize, ItemId)> = None;
        let mut b: Option<(usize, ItemId)> = None;
        for &j in pivots.iter().filter(|j| active.contains(j)) {
            // items of N_i not beaten by j, j itself included
            let r = self.active.iter().filter(|&&x| x == j || !beats(j, x)).count();
            if r <= k {
                if a.is_none_or(|(ra, _)| r > ra) {
                    a = Some((r, j));
                }
            } else if b.is_none_or(|(rb, _)| r < rb) {
                b = Some((r, j));
            }
        }
        let accepted: Vec<ItemId> = match a {
            Some((_, j)) => self.active.iter().copied().filter(|&x| x == j || !beats(j, x)).collect(),
            None => Vec::new(),
        };
        let taken: std::collections::HashSet<ItemId> = accepted.iter().copied().collect();
        let rejected: Vec<ItemId> = match b {
            Some((_, j)) => self
                .active
                .iter()
                .copied()
                .filter(|&x| (x == j || beats(j, x)) && !taken.contains(&x))
                .collect(),
            None => Vec::new(),
        };
        let gone: std::collections::HashSet<ItemId> = rejected.iter().copied().collect();
        self.active.retain(|x| !taken.contains(x) && !gone.contains(x));
        self.accepted.extend_from_slice(&accepted);
        self.rejected.extend_from_slice(&rejected);
        self.quota = self.quota.saturating_sub(accepted.len());
        TrimLevel {
            a: a.map(|(_, j)| j),
            b: b.map(|(_, j)| j),
            accepted,
            rejected,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{items, GroundTruth};

    #[test]
    fn six_items_two_pivots() {
        let gt = GroundTruth::identity(6).unwrap();
        let mut st = TrimState::new(items(0..6), 3);
        let lvl = st.step(&[ItemId(1), ItemId(4)], |a, b| gt.better(a, b));
        assert_eq!(lvl.a, Some(ItemId(1)));
        assert_eq!(lvl.b, Some(ItemId(4)));
        assert_eq!(lvl.accepted, items(0..2));
        assert_eq!(lvl.rejected, items(4..6));
        assert_eq!(st.active, items(2..4));
        assert_eq!(st.quota, 1);
    }

    #[test]
    fn no_pivot_in_active_set() {
        let gt = GroundTruth::identity(6).unwrap();
        let mut st = TrimState::new(items(0..3), 2);
        let before = st.clone();
        let lvl = st.step(&[ItemId(4)], |a, b| gt.better(a, b));
        assert_eq!(lvl, TrimLevel::default());
        assert_eq!(st, before);
    }

    #[test]
    fn only_rejection_when_pivots_too_low() {
        let gt = GroundTruth::identity(8).unwrap();
        let mut st = TrimState::new(items(0..8), 2);
        let lvl = st.step(&[ItemId(6), ItemId(4)], |a, b| gt.better(a, b));
        assert!(lvl.accepted.is_empty());
        assert_eq!(lvl.b, Some(ItemId(4)));
        assert_eq!(st.active, items(0..4));
    }
}
