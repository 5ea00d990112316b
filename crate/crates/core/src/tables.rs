//! Dense comparison layouts.
//!
//! Both tables emit their requests by walking a fixed loop and decode the
//! outcomes by walking the same loop again, so no per-pair index is kept.
//! Pairs touching a dummy item are answered from the [`Padding`] and never
//! emitted.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::harness::BatchBuilder;
use crate::model::{ItemId, Padding};

const NONE: u32 = u32::MAX;

/// Odd integer at least `x`, and at least 1.
pub fn odd_ceil(x: f64) -> u32 {
    let c = x.ceil().max(1.0) as u32;
    if c % 2 == 0 {
        c + 1
    } else {
        c
    }
}

/// Majority verdict of a tally.
#[inline]
pub fn a_wins_majority(a_wins: u32, reps: u32) -> bool {
    2 * a_wins as u64 > reps as u64
}

#[derive(Debug, Clone, Default)]
struct BitMatrix {
    cols: usize,
    words: Vec<u64>,
}

impl BitMatrix {
    fn new(rows: usize, cols: usize) -> Self {
        Self {
            cols,
            words: vec![0; (rows * cols).div_ceil(64)],
        }
    }

    #[inline]
    fn set(&mut self, r: usize, c: usize, v: bool) {
        let i = r * self.cols + c;
        if v {
            self.words[i / 64] |= 1 << (i % 64);
        } else {
            self.words[i / 64] &= !(1 << (i % 64));
        }
    }

    #[inline]
    fn get(&self, r: usize, c: usize) -> bool {
        let i = r * self.cols + c;
        self.words[i / 64] >> (i % 64) & 1 == 1
    }
}

/// Every row item compared against every pivot, `reps` times per pair.
///
/// A pair of two items that are both rows and pivots is compared once.
#[derive(Debug, Clone)]
pub struct CrossTable {
    reps: u32,
    padding: Padding,
    real_pivots: Vec<ItemId>,
    pivot_row: Vec<u32>,
    real_rows: Vec<ItemId>,
    row_pivot: Vec<u32>,
    row_index: HashMap<ItemId, u32>,
    pivot_index: HashMap<ItemId, u32>,
    verdicts: BitMatrix,
    emitted: usize,
    absorbed: bool,
}

impl CrossTable {
    pub fn new(rows: &[ItemId], pivots: &[ItemId], reps: u32, padding: Padding) -> Self {
        let real_rows: Vec<ItemId> = rows.iter().copied().filter(|&i| !padding.is_dummy(i)).collect();
        let real_pivots: Vec<ItemId> =
            pivots.iter().copied().filter(|&i| !padding.is_dummy(i)).collect();
        let row_index: HashMap<ItemId, u32> =
            real_rows.iter().enumerate().map(|(i, &x)| (x, i as u32)).collect();
        let pivot_index: HashMap<ItemId, u32> =
            real_pivots.iter().enumerate().map(|(i, &x)| (x, i as u32)).collect();
        let pivot_row = real_pivots
            .iter()
            .map(|p| row_index.get(p).copied().unwrap_or(NONE))
            .collect();
        let row_pivot = real_rows
            .iter()
            .map(|r| pivot_index.get(r).copied().unwrap_or(NONE))
            .collect();
        let verdicts = BitMatrix::new(real_pivots.len(), real_rows.len());
        Self {
            reps,
            padding,
            real_pivots,
            pivot_row,
            real_rows,
            row_pivot,
            row_index,
            pivot_index,
            verdicts,
            emitted: 0,
            absorbed: false,
        }
    }

    pub fn reps(&self) -> u32 {
        self.reps
    }

    /// Calls `f(pivot_slot, row_slot, pivot, row)` for each emitted pair.
    #[inline]
    fn walk(&self, mut f: impl FnMut(usize, usize, ItemId, ItemId)) {
        for (j, &s) in self.real_pivots.iter().enumerate() {
            let s_is_row = self.pivot_row[j] != NONE;
            for (w, &x) in self.real_rows.iter().enumerate() {
                let jp = self.row_pivot[w];
                if jp as usize == j || (jp != NONE && (jp as usize) < j && s_is_row) {
                    continue;
                }
                f(j, w, s, x);
            }
        }
    }

    pub fn emit(&mut self, batch: &mut BatchBuilder<'_>) -> usize {
        let start = batch.len();
        let reps = self.reps;
        self.walk(|_, _, s, x| {
            batch.push(s, x, reps);
        });
        self.emitted = batch.len() - start;
        self.emitted
    }

    pub fn request_count(&self) -> usize {
        self.emitted
    }

    pub fn absorb(&mut self, outcomes: &[u32]) -> Result<()> {
        if outcomes.len() != self.emitted {
            return Err(Error::OutcomeLength {
                expected: self.emitted,
                got: outcomes.len(),
            });
        }
        let reps = self.reps;
        let mut verdicts = std::mem::take(&mut self.verdicts);
        let mut cursor = 0;
        self.walk(|j, w, _, x| {
            let s_beats = a_wins_majority(outcomes[cursor], reps);
            cursor += 1;
            verdicts.set(j, w, s_beats);
            let jp = self.row_pivot[w];
            let s_row = self.pivot_row[j];
            if jp != NONE && s_row != NONE {
                let _ = x;
                verdicts.set(jp as usize, s_row as usize, !s_beats);
            }
        });
        self.verdicts = verdicts;
        self.absorbed = true;
        Ok(())
    }

    /// Whether `pivot` beat `item`, if that pair is covered.
    #[inline]
    pub fn try_beats(&self, pivot: ItemId, item: ItemId) -> Option<bool> {
        if pivot == item {
            return Some(false);
        }
        if let Some(w) = self.padding.known_winner(pivot, item) {
            return Some(w == pivot);
        }
        let j = *self.pivot_index.get(&pivot)? as usize;
        if let Some(&w) = self.row_index.get(&item) {
            return Some(self.verdicts.get(j, w as usize));
        }
        // item is a pivot that is not a row; the pair was stored the other way
        let jp = *self.pivot_index.get(&item)? as usize;
        let w = self.pivot_row[j];
        (w != NONE).then(|| !self.verdicts.get(jp, w as usize))
    }

    pub fn beats(&self, pivot: ItemId, item: ItemId) -> bool {
        self.try_beats(pivot, item)
            .unwrap_or_else(|| panic!("pair ({pivot}, {item}) not covered by this table"))
    }

    pub fn is_row(&self, item: ItemId) -> bool {
        self.padding.is_dummy(item) || self.row_index.contains_key(&item)
    }
}

/// Every pair of `items` compared `reps` times.
#[derive(Debug, Clone)]
pub struct PairTable {
    reps: u32,
    padding: Padding,
    items: Vec<ItemId>,
    index: HashMap<ItemId, u32>,
    upper: BitMatrix,
    emitted: usize,
}

impl PairTable {
    pub fn new(items: &[ItemId], reps: u32, padding: Padding) -> Self {
        let index = items.iter().enumerate().map(|(i, &x)| (x, i as u32)).collect();
        Self {
            reps,
            padding,
            items: items.to_vec(),
            index,
            upper: BitMatrix::new(items.len(), items.len()),
            emitted: 0,
        }
    }

    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    #[inline]
    fn walk(&self, mut f: impl FnMut(usize, usize)) {
        let n = self.items.len();
        for i in 0..n {
            for j in i + 1..n {
                if self.padding.known_winner(self.items[i], self.items[j]).is_none() {
                    f(i, j);
                }
            }
        }
    }

    pub fn emit(&mut self, batch: &mut BatchBuilder<'_>) -> usize {
        let start = batch.len();
        let reps = self.reps;
        let items = &self.items;
        self.walk(|i, j| {
            batch.push(items[i], items[j], reps);
        });
        self.emitted = batch.len() - start;
        self.emitted
    }

    pub fn request_count(&self) -> usize {
        self.emitted
    }

    pub fn absorb(&mut self, outcomes: &[u32]) -> Result<()> {
        if outcomes.len() != self.emitted {
            return Err(Error::OutcomeLength {
                expected: self.emitted,
                got: outcomes.len(),
            });
        }
        let reps = self.reps;
        let mut upper = std::mem::take(&mut self.upper);
        let mut cursor = 0;
        self.walk(|i, j| {
            upper.set(i, j, a_wins_majority(outcomes[cursor], reps));
            cursor += 1;
        });
        self.upper = upper;
        Ok(())
    }

    #[inline]
    fn beats_at(&self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        if let Some(w) = self.padding.known_winner(self.items[i], self.items[j]) {
            return w == self.items[i];
        }
        if i < j {
            self.upper.get(i, j)
        } else {
            !self.upper.get(j, i)
        }
    }

    pub fn beats(&self, a: ItemId, b: ItemId) -> bool {
        let i = self.index[&a] as usize;
        let j = self.index[&b] as usize;
        self.beats_at(i, j)
    }

    /// Majority wins of every item over all others.
    pub fn win_counts(&self) -> Vec<u32> {
        let n = self.items.len();
        (0..n)
            .map(|i| (0..n).filter(|&j| self.beats_at(i, j)).count() as u32)
            .collect()
    }

    /// Items ordered by descending win count, ties by id.
    pub fn order_by_wins(&self) -> Vec<ItemId> {
        order_by_counts(&self.items, &self.win_counts())
    }

    /// `subset` ordered by how many members of `subset` each beats.
    pub fn order_subset(&self, subset: &[ItemId]) -> Vec<ItemId> {
        let idx: Vec<usize> = subset.iter().map(|x| self.index[x] as usize).collect();
        let counts: Vec<u32> = idx
            .iter()
            .map(|&i| idx.iter().filter(|&&j| self.beats_at(i, j)).count() as u32)
            .collect();
        order_by_counts(subset, &counts)
    }
}

pub fn order_by_counts(items: &[ItemId], counts: &[u32]) -> Vec<ItemId> {
    let mut order: Vec<(u32, ItemId)> = counts.iter().copied().zip(items.iter().copied()).collect();
    order.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)));
    order.into_iter().map(|(_, i)| i).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Oracle;
    use crate::model::{items, GroundTruth, NoiseModel};

    #[test]
    fn odd_ceil_rule() {
        assert_eq!(odd_ceil(100.0 * 9f64.ln()), 221);
        assert_eq!(odd_ceil(100.0 * 27f64.ln()), 331);
        assert_eq!(odd_ceil(864.0), 865);
        assert_eq!(odd_ceil(0.2), 1);
        assert_eq!(odd_ceil(3.0), 3);
    }

    fn run_cross(rows: &[ItemId], pivots: &[ItemId], pad: Padding, gt: &GroundTruth) -> CrossTable {
        let mut t = CrossTable::new(rows, pivots, 1, pad);
        let mut b = BatchBuilder::new();
        t.emit(&mut b);
        let mut o = Oracle::new(gt, NoiseModel::noiseless(), 0);
        let out = o.evaluate(1, b.requests()).unwrap();
        t.absorb(&out).unwrap();
        t
    }

    #[test]
    fn cross_dedupes_pivot_pairs() {
        let gt = GroundTruth::random(10, 2).unwrap();
        let rows = items(0..10);
        let pivots = vec![ItemId(2), ItemId(7), ItemId(4)];
        let t = run_cross(&rows, &pivots, Padding::none(10), &gt);
        // |S|(n-1) - C(|S|,2)
        assert_eq!(t.request_count(), 3 * 9 - 3);
        for &p in &pivots {
            for &x in &rows {
                assert_eq!(t.beats(p, x), gt.better(p, x), "{p} {x}");
            }
        }
    }

    #[test]
    fn cross_with_pivots_outside_rows() {
        let gt = GroundTruth::random(8, 9).unwrap();
        let rows = items(0..5);
        let pivots = vec![ItemId(6), ItemId(1)];
        let t = run_cross(&rows, &pivots, Padding::none(8), &gt);
        assert_eq!(t.request_count(), 5 + 4);
        for &p in &pivots {
            for &x in &rows {
                assert_eq!(t.beats(p, x), gt.better(p, x));
            }
        }
    }

    #[test]
    fn cross_skips_dummies() {
        let gt = GroundTruth::random(4, 1).unwrap();
        let pad = Padding {
            real: 4,
            top: 1,
            bottom: 2,
        };
        let rows = pad.all_items();
        let pivots = vec![ItemId(4), ItemId(0), ItemId(6)];
        let t = run_cross(&rows, &pivots, pad, &gt);
        assert_eq!(t.request_count(), 3);
        assert!(t.beats(ItemId(4), ItemId(0)));
        assert!(!t.beats(ItemId(6), ItemId(3)));
        assert!(t.beats(ItemId(0), ItemId(6)));
    }

    #[test]
    fn pair_table_orders_exactly() {
        let gt = GroundTruth::random(12, 5).unwrap();
        let mut t = PairTable::new(&items(0..12), 1, Padding::none(12));
        let mut b = BatchBuilder::new();
        assert_eq!(t.emit(&mut b), 66);
        let out = Oracle::new(&gt, NoiseModel::noiseless(), 0)
            .evaluate(1, b.requests())
            .unwrap();
        t.absorb(&out).unwrap();
        assert_eq!(t.order_by_wins(), gt.sorted_items());
    }
}
