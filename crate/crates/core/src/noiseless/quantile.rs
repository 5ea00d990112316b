use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{BatchBuilder, RoundAlgorithm, Step};
use crate::model::{ItemId, Padding};
use crate::tables::PairTable;

use super::{algo_rng, ceil_real};

/// Items whose ranks should lie near the requested targets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxPivotList {
    pub targets: Vec<f64>,
    pub pivots: Vec<ItemId>,
    /// Claimed bound on `|rank(pivots[i]) - targets[i]|`.
    pub tolerance: usize,
}

/// One-round quantile estimate from a fully sorted random sample.
#[derive(Debug, Clone)]
pub struct QuantileSketch {
    n: usize,
    targets: Vec<f64>,
    table: PairTable,
    tolerance: usize,
}

impl QuantileSketch {
    /// Sample size `floor(sqrt(budget))`, capped at `n`.
    pub fn new(n: usize, targets: Vec<f64>, budget: u64, rng: &mut impl Rng) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidUniverse);
        }
        if budget < n as u64 {
            return Err(Error::InsufficientBudget { budget, n });
        }
        let t = ((budget as f64).sqrt().floor() as usize).clamp(1, n);
        let sample: Vec<ItemId> = rand::seq::index::sample(rng, n, t)
            .into_iter()
            .map(|i| ItemId(i as u32))
            .collect();
        Ok(Self {
            n,
            targets,
            table: PairTable::new(&sample, 1, Padding::none(n)),
            tolerance: Self::tolerance_for(n, t),
        })
    }

    /// `ceil(3 n sqrt(ln n / t))`.
    pub fn tolerance_for(n: usize, t: usize) -> usize {
        let n = n as f64;
        ceil_real(3.0 * n * (n.ln() / t as f64).sqrt())
    }

    pub fn sample_size(&self) -> usize {
        self.table.items().len()
    }

    pub fn tolerance(&self) -> usize {
        self.tolerance
    }

    pub fn emit(&mut self, batch: &mut BatchBuilder<'_>) -> usize {
        self.table.emit(batch)
    }

    pub fn absorb(&mut self, outcomes: &[u32]) -> Result<ApproxPivotList> {
        self.table.absorb(outcomes)?;
        let order = self.table.order_by_wins();
        let t = order.len();
        let pivots = self
            .targets
            .iter()
            .map(|&tau| {
                let idx = (tau * t as f64 / self.n as f64).round() as usize;
                order[idx.clamp(1, t) - 1]
            })
            .collect();
        Ok(ApproxPivotList {
            targets: self.targets.clone(),
            pivots,
            tolerance: self.tolerance,
        })
    }
}

/// Standalone one-round run of a [`QuantileSketch`]; the final output is
/// the pivot list.
pub struct ApproxQuantilePivots {
    sketch: QuantileSketch,
    result: Option<ApproxPivotList>,
    started: bool,
}

pub fn approx_quantile_pivots(
    n: usize,
    targets: Vec<f64>,
    budget: u64,
    seed: u64,
) -> Result<ApproxQuantilePivots> {
    let sketch = QuantileSketch::new(n, targets, budget, &mut algo_rng(seed))?;
    Ok(ApproxQuantilePivots {
        sketch,
        result: None,
        started: false,
    })
}

impl ApproxQuantilePivots {
    pub fn tolerance(&self) -> usize {
        self.sketch.tolerance()
    }

    pub fn result(&self) -> Option<&ApproxPivotList> {
        self.result.as_ref()
    }
}

impl RoundAlgorithm for ApproxQuantilePivots {
    fn next_batch(
        &mut self,
        previous: Option<&[u32]>,
        batch: &mut BatchBuilder<'_>,
    ) -> Result<Step> {
        if !self.started {
            self.started = true;
            self.sketch.emit(batch);
            return Ok(Step::Batch);
        }
        let list = self.sketch.absorb(previous.unwrap_or_default())?;
        let out = list.pivots.clone();
        self.result = Some(list);
        Ok(Step::Final(out))
    }

    fn finalize_on_halt(&mut self) -> Vec<ItemId> {
        Vec::new()
    }
}
