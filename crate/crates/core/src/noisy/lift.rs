use crate::error::{Error, Result};
use crate::harness::{BatchBuilder, RoundAlgorithm, Step};
use crate::model::ItemId;
use crate::tables::{a_wins_majority, odd_ceil};

use super::majority_rate;

/// Runs `inner` with each of its comparisons repeated `reps` times and
/// hands it the majority verdicts.
pub struct RepeatLift<A> {
    inner: A,
    reps: u32,
    issued: Vec<u32>,
}

/// `ceil(ln(12 n^2) / D(1/2 || 1/3))`, made odd.
pub fn lift_reps(n: usize, scale: f64) -> u32 {
    let n = n as f64;
    odd_ceil((12.0 * n * n).ln() / majority_rate(1.0 / 3.0) * scale)
}

pub fn repeat_lift<A: RoundAlgorithm>(inner: A, reps: u32) -> Result<RepeatLift<A>> {
    RepeatLift::new(inner, reps)
}

impl<A: RoundAlgorithm> RepeatLift<A> {
    pub fn new(inner: A, reps: u32) -> Result<Self> {
        if reps % 2 == 0 {
            return Err(Error::InvalidParameter(format!("lift repetitions must be odd, got {reps}")));
        }
        Ok(Self {
            inner,
            reps,
            issued: Vec::new(),
        })
    }

    pub fn reps(&self) -> u32 {
        self.reps
    }

    pub fn inner(&self) -> &A {
        &self.inner
    }
}

impl<A: RoundAlgorithm> RoundAlgorithm for RepeatLift<A> {
    fn next_batch(
        &mut self,
        previous: Option<&[u32]>,
        batch: &mut BatchBuilder<'_>,
    ) -> Result<Step> {
        let verdicts = previous.map(|prev| {
            prev.iter()
                .zip(&self.issued)
                .map(|(&wins, &inner_reps)| {
                    if a_wins_majority(wins, inner_reps * self.reps) {
                        inner_reps
                    } else {
                        0
                    }
                })
                .collect::<Vec<u32>>()
        });
        if let Some(prev) = previous {
            if prev.len() != self.issued.len() {
                return Err(Error::OutcomeLength {
                    expected: self.issued.len(),
                    got: prev.len(),
                });
            }
        }
        let mut scratch = BatchBuilder::new();
        let step = self.inner.next_batch(verdicts.as_deref(), &mut scratch)?;
        self.issued.clear();
        if let Step::Batch = step {
            for r in scratch.requests() {
                self.issued.push(r.reps);
                batch.push(r.a, r.b, r.reps * self.reps);
            }
        }
        Ok(step)
    }

    fn finalize_on_halt(&mut self) -> Vec<ItemId> {
        self.inner.finalize_on_halt()
    }
}
