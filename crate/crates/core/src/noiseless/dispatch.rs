use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::harness::{BatchBuilder, RoundAlgorithm, Step};
use crate::model::ItemId;

use super::{
    ceil_real, check_k, check_rounds, one_round_sorted_topk, rsorted1, rsorted2, AllPairsSort,
    Rsorted1, Rsorted2, TopOf,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DispatchChoice {
    AllPairs,
    Rsorted1,
    Rsorted1Inflated,
    Rsorted2,
    Rsorted2Inflated,
}

enum Inner {
    AllPairs(AllPairsSort),
    Rsorted1(TopOf<Rsorted1>),
    Rsorted2(TopOf<Rsorted2>),
}

/// Sorted top-`k` in `r` rounds, choosing the sub-algorithm by how `k`
/// compares with `n`.
pub struct NoiselessDispatch {
    choice: DispatchChoice,
    inner_k: usize,
    inner: Inner,
}

/// `(ceil(n^((2r-2)/(2r-1))), ceil(10 n^((r-2)/(r-1))))`.
pub fn thresholds(n: usize, r: u32) -> (usize, usize) {
    let (n, r) = (n as f64, r as f64);
    (
        ceil_real(n.powf((2.0 * r - 2.0) / (2.0 * r - 1.0))),
        ceil_real(10.0 * n.powf((r - 2.0) / (r - 1.0))),
    )
}

pub fn noiseless_sorted_topk(n: usize, k: usize, r: u32, seed: u64) -> Result<NoiselessDispatch> {
    check_k(n, k)?;
    check_rounds(r, 1)?;
    let (choice, inner_k) = match r {
        1 => (DispatchChoice::AllPairs, k),
        2 => {
            let t = ceil_real((n as f64).powf(2.0 / 3.0)).min(n);
            if (k as f64) > (n as f64).powf(2.0 / 3.0) {
                (DispatchChoice::Rsorted1, k)
            } else {
                (DispatchChoice::Rsorted1Inflated, t.max(k))
            }
        }
        _ => {
            let (t1, t2) = thresholds(n, r);
            if k > t1 {
                (DispatchChoice::Rsorted1, k)
            } else if k >= t2 {
                (DispatchChoice::Rsorted2, k)
            } else {
                (DispatchChoice::Rsorted2Inflated, t2.min(n))
            }
        }
    };
    let inner = match choice {
        DispatchChoice::AllPairs => Inner::AllPairs(one_round_sorted_topk(n, k)?),
        DispatchChoice::Rsorted1 | DispatchChoice::Rsorted1Inflated => {
            Inner::Rsorted1(TopOf::new(rsorted1(n, inner_k, r, seed)?, k))
        }
        DispatchChoice::Rsorted2 | DispatchChoice::Rsorted2Inflated => {
            Inner::Rsorted2(TopOf::new(rsorted2(n, inner_k, r, seed)?, k))
        }
    };
    Ok(NoiselessDispatch {
        choice,
        inner_k,
        inner,
    })
}

impl NoiselessDispatch {
    pub fn choice(&self) -> DispatchChoice {
        self.choice
    }

    /// The `k` passed to the chosen sub-algorithm.
    pub fn inner_k(&self) -> usize {
        self.inner_k
    }

    fn inner(&mut self) -> &mut dyn RoundAlgorithm {
        match &mut self.inner {
            Inner::AllPairs(a) => a,
            Inner::Rsorted1(a) => a,
            Inner::Rsorted2(a) => a,
        }
    }
}

impl RoundAlgorithm for NoiselessDispatch {
    fn next_batch(
        &mut self,
        previous: Option<&[u32]>,
        batch: &mut BatchBuilder<'_>,
    ) -> Result<Step> {
        self.inner().next_batch(previous, batch)
    }

    fn finalize_on_halt(&mut self) -> Vec<ItemId> {
        self.inner().finalize_on_halt()
    }
}
