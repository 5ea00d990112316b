//! Counter-based noise stream.
//!
//! A variate is a pure function of `(run_seed, round_index, ordinal)`, so a
//! batch can be evaluated in any order (or in parallel) with identical
//! results. The mixer is the SplitMix64 finalizer keyed per round.

use std::collections::HashMap;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline(always)]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stream key for one round of one run.
#[inline]
pub fn round_key(run_seed: u64, round_index: u32) -> u64 {
    let k = mix64(run_seed ^ GOLDEN);
    mix64(k ^ (round_index as u64).wrapping_mul(0xD1B5_4A32_D192_ED03))
}

#[inline]
pub fn word_at(key: u64, ordinal: u64) -> u64 {
    mix64(key.wrapping_add(ordinal.wrapping_add(1).wrapping_mul(GOLDEN)))
}

/// Uniform variate in `[0, 1)` at the given coordinates.
#[inline]
pub fn uniform(run_seed: u64, round_index: u32, ordinal: u64) -> f64 {
    to_unit(word_at(round_key(run_seed, round_index), ordinal))
}

#[inline]
pub fn to_unit(word: u64) -> f64 {
    (word >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Derives an independent 64-bit seed from a base seed and a label.
pub fn derive_seed(base: u64, label: u64, index: u64) -> u64 {
    mix64(mix64(base ^ mix64(label.wrapping_mul(GOLDEN))).wrapping_add(index))
}

/// Samples the number of wrong outcomes among `reps` repetitions of one
/// pair from a single variate, by inverting the Binomial(reps, 1 - p) CDF.
///
/// For `reps == 1` this is exactly "wrong iff u >= p", the single-draw
/// rule used by [`crate::model::compare`].
#[derive(Debug, Clone)]
pub struct TallySampler {
    q: f64,
    cdfs: HashMap<u32, Vec<f64>>,
}

impl TallySampler {
    /// `p` is the probability of a correct outcome.
    pub fn new(p: f64) -> Self {
        Self {
            q: 1.0 - p,
            cdfs: HashMap::new(),
        }
    }

    pub fn wrong_count(&mut self, reps: u32, u: f64) -> u32 {
        if self.q <= 0.0 {
            return 0;
        }
        if reps == 1 {
            // keep the single-draw rule bit-exact
            return u32::from(u >= 1.0 - self.q);
        }
        let q = self.q;
        let cdf = self.cdfs.entry(reps).or_insert_with(|| binomial_cdf(reps, q));
        let x = cdf.partition_point(|&c| c <= u);
        (x as u32).min(reps)
    }
}

/// CDF of Binomial(n, q), truncated once it reaches 1 and renormalized.
fn binomial_cdf(n: u32, q: f64) -> Vec<f64> {
    let ln_q = q.ln();
    let ln_1q = (1.0 - q).ln();
    let mut ln_choose = 0.0f64;
    let mut pmf = Vec::with_capacity(n as usize + 1);
    let mut total = 0.0;
    for x in 0..=n {
        if x > 0 {
            ln_choose += ((n - x + 1) as f64).ln() - (x as f64).ln();
        }
        let p = (ln_choose + x as f64 * ln_q + (n - x) as f64 * ln_1q).exp();
        pmf.push(p);
        total += p;
    }
    let mut cdf = Vec::with_capacity(pmf.len());
    let mut acc = 0.0;
    for p in pmf {
        acc += p / total;
        if acc >= 1.0 {
            cdf.push(1.0);
            break;
        }
        cdf.push(acc);
    }
    cdf
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_is_deterministic_and_in_range() {
        for o in 0..1000 {
            let u = uniform(3, 2, o);
            assert!((0.0..1.0).contains(&u));
            assert_eq!(u, uniform(3, 2, o));
        }
        assert_ne!(uniform(3, 2, 0), uniform(3, 3, 0));
        assert_ne!(uniform(3, 2, 0), uniform(4, 2, 0));
    }

    #[test]
    fn uniform_mean_and_variance() {
        let m = 200_000;
        let xs: Vec<f64> = (0..m).map(|o| uniform(11, 1, o)).collect();
        let mean = xs.iter().sum::<f64>() / m as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m as f64;
        assert!((mean - 0.5).abs() < 0.003, "{mean}");
        assert!((var - 1.0 / 12.0).abs() < 0.002, "{var}");
    }

    #[test]
    fn single_rep_matches_threshold_rule() {
        let mut s = TallySampler::new(2.0 / 3.0);
        assert_eq!(s.wrong_count(1, 0.5), 0);
        assert_eq!(s.wrong_count(1, 0.9), 1);
    }

    #[test]
    fn tally_mean_matches_binomial() {
        let mut s = TallySampler::new(2.0 / 3.0);
        let reps = 221;
        let m = 100_000u64;
        let key = round_key(5, 1);
        let total: u64 = (0..m)
            .map(|o| s.wrong_count(reps, to_unit(word_at(key, o))) as u64)
            .sum();
        let mean = total as f64 / m as f64;
        let expect = reps as f64 / 3.0;
        // sd of the mean = sqrt(221 * 2/9 / 1e5) ~ 0.022
        assert!((mean - expect).abs() < 0.1, "{mean} vs {expect}");
    }

    #[test]
    fn cdf_is_monotone_and_ends_at_one() {
        for n in [1u32, 2, 7, 865, 6913] {
            let c = binomial_cdf(n, 1.0 / 3.0);
            assert!(c.windows(2).all(|w| w[0] <= w[1]));
            assert!((c.last().unwrap() - 1.0).abs() < 1e-12);
        }
    }
}
