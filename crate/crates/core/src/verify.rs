//! Success-rate intervals, scaling fits and exhaustive small-instance checks.

use itertools::Itertools;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::{execute, execute_recorded, HarnessConfig, RoundAlgorithm, Transcript};
use crate::model::{true_sorted_topk, GroundTruth, ItemId, NoiseModel};

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// What an output is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    /// Ordered list of the best `k`.
    SortedTopK,
    /// Set of the best `k`.
    TopK,
    /// Every item in order.
    Sort,
}

pub fn is_correct(task: TaskKind, gt: &GroundTruth, k: usize, output: &[ItemId]) -> bool {
    match task {
        TaskKind::SortedTopK => true_sorted_topk(gt, k).is_ok_and(|want| want == output),
        TaskKind::Sort => output == gt.sorted_items(),
        TaskKind::TopK => {
            let Ok(mut want) = true_sorted_topk(gt, k) else {
                return false;
            };
            let mut got = output.to_vec();
            want.sort();
            got.sort();
            want == got
        }
    }
}

/// Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuccessRate {
    pub trials: u64,
    pub successes: u64,
    pub rate: f64,
    pub lower: f64,
    pub upper: f64,
}

impl SuccessRate {
    pub fn new(successes: u64, trials: u64) -> Self {
        let (lower, upper) = wilson_interval(successes, trials);
        Self {
            trials,
            successes,
            rate: if trials == 0 { 0.0 } else { successes as f64 / trials as f64 },
            lower,
            upper,
        }
    }

    pub fn from_flags(flags: impl IntoIterator<Item = bool>) -> Self {
        let (mut s, mut t) = (0, 0);
        for f in flags {
            t += 1;
            s += u64::from(f);
        }
        Self::new(s, t)
    }
}

/// Runs `trials` independent trials and tallies the successes.
pub fn estimate_success_rate(trials: u64, mut trial: impl FnMut(u64) -> Result<bool>) -> Result<SuccessRate> {
    if trials < 30 {
        return Err(Error::InsufficientData(trials as usize));
    }
    let mut ok = 0;
    for i in 0..trials {
        ok += u64::from(trial(i)?);
    }
    Ok(SuccessRate::new(ok, trials))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// Root mean square residual in natural-log space.
    pub residual: f64,
}

/// Least-squares fit of `ln y = slope * ln n + intercept`.
pub fn fit_scaling_exponent(points: &[(f64, f64)]) -> Result<ScalingFit> {
    if points.len() < 3 {
        return Err(Error::InsufficientData(points.len()));
    }
    if points.iter().any(|&(n, y)| !(n > 0.0 && y > 0.0 && n.is_finite() && y.is_finite())) {
        return Err(Error::InvalidParameter("scaling points must be positive".into()));
    }
    if points.iter().map(|p| p.0.to_bits()).unique().count() != points.len() {
        return Err(Error::InvalidParameter("scaling points need distinct n".into()));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum::<f64>()
        / m)
        .sqrt();
    Ok(ScalingFit {
        points: points.to_vec(),
        slope,
        intercept,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SmallCase {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub case: SmallCase,
    /// Rank of each item, 1 = best.
    pub ranks: Vec<u32>,
    pub output: Vec<ItemId>,
    pub error: Option<String>,
    pub transcript: Transcript,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustiveReport {
    pub cases: u64,
    pub failed: u64,
    /// The first few failures.
    pub failures: Vec<Counterexample>,
}

impl ExhaustiveReport {
    pub fn passed(&self) -> bool {
        self.failed == 0
    }
}

/// Builds an algorithm for one small case.
pub type SmallFactory<'a> = dyn Fn(&SmallCase) -> Result<Box<dyn RoundAlgorithm>> + 'a;

/// Runs every `n <= n_max`, every `k` (only `k = n` for sorting), every
/// permutation and every seed under the noiseless oracle. At most
/// `keep` counterexamples are stored.
pub fn exhaustive_small_check(
    factory: &SmallFactory<'_>,
    task: TaskKind,
    max_rounds: u32,
    n_max: usize,
    seeds: &[u64],
    keep: usize,
) -> Result<ExhaustiveReport> {
    if n_max > 8 {
        return Err(Error::InvalidParameter(format!("n_max = {n_max} above 8")));
    }
    let mut report = ExhaustiveReport {
        cases: 0,
        failed: 0,
        failures: Vec::new(),
    };
    for n in 1..=n_max {
        let ks: Vec<usize> = match task {
            TaskKind::Sort => vec![n],
            _ => (1..=n).collect(),
        };
        for ranks in (1..=n as u32).permutations(n) {
            let gt = GroundTruth::from_ranks(ranks.clone())?;
            for &k in &ks {
                for &seed in seeds {
                    report.cases += 1;
                    let case = SmallCase { n, k, seed };
                    let cfg = HarnessConfig::new(max_rounds, seed);
                    let noise = NoiseModel::noiseless();
                    let run = factory(&case).and_then(|mut alg| execute(&mut alg, &gt, &noise, &cfg));
                    let (output, error) = match run {
                        Ok(s) if is_correct(task, &gt, k, &s.output) => continue,
                        Ok(s) => (s.output, None),
                        Err(e) => (Vec::new(), Some(e.to_string())),
                    };
                    // replay to capture the transcript
                    let transcript = factory(&case)
                        .and_then(|mut alg| execute_recorded(&mut alg, &gt, &noise, &cfg))
                        .map(|(_, t)| t)
                        .unwrap_or_default();
                    report.failed += 1;
                    if report.failures.len() < keep {
                        report.failures.push(Counterexample {
                            case,
                            ranks: ranks.clone(),
                            output,
                            error,
                            transcript,
                        });
                    }
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noiseless::{one_round_sorted_topk, TopOf};
    use crate::harness::{BatchBuilder, Step};

    #[test]
    fn wilson_400_of_500() {
        let (lo, hi) = wilson_interval(400, 500);
        assert!((lo - 0.7627).abs() < 5e-4, "{lo}");
        assert!((hi - 0.8327).abs() < 5e-4, "{hi}");
        assert_eq!(wilson_interval(50, 50).1, 1.0);
        assert_eq!(SuccessRate::new(0, 40).rate, 0.0);
    }

    #[test]
    fn wilson_covers_at_nominal_rate() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let covered = (0..1000)
            .filter(|_| {
                let s = (0..200).filter(|_| rng.random::<f64>() < 0.7).count() as u64;
                let (lo, hi) = wilson_interval(s, 200);
                lo <= 0.7 && 0.7 <= hi
            })
            .count();
        assert!(covered >= 930, "{covered}");
    }

    #[test]
    fn exact_power_laws() {
        let pts: Vec<(f64, f64)> = [256.0f64, 1024.0, 4096.0].iter().map(|&n| (n, n.powf(1.5))).collect();
        let f = fit_scaling_exponent(&pts).unwrap();
        assert!((f.slope - 1.5).abs() < 1e-12);
        let flat: Vec<(f64, f64)> = pts.iter().map(|p| (p.0, 7.0)).collect();
        assert!(fit_scaling_exponent(&flat).unwrap().slope.abs() < 1e-12);
        let scaled: Vec<(f64, f64)> = pts.iter().map(|p| (p.0, 3.0 * p.1)).collect();
        let g = fit_scaling_exponent(&scaled).unwrap();
        assert!((g.slope - f.slope).abs() < 1e-12);
        assert!((g.intercept - f.intercept - 3f64.ln()).abs() < 1e-12);
        assert_eq!(fit_scaling_exponent(&pts[..2]), Err(Error::InsufficientData(2)));
    }

    #[test]
    fn too_few_trials() {
        assert!(estimate_success_rate(10, |_| Ok(true)).is_err());
        let r = estimate_success_rate(40, |i| Ok(i % 4 != 0)).unwrap();
        assert_eq!(r.successes, 30);
    }

    #[test]
    fn reversed_output_is_wrong() {
        let gt = GroundTruth::random(10, 1).unwrap();
        let mut rev = true_sorted_topk(&gt, 3).unwrap();
        assert!(is_correct(TaskKind::SortedTopK, &gt, 3, &rev));
        rev.reverse();
        assert!(!is_correct(TaskKind::SortedTopK, &gt, 3, &rev));
        assert!(is_correct(TaskKind::TopK, &gt, 3, &rev));
    }

    #[test]
    fn all_pairs_passes_small_check() {
        let f = |c: &SmallCase| -> Result<Box<dyn RoundAlgorithm>> { Ok(Box::new(one_round_sorted_topk(c.n, c.k)?)) };
        let r = exhaustive_small_check(&f, TaskKind::SortedTopK, 1, 6, &[0, 1], 5).unwrap();
        assert!(r.passed());
        let want: u64 = (1..=6u64).map(|n| (1..=n).product::<u64>() * n * 2).sum();
        assert_eq!(r.cases, want);
    }

    struct Swapped<A>(A);

    impl<A: RoundAlgorithm> RoundAlgorithm for Swapped<A> {
        fn next_batch(&mut self, previous: Option<&[u32]>, batch: &mut BatchBuilder<'_>) -> Result<Step> {
            Ok(match self.0.next_batch(previous, batch)? {
                Step::Final(mut out) => {
                    if out.len() >= 2 {
                        out.swap(0, 1);
                    }
                    Step::Final(out)
                }
                s => s,
            })
        }

        fn finalize_on_halt(&mut self) -> Vec<ItemId> {
            self.0.finalize_on_halt()
        }
    }

    #[test]
    fn mutant_is_caught() {
        let f = |c: &SmallCase| -> Result<Box<dyn RoundAlgorithm>> {
            Ok(Box::new(Swapped(TopOf::new(one_round_sorted_topk(c.n, c.n)?, c.k))))
        };
        let r = exhaustive_small_check(&f, TaskKind::SortedTopK, 1, 4, &[0], 3).unwrap();
        assert!(!r.passed());
        assert_eq!(r.failures.len(), 3);
        assert!(!r.failures[0].transcript.rounds.is_empty());
    }
}
