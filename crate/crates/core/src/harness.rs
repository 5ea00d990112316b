//! Round-batched execution of comparison algorithms.
//!
//! An algorithm is a state machine that, given the outcomes of its previous
//! round, either fills the next [`BatchBuilder`] or returns its final
//! answer. The harness evaluates every request of a batch only after the
//! batch is complete, counts comparisons and enforces round and budget
//! limits.
//!
//! A [`Request`] carries a repetition count: `reps` identical comparisons
//! of the same pair occupying consecutive ordinals. Its outcome is the
//! number of those comparisons won by `a`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GroundTruth, ItemId, NoiseKind, NoiseModel};
use crate::noise::{self, TallySampler};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Request {
    pub a: ItemId,
    pub b: ItemId,
    pub reps: u32,
}

type EarlyEval<'a> = Box<dyn FnMut(&Request, u64) -> u32 + 'a>;

/// Collects the requests of one round.
///
/// In ordinary execution outcomes are unavailable until the batch is
/// closed, so [`BatchBuilder::peek`] returns `None`. The adaptiveness audit
/// builds batches in an early-delivery mode where `peek` does answer; an
/// algorithm whose batch depends on what it peeks violates the round model.
pub struct BatchBuilder<'a> {
    requests: Vec<Request>,
    early: Option<(EarlyEval<'a>, Vec<u32>, u64)>,
}

impl Default for BatchBuilder<'_> {
    fn default() -> Self {
        Self::new()
    }
}

impl<'a> BatchBuilder<'a> {
    pub fn new() -> Self {
        Self {
            requests: Vec::new(),
            early: None,
        }
    }

    pub(crate) fn with_early(eval: EarlyEval<'a>) -> Self {
        Self {
            requests: Vec::new(),
            early: Some((eval, Vec::new(), 0)),
        }
    }

    /// Appends `reps` comparisons of `a` against `b`; returns the request
    /// index within this round.
    #[inline]
    pub fn push(&mut self, a: ItemId, b: ItemId, reps: u32) -> usize {
        let req = Request { a, b, reps };
        if let Some((eval, outcomes, ordinal)) = &mut self.early {
            outcomes.push(eval(&req, *ordinal));
            *ordinal += reps as u64;
        }
        self.requests.push(req);
        self.requests.len() - 1
    }

    pub fn peek(&self, index: usize) -> Option<u32> {
        self.early.as_ref().and_then(|(_, o, _)| o.get(index).copied())
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.requests.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requests.is_empty()
    }

    pub fn requests(&self) -> &[Request] {
        &self.requests
    }

    pub fn total_comparisons(&self) -> u64 {
        self.requests.iter().map(|r| r.reps as u64).sum()
    }

    pub fn into_requests(self) -> Vec<Request> {
        self.requests
    }
}

pub enum Step {
    /// The builder holds the next round.
    Batch,
    Final(Vec<ItemId>),
}

/// A round-based comparison algorithm.
///
/// `next_batch` is called with `None` first and afterwards with the
/// outcomes of the previous round, aligned index-for-index with the
/// requests it pushed. The requests of a round may depend only on earlier
/// rounds and on randomness fixed before the round starts.
pub trait RoundAlgorithm: Send {
    fn next_batch(&mut self, previous: Option<&[u32]>, batch: &mut BatchBuilder<'_>)
        -> Result<Step>;

    /// Best-effort answer when the harness halts the run on its budget.
    fn finalize_on_halt(&mut self) -> Vec<ItemId>;
}

impl<T: RoundAlgorithm + ?Sized> RoundAlgorithm for Box<T> {
    fn next_batch(
        &mut self,
        previous: Option<&[u32]>,
        batch: &mut BatchBuilder<'_>,
    ) -> Result<Step> {
        (**self).next_batch(previous, batch)
    }

    fn finalize_on_halt(&mut self) -> Vec<ItemId> {
        (**self).finalize_on_halt()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct HarnessConfig {
    pub max_rounds: u32,
    pub budget: Option<u64>,
    pub run_seed: u64,
}

impl HarnessConfig {
    pub fn new(max_rounds: u32, run_seed: u64) -> Self {
        Self {
            max_rounds,
            budget: None,
            run_seed,
        }
    }

    pub fn with_budget(mut self, budget: u64) -> Self {
        self.budget = Some(budget);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub comparisons_per_round: Vec<u64>,
    pub total_comparisons: u64,
    pub rounds_used: u32,
    pub halted: bool,
    pub output: Vec<ItemId>,
    pub correct: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round_index: u32,
    pub requests: Vec<Request>,
    pub outcomes: Vec<u32>,
}

/// Per-round outcome history of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub rounds: Vec<RoundRecord>,
}

/// Evaluates requests against a ground truth.
pub struct Oracle<'g> {
    gt: &'g GroundTruth,
    noise: NoiseModel,
    sampler: TallySampler,
    run_seed: u64,
}

impl<'g> Oracle<'g> {
    pub fn new(gt: &'g GroundTruth, noise: NoiseModel, run_seed: u64) -> Self {
        Self {
            gt,
            noise,
            sampler: TallySampler::new(noise.p_correct()),
            run_seed,
        }
    }

    fn validate(&self, round: u32, index: usize, req: &Request) -> Result<()> {
        let reason = if req.a == req.b {
            format!("self-comparison of item {}", req.a)
        } else if req.reps == 0 {
            "zero repetitions".to_string()
        } else if !self.gt.contains(req.a) || !self.gt.contains(req.b) {
            format!("pair ({}, {}) outside universe of {}", req.a, req.b, self.gt.n())
        } else {
            return Ok(());
        };
        Err(Error::RejectedBatch {
            round,
            index,
            reason,
        })
    }

    /// Wins of `a` among `reps` comparisons starting at `ordinal`.
    #[inline]
    fn tally(&mut self, key: u64, req: &Request, ordinal: u64) -> u32 {
        let a_better = self.gt.better(req.a, req.b);
        let wrong = match self.noise.kind {
            NoiseKind::Noiseless => 0,
            NoiseKind::Bernoulli => self
                .sampler
                .wrong_count(req.reps, noise::to_unit(noise::word_at(key, ordinal))),
        };
        if a_better {
            req.reps - wrong
        } else {
            wrong
        }
    }

    /// Outcomes for a (possibly truncated) batch.
    pub fn evaluate(&mut self, round: u32, requests: &[Request]) -> Result<Vec<u32>> {
        let key = noise::round_key(self.run_seed, round);
        let mut ordinal = 0u64;
        let mut out = Vec::with_capacity(requests.len());
        for (i, req) in requests.iter().enumerate() {
            self.validate(round, i, req)?;
            out.push(self.tally(key, req, ordinal));
            ordinal += req.reps as u64;
        }
        Ok(out)
    }
}

/// Runs `alg` to completion against the oracle.
pub fn execute(
    alg: &mut dyn RoundAlgorithm,
    gt: &GroundTruth,
    noise: &NoiseModel,
    cfg: &HarnessConfig,
) -> Result<RunStats> {
    run(alg, gt, noise, cfg, None)
}

/// Like [`execute`], also returning every round's requests and outcomes.
pub fn execute_recorded(
    alg: &mut dyn RoundAlgorithm,
    gt: &GroundTruth,
    noise: &NoiseModel,
    cfg: &HarnessConfig,
) -> Result<(RunStats, Transcript)> {
    let mut t = Transcript::default();
    let stats = run(alg, gt, noise, cfg, Some(&mut t))?;
    Ok((stats, t))
}

fn run(
    alg: &mut dyn RoundAlgorithm,
    gt: &GroundTruth,
    noise: &NoiseModel,
    cfg: &HarnessConfig,
    mut transcript: Option<&mut Transcript>,
) -> Result<RunStats> {
    if cfg.max_rounds == 0 {
        return Err(Error::InvalidParameter("max_rounds must be at least 1".into()));
    }
    let mut oracle = Oracle::new(gt, *noise, cfg.run_seed);
    let mut per_round = Vec::new();
    let mut total = 0u64;
    let mut previous: Option<Vec<u32>> = None;

    loop {
        let mut builder = BatchBuilder::new();
        let step = alg.next_batch(previous.as_deref(), &mut builder)?;
        let output = match step {
            Step::Final(output) => output,
            Step::Batch => {
                let round = per_round.len() as u32 + 1;
                if round > cfg.max_rounds {
                    return Err(Error::RoundLimitExceeded {
                        max_rounds: cfg.max_rounds,
                    });
                }
                let mut requests = builder.into_requests();
                let wanted: u64 = requests.iter().map(|r| r.reps as u64).sum();
                let room = cfg.budget.map(|b| b.saturating_sub(total));
                let halted = matches!(room, Some(room) if wanted > room);
                if let (true, Some(room)) = (halted, room) {
                    truncate_to(&mut requests, room);
                }
                let outcomes = oracle.evaluate(round, &requests)?;
                let used: u64 = requests.iter().map(|r| r.reps as u64).sum();
                per_round.push(used);
                total += used;
                if let Some(t) = transcript.as_deref_mut() {
                    t.rounds.push(RoundRecord {
                        round_index: round,
                        requests,
                        outcomes: outcomes.clone(),
                    });
                }
                if halted {
                    return Ok(RunStats {
                        rounds_used: per_round.len() as u32,
                        comparisons_per_round: per_round,
                        total_comparisons: total,
                        halted: true,
                        output: alg.finalize_on_halt(),
                        correct: None,
                    });
                }
                previous = Some(outcomes);
                continue;
            }
        };
        return Ok(RunStats {
            rounds_used: per_round.len() as u32,
            comparisons_per_round: per_round,
            total_comparisons: total,
            halted: false,
            output,
            correct: None,
        });
    }
}

/// Keeps the longest prefix of comparisons that fits in `room`, splitting
/// the last request's repetitions if needed.
fn truncate_to(requests: &mut Vec<Request>, room: u64) {
    let mut acc = 0u64;
    let mut keep = 0;
    for r in requests.iter_mut() {
        if acc + r.reps as u64 <= room {
            acc += r.reps as u64;
            keep += 1;
            continue;
        }
        let rest = (room - acc) as u32;
        if rest > 0 {
            r.reps = rest;
            keep += 1;
        }
        break;
    }
    requests.truncate(keep);
}

/// Runs several sub-algorithms in the same rounds.
///
/// Each child sees exactly the outcomes of its own requests. Children may
/// finish at different rounds; the group is done when all have finished.
pub struct Lockstep {
    children: Vec<Box<dyn RoundAlgorithm>>,
    outputs: Vec<Option<Vec<ItemId>>>,
    spans: Vec<Option<(usize, usize)>>,
    started: bool,
}

impl Lockstep {
    pub fn new(children: Vec<Box<dyn RoundAlgorithm>>) -> Self {
        let n = children.len();
        Self {
            children,
            outputs: vec![None; n],
            spans: vec![None; n],
            started: false,
        }
    }

    /// Feeds the group's previous outcomes and collects the next round.
    /// Returns `true` once every child has produced its output.
    pub fn advance(
        &mut self,
        previous: Option<&[u32]>,
        batch: &mut BatchBuilder<'_>,
    ) -> Result<bool> {
        let base = batch.len();
        let first = !self.started;
        self.started = true;
        for (i, child) in self.children.iter_mut().enumerate() {
            if self.outputs[i].is_some() {
                continue;
            }
            let mine = match (first, self.spans[i]) {
                (true, _) => None,
                (false, Some((s, e))) => {
                    let prev = previous.ok_or(Error::OutcomeLength {
                        expected: e,
                        got: 0,
                    })?;
                    if prev.len() < e {
                        return Err(Error::OutcomeLength {
                            expected: e,
                            got: prev.len(),
                        });
                    }
                    Some(&prev[s..e])
                }
                (false, None) => None,
            };
            let start = batch.len();
            match child.next_batch(mine, batch)? {
                Step::Final(out) => {
                    self.outputs[i] = Some(out);
                    self.spans[i] = None;
                }
                Step::Batch => self.spans[i] = Some((start - base, batch.len() - base)),
            }
        }
        Ok(self.finished())
    }

    pub fn finished(&self) -> bool {
        self.outputs.iter().all(Option::is_some)
    }

    pub fn outputs(&self) -> Vec<Option<&Vec<ItemId>>> {
        self.outputs.iter().map(Option::as_ref).collect()
    }

    pub fn into_outputs(self) -> Vec<Vec<ItemId>> {
        self.outputs.into_iter().map(Option::unwrap_or_default).collect()
    }

    pub fn halt_outputs(&mut self) -> Vec<Vec<ItemId>> {
        self.children
            .iter_mut()
            .zip(&self.outputs)
            .map(|(c, o)| o.clone().unwrap_or_else(|| c.finalize_on_halt()))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditViolation {
    pub probe: usize,
    pub round: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub probes: usize,
    pub violations: Vec<AuditViolation>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks that no batch depends on outcomes of its own round.
///
/// For each probe a random noiseless order is drawn and a round `t` chosen.
/// Two identically-seeded instances receive the same outcomes for rounds
/// before `t`; while building batch `t`, one sees early outcomes from that
/// order and the other from its mirror image, so every peeked outcome
/// differs. Any difference among batches `1..=t` is a violation.
pub fn audit_adaptiveness(
    factory: &dyn Fn() -> Box<dyn RoundAlgorithm>,
    n: usize,
    max_rounds: u32,
    probe_count: usize,
    seed: u64,
) -> Result<AuditReport> {
    let mut violations = Vec::new();
    for probe in 0..probe_count {
        let gt = GroundTruth::random(n, noise::derive_seed(seed, 0xA0D1, probe as u64))?;
        let mirror = gt.reversed();
        let rounds = count_rounds(&mut *factory(), &gt, max_rounds)?;
        if rounds == 0 {
            continue;
        }
        let t = 1 + (probe as u32 % rounds);
        let a = batches_until(&mut *factory(), &gt, &gt, t)?;
        let b = batches_until(&mut *factory(), &gt, &mirror, t)?;
        if let Some(round) = a.iter().zip(&b).position(|(x, y)| x != y) {
            violations.push(AuditViolation {
                probe,
                round: round as u32 + 1,
            });
        } else if a.len() != b.len() {
            violations.push(AuditViolation {
                probe,
                round: a.len().min(b.len()) as u32 + 1,
            });
        }
    }
    Ok(AuditReport {
        probes: probe_count,
        violations,
    })
}

fn count_rounds(alg: &mut dyn RoundAlgorithm, gt: &GroundTruth, max_rounds: u32) -> Result<u32> {
    let stats = execute(
        alg,
        gt,
        &NoiseModel::noiseless(),
        &HarnessConfig::new(max_rounds, 0),
    )?;
    Ok(stats.rounds_used)
}

/// Batches `1..=t`, with outcomes of rounds `< t` from `gt` and round `t`
/// delivered early from `late_gt`.
fn batches_until(
    alg: &mut dyn RoundAlgorithm,
    gt: &GroundTruth,
    late_gt: &GroundTruth,
    t: u32,
) -> Result<Vec<Vec<Request>>> {
    let mut oracle = Oracle::new(gt, NoiseModel::noiseless(), 0);
    let mut batches = Vec::new();
    let mut previous: Option<Vec<u32>> = None;
    for round in 1..=t {
        let late = late_gt.clone();
        let eval: EarlyEval<'_> = Box::new(move |req: &Request, _ordinal| {
            if late.contains(req.a) && late.contains(req.b) && late.better(req.a, req.b) {
                req.reps
            } else {
                0
            }
        });
        let mut builder = if round == t {
            BatchBuilder::with_early(eval)
        } else {
            BatchBuilder::new()
        };
        match alg.next_batch(previous.as_deref(), &mut builder)? {
            Step::Final(_) => break,
            Step::Batch => {
                let reqs = builder.into_requests();
                if round < t {
                    previous = Some(oracle.evaluate(round, &reqs)?);
                }
                batches.push(reqs);
            }
        }
    }
    Ok(batches)
}
