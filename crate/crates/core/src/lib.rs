//! Round-limited selection and sorting with pairwise comparisons.
//!
//! Algorithms are state machines driven by [`harness::execute`], which
//! issues their comparisons one round at a time against a hidden
//! [`GroundTruth`], optionally with independent Bernoulli noise.

pub mod error;
pub mod experiment;
pub mod harness;
pub mod model;
pub mod noise;
pub mod noiseless;
pub mod noisy;
pub mod tables;
pub mod verify;

pub use error::{Error, Result};
pub use harness::{
    audit_adaptiveness, execute, execute_recorded, AuditReport, BatchBuilder, HarnessConfig,
    Lockstep, Request, RoundAlgorithm, RunStats, Step, Transcript,
};
pub use model::{
    compare, make_ground_truth, true_sorted_topk, ComparisonOutcome, ComparisonRequest,
    GroundTruth, ItemId, NoiseCoordinates, NoiseKind, NoiseModel, Padding,
};
pub use noisy::AlgoConstants;
pub use experiment::{AlgorithmKind, ExperimentConfig, KSpec, ResultRecord, Summary};
pub use verify::{ScalingFit, SuccessRate, TaskKind};
