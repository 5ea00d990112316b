//! Command implementations for the `roundrank` binary.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use roundrank_core::experiment::run_experiment;
use roundrank_core::verify::fit_scaling_exponent;
use roundrank_core::{ExperimentConfig, KSpec, ResultRecord, Summary};

pub mod config;
pub mod suites;

use config::Resolved;
use suites::{run_suite, Check, Suite};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("{0}")]
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Failure(_) => 1,
        }
    }
}

impl From<roundrank_core::Error> for CliError {
    fn from(e: roundrank_core::Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

fn usage(e: roundrank_core::Error) -> CliError {
    CliError::Usage(e.to_string())
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CliError::Usage(format!("cannot create {}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn write_records(records: &[ResultRecord], out: &mut dyn Write) -> Result<(), CliError> {
    for r in records {
        serde_json::to_writer(&mut *out, r).map_err(|e| CliError::Failure(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn summary_line(s: &Summary) -> String {
    format!(
        "trials={} successes={} rate={:.4} wilson=[{:.4}, {:.4}] mean_comparisons={:.1} max_comparisons={} halted={}",
        s.success.trials,
        s.success.successes,
        s.success.rate,
        s.success.lower,
        s.success.upper,
        s.mean_comparisons,
        s.max_comparisons,
        s.halted
    )
}

/// `roundrank run`: one JSON record per trial.
pub fn run(resolved: &Resolved) -> Result<Summary, CliError> {
    let cfg = &resolved.experiment;
    cfg.validate().map_err(usage)?;
    let records = run_experiment(cfg, resolved.jobs)?;
    let summary = Summary::from_records(&records);
    let mut out = open_out(resolved.out.as_deref())?;
    write_records(&records, &mut *out)?;
    out.flush()?;
    let line = summary_line(&summary);
    if resolved.out.is_some() {
        println!("{line}");
    } else {
        eprintln!("{line}");
    }
    Ok(summary)
}

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub n: usize,
    pub k: usize,
    pub summary: Summary,
}

pub const SWEEP_HEADER: &str =
    "n,k,trials,successes,success_rate,wilson_lower,wilson_upper,mean_comparisons,max_comparisons";

/// `roundrank sweep`: a CSV row per grid point and a fitted exponent of
/// mean comparisons against `n` for each `k` setting.
pub fn sweep(resolved: &Resolved) -> Result<Vec<SweepRow>, CliError> {
    let grid = resolved
        .n_grid
        .clone()
        .ok_or_else(|| CliError::Usage("sweep needs an n grid (--grid or n_grid in the config)".into()))?;
    if grid.len() < 3 {
        return Err(CliError::Usage(format!("sweep needs at least 3 grid points, got {}", grid.len())));
    }
    let ks = resolved.k_grid.clone().unwrap_or_else(|| vec![resolved.experiment.k]);
    let configs: Vec<ExperimentConfig> = ks
        .iter()
        .flat_map(|&k| {
            grid.iter().map(move |&n| ExperimentConfig {
                n,
                k,
                ..resolved.experiment.clone()
            })
        })
        .collect();
    for c in &configs {
        c.validate().map_err(usage)?;
    }
    let mut out = open_out(resolved.out.as_deref())?;
    writeln!(out, "{SWEEP_HEADER}")?;
    let mut rows = Vec::new();
    for (ki, k) in ks.iter().enumerate() {
        let mut points = Vec::new();
        for cfg in &configs[ki * grid.len()..(ki + 1) * grid.len()] {
            let records = run_experiment(cfg, resolved.jobs)?;
            let s = Summary::from_records(&records);
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                cfg.n,
                cfg.k(),
                s.success.trials,
                s.success.successes,
                s.success.rate,
                s.success.lower,
                s.success.upper,
                s.mean_comparisons,
                s.max_comparisons
            )?;
            points.push((cfg.n as f64, s.mean_comparisons));
            rows.push(SweepRow {
                n: cfg.n,
                k: cfg.k(),
                summary: s,
            });
        }
        match fit_scaling_exponent(&points) {
            Ok(fit) => writeln!(
                out,
                "# k={} slope={} intercept={} residual={}",
                k_label(*k),
                fit.slope,
                fit.intercept,
                fit.residual
            )?,
            Err(e) => writeln!(out, "# k={} no fit: {e}", k_label(*k))?,
        }
    }
    out.flush()?;
    Ok(rows)
}

fn k_label(k: KSpec) -> String {
    match k {
        KSpec::Fixed(v) => v.to_string(),
        KSpec::Fraction(1) => "n".into(),
        KSpec::Fraction(d) => format!("n/{d}"),
    }
}

/// `roundrank verify`: runs suites and prints one line per check.
pub fn verify(suites: &[Suite], seed: u64, out: &mut dyn Write) -> Result<Vec<Check>, CliError> {
    let mut all = Vec::new();
    for &s in suites {
        for c in run_suite(s, seed)? {
            writeln!(out, "[{}] {c}", s.name())?;
            all.push(c);
        }
    }
    let failed = all.iter().filter(|c| !c.passed).count();
    writeln!(out, "{} checks, {failed} failed", all.len())?;
    out.flush()?;
    if failed > 0 {
        return Err(CliError::Failure(format!("{failed} checks failed")));
    }
    Ok(all)
}
