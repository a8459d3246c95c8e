//! Parallel sweep execution.
//!
//! Points run on a dedicated rayon pool; results are collected by index and
//! then sorted by `(alpha, K, eps)`, so the table never depends on worker
//! count or completion order.

use eel_core::diagnostics::Verdict;
use eel_core::evolution::{Outcome, SamplePolicy};
use eel_core::scaling::{breaking_time_with, params_hash, SweepRecord};
use eel_core::SimParams;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub const WORKERS_ENV: &str = "EEL_WORKERS";

/// Worker count: the `EEL_WORKERS` environment variable wins over the
/// command-line flag, which wins over the config file.
pub fn resolve_workers(env: Option<&str>, flag: Option<usize>, config: usize) -> Result<usize> {
    let n = match env {
        Some(raw) => raw
            .trim()
            .parse::<usize>()
            .map_err(|_| Error::InvalidConfig(format!("{WORKERS_ENV}=`{raw}` is not a worker count")))?,
        None => flag.unwrap_or(config),
    };
    if n == 0 {
        return Err(Error::InvalidConfig("worker count must be at least 1".into()));
    }
    Ok(n)
}

/// Runs one point; failures become an undecided record carrying a note
/// instead of aborting the sweep.
pub fn run_point(params: &SimParams, policy: SamplePolicy) -> SweepRecord {
    breaking_time_with(params, policy).unwrap_or_else(|e| SweepRecord {
        alpha: params.alpha,
        sound_speed_sq: params.sound_speed_sq,
        epsilon: params.epsilon,
        t_star: None,
        verdict: Verdict::Undecided,
        outcome: Outcome::NumericalFailure { t: SimParams::T0 },
        note: Some(format!("error: {e}")),
        params_hash: params_hash(params),
    })
}

pub fn run_sweep(points: &[SimParams], policy: SamplePolicy, workers: usize) -> Result<Vec<SweepRecord>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Pool(e.to_string()))?;
    let mut records: Vec<SweepRecord> = pool.install(|| points.par_iter().map(|p| run_point(p, policy)).collect());
    records.sort_by(|a, b| a.key_cmp(b));
    Ok(records)
}
