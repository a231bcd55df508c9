//! Parallel replication runners. Replications are independent; results are
//! collected in replication order, so output does not depend on scheduling.

use rayon::prelude::*;
use scorebounds_core::experiment::{
    summarize_bounds, summarize_classification, BoundsConfig, BoundsContext, BoundsRep, BoundsRow, ClassConfig,
    ClassContext, ClassRep, ClassRow,
};

use crate::error::{CliError, CliResult};

pub const THREADS_ENV: &str = "SCOREBOUNDS_THREADS";

/// Worker pool sized by `SCOREBOUNDS_THREADS` when set, else by rayon's
/// default.
pub fn thread_pool() -> CliResult<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let n: usize = raw
            .trim()
            .parse()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| CliError::validation(format!("{THREADS_ENV}={raw} is not a positive integer")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Internal(format!("thread pool: {e}")))
}

pub fn bounds_reps(pool: &rayon::ThreadPool, config: BoundsConfig) -> CliResult<Vec<BoundsRep>> {
    let reps = config.reps;
    let ctx = BoundsContext::new(config)?;
    let out = pool.install(|| (0..reps).into_par_iter().map(|r| ctx.rep(r)).collect::<Result<Vec<_>, _>>())?;
    Ok(out)
}

pub fn run_bounds(pool: &rayon::ThreadPool, config: BoundsConfig) -> CliResult<BoundsRow> {
    let n = config.n;
    Ok(summarize_bounds(n, &bounds_reps(pool, config)?))
}

pub fn classification_reps(pool: &rayon::ThreadPool, config: ClassConfig) -> CliResult<Vec<ClassRep>> {
    let reps = config.reps;
    let ctx = ClassContext::new(config)?;
    let out = pool.install(|| (0..reps).into_par_iter().map(|r| ctx.rep(r)).collect::<Result<Vec<_>, _>>())?;
    Ok(out)
}

pub fn run_classification(pool: &rayon::ThreadPool, config: ClassConfig) -> CliResult<Vec<ClassRow>> {
    let n = config.n;
    Ok(summarize_classification(n, &classification_reps(pool, config)?))
}
