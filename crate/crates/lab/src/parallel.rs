use rayon::prelude::*;

use transport_lab_core::solver::{prepare_regularized, MollifierSpec, SolverOptions, SpaceTimeSolution, TransportProblem};

use crate::{Context, LabError};

pub const THREADS_ENV: &str = "TRANSPORT_LAB_THREADS";

/// Runs `f` on a pool capped by `TRANSPORT_LAB_THREADS` (unset or 0: rayon's
/// default). Results never depend on the pool size: every parallel map is
/// collected in order and reduced sequentially afterwards.
pub fn with_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T, LabError> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|e| LabError::Config(format!("{THREADS_ENV}={v:?}: {e}")))?,
        Err(_) => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| LabError::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

/// `solve_regularized` with the node histories computed in parallel.
pub fn solve(problem: &TransportProblem, spec: &MollifierSpec, opts: SolverOptions, what: &str) -> Result<SpaceTimeSolution, LabError> {
    let ch = prepare_regularized(problem, spec, opts).during(|| what.to_string())?;
    let grid = problem.grid();
    let histories = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            let (a, b) = grid.point(k);
            ch.node_history([a, b])
        })
        .collect::<transport_lab_core::Result<Vec<_>>>()
        .during(|| what.to_string())?;
    ch.assemble(histories).during(|| what.to_string())
}
