//! Cyclic batched alternating minimization with random initialization,
//! plus the plain single-batch baseline.

use crate::error::{Error, Result};
use crate::measurement::{random_unit, Observations, SensingEnsemble, Signal};
use crate::metrics;
use crate::ops::altmin_step;
use crate::rng::RngStream;

/// Ordered split of row indices 0..m into B contiguous blocks whose
/// sizes differ by at most one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BatchPartition {
    blocks: Vec<std::ops::Range<usize>>,
}

impl BatchPartition {
    pub fn blocks(&self) -> &[std::ops::Range<usize>] {
        &self.blocks
    }

    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn min_block_len(&self) -> usize {
        self.blocks.iter().map(|r| r.len()).min().unwrap_or(0)
    }
}

/// Contiguous partition; the first (m mod B) blocks get the extra index.
pub fn partition(m: usize, b: usize) -> Result<BatchPartition> {
    if b == 0 || b > m {
        return Err(Error::Partition(format!("cannot split m = {m} into B = {b} blocks")));
    }
    let base = m / b;
    let rem = m % b;
    let mut blocks = Vec::with_capacity(b);
    let mut start = 0;
    for i in 0..b {
        let len = base + usize::from(i < rem);
        blocks.push(start..start + len);
        start += len;
    }
    Ok(BatchPartition { blocks })
}

/// Suggested B = max(1, round(c0 ln n)) from the sample-complexity regime.
pub fn suggested_block_count(n: usize, c0: f64) -> Result<usize> {
    if n < 2 {
        return Err(Error::Config("suggested_block_count requires n >= 2".into()));
    }
    if !(c0 > 0.0) {
        return Err(Error::Config("suggested_block_count requires c0 > 0".into()));
    }
    Ok(((c0 * (n as f64).ln()).round() as usize).max(1))
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Number of measurement blocks.
    pub b: usize,
    /// Cap on single-block steps (so B=1 and B>1 budgets compare).
    pub max_iters: usize,
    /// Relative full-data residual threshold.
    pub residual_tol: f64,
    pub record_trace: bool,
    /// Optional forced start; defaults to a random unit vector.
    pub initial: Option<Signal>,
}

impl SolverConfig {
    pub fn new(b: usize, max_iters: usize, residual_tol: f64) -> Self {
        Self { b, max_iters, residual_tol, record_trace: false, initial: None }
    }

    fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::Config("max_iters must be >= 1".into()));
        }
        if !(self.residual_tol > 0.0) {
            return Err(Error::Config("residual_tol must be > 0".into()));
        }
        if self.b == 0 {
            return Err(Error::Config("B must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub iteration: usize,
    pub block: usize,
    pub residual: f64,
    /// theta(x^{(k)}) when ground truth was supplied.
    pub theta: Option<f64>,
    pub dist_phase: Option<f64>,
}

#[derive(Debug, Clone, Default)]
pub struct SolverTrace {
    pub records: Vec<TraceRecord>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub estimate: Signal,
    pub converged: bool,
    pub iterations: usize,
    pub final_residual: f64,
    pub trace: Option<SolverTrace>,
    /// Set when m/B < 4n, where per-block systems get noticeably noisy.
    pub small_block_warning: bool,
}

/// Algorithm: from a random unit start, apply the block operator
/// T^{(k mod B)} cyclically until the full-data relative amplitude
/// residual drops below `residual_tol` or `max_iters` steps elapse.
pub fn run_batched(
    ensemble: &SensingEnsemble,
    y: &Observations,
    cfg: &SolverConfig,
    stream: RngStream,
    truth: Option<&Signal>,
) -> Result<RunResult> {
    cfg.validate()?;
    let m = ensemble.m();
    let n = ensemble.n();
    if y.len() != m {
        return Err(Error::Dimension("run_batched: observation length mismatch".into()));
    }
    if y.norm() == 0.0 {
        return Err(Error::DegenerateObservations);
    }
    let part = partition(m, cfg.b)?;
    if part.min_block_len() < n {
        return Err(Error::Partition(format!(
            "block size {} is smaller than n = {n}",
            part.min_block_len()
        )));
    }

    // Per-block ensembles, each carrying its own factorization.
    let mut block_data = Vec::with_capacity(cfg.b);
    for r in part.blocks() {
        block_data.push((ensemble.row_block(r.clone())?, y.slice(r.clone())));
    }

    let mut x = match &cfg.initial {
        Some(x0) => x0.clone(),
        None => random_unit(n, stream)?,
    };
    if x.dim() != n {
        return Err(Error::Dimension("run_batched: initial guess dimension mismatch".into()));
    }

    let mut trace = cfg.record_trace.then(SolverTrace::default);
    let mut converged = false;
    let mut iterations = 0;
    let mut res = metrics::residual(ensemble, y, &x)?;
    for k in 0..cfg.max_iters {
        let block = k % cfg.b;
        let (ba, by) = &block_data[block];
        x = altmin_step(ba, by, &x)?;
        res = metrics::residual(ensemble, y, &x)?;
        iterations = k + 1;
        if let Some(t) = trace.as_mut() {
            let (theta, dist) = match truth {
                Some(z) => (Some(metrics::theta(&x, z)?), Some(metrics::dist_phase(&x, z)?)),
                None => (None, None),
            };
            t.records.push(TraceRecord { iteration: iterations, block, residual: res, theta, dist_phase: dist });
        }
        if res <= cfg.residual_tol {
            converged = true;
            break;
        }
    }

    Ok(RunResult {
        estimate: x,
        converged,
        iterations,
        final_residual: res,
        trace,
        small_block_warning: m < 4 * n * cfg.b,
    })
}

/// Plain (non-batched) baseline: the same iteration over the full data.
pub fn run_plain(
    ensemble: &SensingEnsemble,
    y: &Observations,
    cfg: &SolverConfig,
    stream: RngStream,
    truth: Option<&Signal>,
) -> Result<RunResult> {
    let mut cfg1 = cfg.clone();
    cfg1.b = 1;
    run_batched(ensemble, y, &cfg1, stream, truth)
}
