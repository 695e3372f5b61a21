//! Experiment driver: seeded multi-run sweeps over sketch kinds and block
//! sizes, with machine-readable convergence traces.
//!
//! Each `(sketch, fraction, run)` cell derives its own child seed from the
//! base seed and the cell indices, so traces are reproducible regardless of
//! sweep order or how cells are scheduled across workers. Cells execute in
//! parallel under the `parallel` feature; output order is fixed either way.

mod config;
mod trace;

pub use config::{load_spec, ExperimentSpec, ProblemSpec, SolverVariant};
pub use trace::{read_trace, summarize_rows, write_trace, CellSummary, Summary, TraceRow};

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::linalg::mix_seed;
use crate::sketch::SketchKind;
use crate::solver::{rsgn_qr, rsgn_tr, QrConfig, RunTrace, Termination, TrConfig};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Output locations and the in-memory summary of a completed experiment.
#[derive(Debug)]
pub struct RunOutput {
    pub trace_path: PathBuf,
    pub summary_path: PathBuf,
    pub summary: Summary,
    pub numerical_failures: usize,
}

#[derive(Debug, Clone)]
struct Cell {
    run_idx: usize,
    kind: SketchKind,
    fraction: f64,
    l: usize,
    seed: u64,
}

/// Block size from a fraction of the dimension.
fn block_size(fraction: f64, d: usize) -> usize {
    ((fraction * d as f64).round() as usize).clamp(1, d)
}

/// Run the full sweep described by `spec`, writing `trace.csv` and
/// `summary.json` under `out_dir`.
///
/// `workers` caps the number of concurrently executing cells (0 = rayon's
/// default); per-cell results are identical regardless.
pub fn run_experiment(spec: &ExperimentSpec, out_dir: &Path, workers: usize) -> Result<RunOutput> {
    spec.validate()?;
    let (problem, x0) = spec.problem.build()?;
    let d = problem.dim();

    let mut cells = Vec::new();
    for (kind_idx, &kind) in spec.sketches.iter().enumerate() {
        for (fraction_idx, &fraction) in spec.fractions.iter().enumerate() {
            let l = block_size(fraction, d);
            if kind == SketchKind::Identity && l != d {
                return Err(Error::InvalidConfig(format!(
                    "identity sketch requires fraction 1.0 (got {fraction} -> l = {l}, d = {d})"
                )));
            }
            for run_idx in 0..spec.runs {
                cells.push(Cell {
                    run_idx,
                    kind,
                    fraction,
                    l,
                    seed: mix_seed(
                        spec.base_seed,
                        &[kind_idx as u64, fraction_idx as u64, run_idx as u64],
                    ),
                });
            }
        }
    }

    let run_cell = |cell: &Cell| -> Result<RunTrace> {
        // A full-block sampling sweep cell is plain Gauss-Newton: drawing d
        // coordinates with replacement would both miss and repeat columns,
        // so fraction 1.0 means the complete column set.
        let effective_kind = if cell.kind == SketchKind::Sampling && cell.l == d {
            SketchKind::Identity
        } else {
            cell.kind
        };
        match spec.variant {
            SolverVariant::Tr => {
                let config = TrConfig {
                    eta: spec.eta,
                    l: cell.l,
                    sketch: effective_kind,
                    max_iters: spec.budget,
                    f_target: spec.f_target,
                    grad_diag_every: spec.grad_diag_every,
                    seed: cell.seed,
                    cg_rel_tol: spec.cg_rel_tol,
                    cg_max_iter: spec.cg_max_iter,
                    x0: Some(x0.clone()),
                    ..TrConfig::new(cell.l, effective_kind)
                        .with_radius_factors(spec.gamma1, spec.c)
                        .with_delta0(spec.delta0)
                };
                rsgn_tr(problem.as_ref(), &config)
            }
            SolverVariant::Qr => {
                let config = QrConfig {
                    eta: spec.eta,
                    l: cell.l,
                    sketch: effective_kind,
                    max_iters: spec.budget,
                    f_target: spec.f_target,
                    grad_diag_every: spec.grad_diag_every,
                    seed: cell.seed,
                    sigma0: spec.sigma0,
                    cg_rel_tol: spec.cg_rel_tol,
                    cg_max_iter: spec.cg_max_iter,
                    x0: Some(x0.clone()),
                    ..QrConfig::new(cell.l, effective_kind)
                };
                rsgn_qr(problem.as_ref(), &config)
            }
        }
    };

    let traces: Vec<Result<RunTrace>> = execute(&cells, workers, run_cell);

    let mut rows = Vec::new();
    let mut numerical_failures = 0usize;
    for (cell, trace) in cells.iter().zip(traces) {
        let trace = trace?;
        if trace.termination == Termination::NumericalFailure {
            numerical_failures += 1;
            log::warn!(
                "cell (sketch {}, fraction {}, run {}) ended in numerical failure",
                cell.kind,
                cell.fraction,
                cell.run_idx
            );
        }
        for record in &trace.records {
            rows.push(TraceRow {
                experiment_id: spec.experiment_id.clone(),
                sketch: cell.kind.to_string(),
                fraction: cell.fraction,
                run: cell.run_idx,
                iter: record.k,
                f: record.f_value,
                delta: record.delta_or_sigma,
                rho: record.rho,
                accepted: record.accepted,
                wall_ms: record.wall_clock_ms,
                grad_norm: record.full_gradient_norm,
            });
        }
    }

    fs::create_dir_all(out_dir)?;
    let trace_path = out_dir.join("trace.csv");
    write_trace(&trace_path, &rows)?;

    let summary = summarize_rows(&rows, spec.f_target)?;
    let summary_path = out_dir.join("summary.json");
    let json = serde_json::to_string_pretty(&summary)
        .map_err(|e| Error::InvalidConfig(format!("summary serialization: {e}")))?;
    fs::write(&summary_path, json)?;

    Ok(RunOutput {
        trace_path,
        summary_path,
        summary,
        numerical_failures,
    })
}

#[cfg(feature = "parallel")]
fn execute<T: Send>(cells: &[Cell], workers: usize, f: impl Fn(&Cell) -> T + Send + Sync) -> Vec<T> {
    if workers == 1 {
        return cells.iter().map(f).collect();
    }
    if workers == 0 {
        return cells.par_iter().map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .expect("thread pool construction");
    pool.install(|| cells.par_iter().map(f).collect())
}

#[cfg(not(feature = "parallel"))]
fn execute<T>(cells: &[Cell], _workers: usize, f: impl Fn(&Cell) -> T) -> Vec<T> {
    cells.iter().map(f).collect()
}

/// Aggregate an existing trace file; `f_target` enables
/// iterations-to-target statistics.
pub fn summarize(trace_path: &Path, f_target: Option<f64>) -> Result<Summary> {
    let rows = read_trace(trace_path)?;
    summarize_rows(&rows, f_target)
}
