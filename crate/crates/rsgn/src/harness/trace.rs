//! Trace CSV rows and experiment summaries.
//!
//! The trace schema is fixed, one row per solver iteration, columns in this
//! exact order:
//!
//! ```text
//! experiment_id, sketch, fraction, run, iter, f, delta, rho, accepted, wall_ms, grad_norm
//! ```
//!
//! `rho` may be `-inf` (forced rejection); `f` is always finite;
//! `grad_norm` is empty unless gradient diagnostics were on.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One iteration of one run, as written to the trace file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub experiment_id: String,
    pub sketch: String,
    pub fraction: f64,
    pub run: usize,
    pub iter: usize,
    pub f: f64,
    pub delta: f64,
    pub rho: f64,
    pub accepted: bool,
    pub wall_ms: f64,
    pub grad_norm: Option<f64>,
}

pub fn write_trace(path: &Path, rows: &[TraceRow]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_io)?;
    for row in rows {
        writer.serialize(row).map_err(csv_io)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn read_trace(path: &Path) -> Result<Vec<TraceRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(csv_io)?;
    let mut rows = Vec::new();
    for (idx, record) in reader.deserialize::<TraceRow>().enumerate() {
        // header is line 1, data starts at line 2
        let row = record.map_err(|e| Error::Parse {
            line: idx + 2,
            message: e.to_string(),
        })?;
        if !row.f.is_finite() {
            return Err(Error::Parse {
                line: idx + 2,
                message: format!("non-finite objective value {}", row.f),
            });
        }
        rows.push(row);
    }
    Ok(rows)
}

fn csv_io(e: csv::Error) -> Error {
    Error::Parse {
        line: 0,
        message: e.to_string(),
    }
}

/// Per-cell aggregation over runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellSummary {
    pub sketch: String,
    pub fraction: f64,
    pub runs: usize,
    pub final_f_median: f64,
    pub final_f_min: f64,
    pub final_f_max: f64,
    /// Median iterations to reach `f_target` over the runs that reached it;
    /// absent when no target was set or no run reached it.
    pub iterations_to_target_median: Option<f64>,
    pub runs_reaching_target: usize,
    pub runs_not_reaching_target: usize,
    pub median_wall_ms: f64,
    pub total_wall_ms: f64,
    pub median_ms_per_iter: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub experiment_id: String,
    pub f_target: Option<f64>,
    pub cells: Vec<CellSummary>,
}

impl Summary {
    pub fn cell(&self, sketch: &str, fraction: f64) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.sketch == sketch && c.fraction == fraction)
    }

    /// Plain-text table for terminal output.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "experiment: {}  (f_target: {})\n",
            self.experiment_id,
            self.f_target
                .map_or("none".to_string(), |t| format!("{t:.3e}"))
        ));
        out.push_str(&format!(
            "{:<16} {:>9} {:>5} {:>13} {:>13} {:>13} {:>10} {:>9} {:>12}\n",
            "sketch",
            "fraction",
            "runs",
            "final_f_med",
            "final_f_min",
            "final_f_max",
            "iters_med",
            "reached",
            "ms/iter_med"
        ));
        for cell in &self.cells {
            out.push_str(&format!(
                "{:<16} {:>9.4} {:>5} {:>13.4e} {:>13.4e} {:>13.4e} {:>10} {:>4}/{:<4} {:>12.3}\n",
                cell.sketch,
                cell.fraction,
                cell.runs,
                cell.final_f_median,
                cell.final_f_min,
                cell.final_f_max,
                cell.iterations_to_target_median
                    .map_or("not reached".to_string(), |m| format!("{m:.1}")),
                cell.runs_reaching_target,
                cell.runs,
                cell.median_ms_per_iter,
            ));
        }
        out
    }
}

pub(crate) fn median(values: &mut Vec<f64>) -> f64 {
    assert!(!values.is_empty());
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}

/// Aggregate trace rows into per-cell summaries. Rows must be
/// iteration-ordered within each `(sketch, fraction, run)` group, which is
/// how traces are written.
pub fn summarize_rows(rows: &[TraceRow], f_target: Option<f64>) -> Result<Summary> {
    if rows.is_empty() {
        return Err(Error::EmptyDataset("trace has no rows".into()));
    }
    let experiment_id = rows[0].experiment_id.clone();

    // group keys in first-seen order
    let mut cell_keys: Vec<(String, f64)> = Vec::new();
    for row in rows {
        let key = (row.sketch.clone(), row.fraction);
        if !cell_keys.contains(&key) {
            cell_keys.push(key);
        }
    }

    let mut cells = Vec::new();
    for (sketch, fraction) in cell_keys {
        let cell_rows: Vec<&TraceRow> = rows
            .iter()
            .filter(|r| r.sketch == sketch && r.fraction == fraction)
            .collect();
        let mut run_ids: Vec<usize> = cell_rows.iter().map(|r| r.run).collect();
        run_ids.sort_unstable();
        run_ids.dedup();

        let mut final_f = Vec::new();
        let mut wall = Vec::new();
        let mut ms_per_iter = Vec::new();
        let mut to_target = Vec::new();
        let mut reached = 0usize;
        for &run in &run_ids {
            let run_rows: Vec<&&TraceRow> =
                cell_rows.iter().filter(|r| r.run == run).collect();
            let last = run_rows.last().expect("run has rows");
            final_f.push(last.f);
            wall.push(last.wall_ms);
            let mut per_iter: Vec<f64> = run_rows
                .windows(2)
                .map(|w| w[1].wall_ms - w[0].wall_ms)
                .collect();
            if per_iter.is_empty() {
                per_iter.push(last.wall_ms);
            }
            ms_per_iter.push(median(&mut per_iter));
            if let Some(target) = f_target {
                if let Some(hit) = run_rows.iter().find(|r| r.f <= target) {
                    to_target.push(hit.iter as f64);
                    reached += 1;
                }
            }
        }

        let total_wall_ms = wall.iter().sum();
        cells.push(CellSummary {
            sketch,
            fraction,
            runs: run_ids.len(),
            final_f_median: median(&mut final_f.clone()),
            final_f_min: final_f.iter().cloned().fold(f64::INFINITY, f64::min),
            final_f_max: final_f.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            iterations_to_target_median: if to_target.is_empty() {
                None
            } else {
                Some(median(&mut to_target))
            },
            runs_reaching_target: reached,
            runs_not_reaching_target: if f_target.is_some() {
                run_ids.len() - reached
            } else {
                0
            },
            median_wall_ms: median(&mut wall.clone()),
            total_wall_ms,
            median_ms_per_iter: median(&mut ms_per_iter.clone()),
        });
    }

    Ok(Summary {
        experiment_id,
        f_target,
        cells,
    })
}
