//! Classification dataset loaders.
//!
//! Two interchange formats are supported:
//!
//! * **LIBSVM sparse text** — one observation per line,
//!   `<label> <index>:<value> <index>:<value> ...` with 1-based feature
//!   indices. Indices are converted to 0-based on load.
//! * **Dense CSV** — one observation per line, comma-separated numbers, the
//!   label in a configurable column (default: the last column).
//!
//! Labels may be `−1/+1` or `0/1`; `0/1` are remapped to `−1/+1`. Any other
//! label value, and any malformed line, aborts the load with its line
//! number.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

use super::{DataMatrix, SparseRowMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetFormat {
    LibsvmSparse,
    DenseCsv,
}

/// Load observations and `±1` labels from `path`.
///
/// `label_column` applies to the CSV format only (`None` = last column).
pub fn load_dataset(
    path: &Path,
    format: DatasetFormat,
    label_column: Option<usize>,
) -> Result<(DataMatrix, Vec<f64>)> {
    let text = fs::read_to_string(path)?;
    match format {
        DatasetFormat::LibsvmSparse => parse_libsvm(&text),
        DatasetFormat::DenseCsv => parse_dense_csv(&text, label_column),
    }
}

fn remap_label(raw: f64, line: usize) -> Result<f64> {
    match raw {
        v if v == 1.0 => Ok(1.0),
        v if v == -1.0 => Ok(-1.0),
        v if v == 0.0 => Ok(-1.0),
        other => Err(Error::InvalidLabel {
            row: line,
            value: other,
        }),
    }
}

fn parse_libsvm(text: &str) -> Result<(DataMatrix, Vec<f64>)> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut max_index = 0usize;

    for (line_no, line) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_token = tokens.next().expect("non-empty line has a first token");
        let raw: f64 = label_token.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("bad label '{label_token}'"),
        })?;
        labels.push(remap_label(raw, line_no)?);

        let mut entries = Vec::new();
        for token in tokens {
            let (idx, val) = token.split_once(':').ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("expected index:value, got '{token}'"),
            })?;
            let index: usize = idx.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("bad feature index '{idx}'"),
            })?;
            if index == 0 {
                return Err(Error::Parse {
                    line: line_no,
                    message: "feature indices are 1-based; got 0".into(),
                });
            }
            let value: f64 = val.parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("bad feature value '{val}'"),
            })?;
            max_index = max_index.max(index);
            entries.push((index - 1, value));
        }
        entries.sort_unstable_by_key(|&(j, _)| j);
        rows.push(entries);
    }

    if rows.is_empty() {
        return Err(Error::EmptyDataset("no observations in LIBSVM file".into()));
    }
    Ok((
        DataMatrix::Sparse(SparseRowMatrix::from_rows(max_index, rows)),
        labels,
    ))
}

fn parse_dense_csv(text: &str, label_column: Option<usize>) -> Result<(DataMatrix, Vec<f64>)> {
    let mut features: Vec<f64> = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;

    for (line_no, line) in text.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let values: Vec<f64> = line
            .split(',')
            .map(|tok| {
                tok.trim().parse::<f64>().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("bad number '{}'", tok.trim()),
                })
            })
            .collect::<Result<_>>()?;
        if values.len() < 2 {
            return Err(Error::Parse {
                line: line_no,
                message: "need at least one feature and a label".into(),
            });
        }
        match width {
            None => width = Some(values.len()),
            Some(w) if w != values.len() => {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {w} columns, got {}", values.len()),
                });
            }
            Some(_) => {}
        }
        let label_idx = label_column.unwrap_or(values.len() - 1);
        if label_idx >= values.len() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("label column {label_idx} out of range"),
            });
        }
        labels.push(remap_label(values[label_idx], line_no)?);
        for (j, &v) in values.iter().enumerate() {
            if j != label_idx {
                features.push(v);
            }
        }
    }

    if labels.is_empty() {
        return Err(Error::EmptyDataset("no observations in CSV file".into()));
    }
    let cols = width.expect("at least one row parsed") - 1;
    let rows = labels.len();
    Ok((
        DataMatrix::Dense(DenseMatrix::from_rows(rows, cols, features)),
        labels,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_temp(content: &str) -> tempfile::NamedTempFile {
        let mut file = tempfile::NamedTempFile::new().unwrap();
        file.write_all(content.as_bytes()).unwrap();
        file
    }

    #[test]
    fn libsvm_basic_line() {
        let file = write_temp("+1 3:1.5 7:-2\n0 1:0.5\n");
        let (data, labels) =
            load_dataset(file.path(), DatasetFormat::LibsvmSparse, None).unwrap();
        assert_eq!(labels, vec![1.0, -1.0]); // 0 remapped to −1
        assert_eq!(data.cols(), 7);
        assert_eq!(data.rows(), 2);
        // 1-based indices 3 and 7 land on 0-based 2 and 6
        let x = vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0];
        assert_eq!(data.dot_row(0, &x), 1.5);
        let x = vec![0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0];
        assert_eq!(data.dot_row(0, &x), -2.0);
    }

    #[test]
    fn libsvm_malformed_line_reports_location() {
        let file = write_temp("+1 3:1.5\n-1 oops\n");
        let err = load_dataset(file.path(), DatasetFormat::LibsvmSparse, None).unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn libsvm_empty_file_is_rejected() {
        let file = write_temp("\n\n");
        assert!(matches!(
            load_dataset(file.path(), DatasetFormat::LibsvmSparse, None),
            Err(Error::EmptyDataset(_))
        ));
    }

    #[test]
    fn csv_trailing_label_convention() {
        let file = write_temp("1.0,2.0,1\n-0.5,0.25,0\n");
        let (data, labels) = load_dataset(file.path(), DatasetFormat::DenseCsv, None).unwrap();
        assert_eq!(labels, vec![1.0, -1.0]);
        assert_eq!(data.cols(), 2);
        assert_eq!(data.dot_row(0, &[1.0, 0.0]), 1.0);
        assert_eq!(data.dot_row(0, &[0.0, 1.0]), 2.0);
    }

    #[test]
    fn csv_custom_label_column() {
        let file = write_temp("1,5.0,6.0\n-1,7.0,8.0\n");
        let (data, labels) =
            load_dataset(file.path(), DatasetFormat::DenseCsv, Some(0)).unwrap();
        assert_eq!(labels, vec![1.0, -1.0]);
        assert_eq!(data.dot_row(1, &[1.0, 1.0]), 15.0);
    }

    #[test]
    fn csv_bad_label_is_rejected() {
        let file = write_temp("1.0,2.0,3\n");
        assert!(matches!(
            load_dataset(file.path(), DatasetFormat::DenseCsv, None),
            Err(Error::InvalidLabel { row: 1, .. })
        ));
    }

    #[test]
    fn csv_ragged_rows_are_rejected() {
        let file = write_temp("1.0,2.0,1\n1.0,1\n");
        assert!(matches!(
            load_dataset(file.path(), DatasetFormat::DenseCsv, None),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
