//! Comma-separated datasets: one sample per row, one column holding an
//! integer class label. A first row that does not parse as numbers is a header.
//! Rows and columns in error messages are 1-based file positions.

use std::path::Path;

use crate::error::DataError;
use crate::scalar::Scalar;
use crate::tasks::Dataset;

pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, label_column: usize) -> Result<Dataset<T>, DataError> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;

    let mut records = Vec::new();
    for record in reader.records() {
        records.push(record.map_err(|e| csv_error(path, e))?);
    }

    let mut first = 0;
    if let Some(head) = records.first() {
        if head.iter().any(|cell| cell.parse::<f64>().is_err()) {
            first = 1;
        }
    }
    let body = &records[first..];
    if body.is_empty() {
        return Err(DataError::Malformed {
            path: path.to_path_buf(),
            message: "no data rows".into(),
        });
    }

    let columns = body[0].len();
    if label_column >= columns {
        return Err(DataError::NoSuchColumn {
            path: path.to_path_buf(),
            column: label_column,
            columns,
        });
    }
    if columns < 2 {
        return Err(DataError::Malformed {
            path: path.to_path_buf(),
            message: "need at least one feature column besides the label".into(),
        });
    }

    let mut features = Vec::with_capacity(body.len() * (columns - 1));
    let mut labels = Vec::with_capacity(body.len());
    for (offset, record) in body.iter().enumerate() {
        let row = first + offset + 1;
        if record.len() != columns {
            return Err(DataError::Ragged {
                path: path.to_path_buf(),
                row,
                expected: columns,
                found: record.len(),
            });
        }
        for (col, cell) in record.iter().enumerate() {
            let value: f64 = cell.parse().map_err(|_| DataError::NonNumeric {
                path: path.to_path_buf(),
                row,
                column: col + 1,
                cell: cell.to_string(),
            })?;
            if col == label_column {
                if !(value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64) {
                    return Err(DataError::LabelOutOfRange {
                        path: path.to_path_buf(),
                        row,
                        value: cell.to_string(),
                    });
                }
                labels.push(value as usize);
            } else if !value.is_finite() {
                return Err(DataError::NonNumeric {
                    path: path.to_path_buf(),
                    row,
                    column: col + 1,
                    cell: cell.to_string(),
                });
            } else {
                features.push(T::of(value));
            }
        }
    }

    let classes = labels.iter().copied().max().unwrap_or(0).max(1) + 1;
    Dataset::new(features, labels, columns - 1, classes)
}

fn csv_error(path: &Path, e: csv::Error) -> DataError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => DataError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => DataError::Malformed {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    #[test]
    fn three_rows_two_features() {
        let f = file("0.5,1.5,0\n2,3,1\n4,5,0\n");
        let ds: Dataset<f64> = load_csv(f.path(), 2).unwrap();
        assert_eq!((ds.len(), ds.feature_dim(), ds.classes()), (3, 2, 2));
        assert_eq!(ds.row(1), &[2.0, 3.0]);
        assert_eq!(ds.labels(), &[0, 1, 0]);
    }

    #[test]
    fn header_row_detected() {
        let f = file("label,x,y\n1,0.1,0.2\n0,0.3,0.4\n");
        let ds: Dataset<f64> = load_csv(f.path(), 0).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.row(0), &[0.1, 0.2]);
    }

    #[test]
    fn non_numeric_cell_names_position() {
        let f = file("1,2,0\n3,abc,1\n");
        match load_csv::<f64>(f.path(), 2).unwrap_err() {
            DataError::NonNumeric { row, column, cell, .. } => {
                assert_eq!((row, column, cell.as_str()), (2, 2, "abc"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_rows_rejected() {
        let f = file("1,2,0\n3,1\n");
        assert!(matches!(
            load_csv::<f64>(f.path(), 2).unwrap_err(),
            DataError::Ragged { row: 2, expected: 3, found: 2, .. }
        ));
    }

    #[test]
    fn bad_labels_rejected() {
        for body in ["1,2,-1\n", "1,2,0.5\n"] {
            let f = file(body);
            assert!(matches!(
                load_csv::<f64>(f.path(), 2).unwrap_err(),
                DataError::LabelOutOfRange { .. }
            ));
        }
    }

    #[test]
    fn single_row_is_valid() {
        let f = file("0.25,1\n");
        let ds: Dataset<f64> = load_csv(f.path(), 1).unwrap();
        assert_eq!(ds.len(), 1);
        assert_eq!(ds.feature_dim(), 1);
    }
}
