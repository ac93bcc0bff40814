use std::path::Path;

use super::{CleanProblem, ProblemError};
use crate::linalg::{normalize_rows, LinearSystem};
use crate::scalar::Scalar;

/// A system read from CSV, with a ground truth when one was constructed.
#[derive(Debug, Clone)]
pub struct LoadedCsv<T> {
    pub system: LinearSystem<T>,
    pub truth: Option<Vec<T>>,
}

impl<T> LoadedCsv<T> {
    pub fn into_clean(self) -> Option<CleanProblem<T>> {
        let system = self.system;
        self.truth.map(|truth| CleanProblem { system, truth })
    }
}

/// Reads a numeric CSV whose last column is the label.
///
/// Rows are normalized on load. With `make_consistent`, the least-squares fit
/// `x⋆` of the normalized system becomes the ground truth and the labels are
/// replaced by `A·x⋆`, giving an exactly consistent clean system.
pub fn load_csv_system<T: Scalar>(
    path: &Path,
    has_header: bool,
    make_consistent: bool,
) -> Result<LoadedCsv<T>, ProblemError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_error)?;

    let mut width = None;
    let mut entries = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        let expected = *width.get_or_insert(record.len());
        if record.len() < 2 {
            return Err(ProblemError::ParseError {
                line,
                message: "need at least one feature and a label".into(),
            });
        }
        if record.len() != expected {
            return Err(ProblemError::ParseError {
                line,
                message: format!("expected {expected} fields, found {}", record.len()),
            });
        }
        for (column, field) in record.iter().enumerate() {
            let value: f64 = field.parse().map_err(|_| ProblemError::NonNumericField {
                line,
                column: column + 1,
                value: field.to_string(),
            })?;
            if column + 1 == expected {
                labels.push(T::lit(value));
            } else {
                entries.push(T::lit(value));
            }
        }
    }
    let Some(width) = width else {
        return Err(ProblemError::EmptyFile);
    };
    let system = normalize_rows(&entries, width - 1, &labels)?;
    if !make_consistent {
        return Ok(LoadedCsv {
            system,
            truth: None,
        });
    }
    let truth = system.least_squares_default()?.into_vec();
    let consistent = system.apply(&truth);
    Ok(LoadedCsv {
        system: system.with_labels(consistent)?,
        truth: Some(truth),
    })
}

fn csv_error(err: csv::Error) -> ProblemError {
    let line = err.position().map_or(0, |p| p.line());
    match err.into_kind() {
        csv::ErrorKind::Io(io) => ProblemError::Io(io),
        other => ProblemError::ParseError {
            line,
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
    fn toy_system_is_made_consistent() {
        let f = file("1,0,2\n0,1,3\n1,1,5\n");
        let loaded = load_csv_system::<f64>(f.path(), false, true).unwrap();
        let truth = loaded.truth.clone().unwrap();
        assert!((truth[0] - 2.0).abs() < 1e-10 && (truth[1] - 3.0).abs() < 1e-10);
        let b = loaded.system.labels();
        assert!((b[0] - 2.0).abs() < 1e-10);
        assert!((b[1] - 3.0).abs() < 1e-10);
        assert!((b[2] - 5.0 / 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn header_is_skipped() {
        let f = file("f1,f2,y\n1,0,2\n0,1,3\n");
        let loaded = load_csv_system::<f64>(f.path(), true, false).unwrap();
        assert_eq!(loaded.system.m(), 2);
        assert!(loaded.truth.is_none());
    }

    #[test]
    fn empty_file() {
        let f = file("");
        assert!(matches!(
            load_csv_system::<f64>(f.path(), false, true),
            Err(ProblemError::EmptyFile)
        ));
    }

    #[test]
    fn text_cell_reports_line() {
        let f = file("1,0,2\n0,abc,3\n1,1,5\n");
        match load_csv_system::<f64>(f.path(), false, false) {
            Err(ProblemError::NonNumericField {
                line,
                column,
                value,
            }) => {
                assert_eq!((line, column, value.as_str()), (2, 2, "abc"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn ragged_rows_rejected() {
        let f = file("1,0,2\n0,1\n");
        assert!(matches!(
            load_csv_system::<f64>(f.path(), false, false),
            Err(ProblemError::ParseError { line: 2, .. })
        ));
    }
}
