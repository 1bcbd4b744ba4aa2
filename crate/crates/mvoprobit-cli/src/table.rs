//! CSV ingestion and emission for observation tables.
//!
//! Loading applies the complete-case rule: rows with an empty cell in any
//! column the model uses are dropped with a counted warning; non-empty cells
//! that fail to parse, and outcomes outside their stage range, are hard
//! errors naming the row and column. Unused columns are carried through when
//! they are numeric and dropped with a warning otherwise.

use crate::error::{CliError, Result};
use mvoprobit::likelihood::ObservationTable;
use mvoprobit::model::ModelSpec;
use std::path::Path;

#[derive(Debug)]
pub struct LoadedTable {
    pub table: ObservationTable,
    pub warnings: Vec<String>,
    pub rows_dropped: usize,
}

/// Columns the spec reads: covariates of every equation plus outcomes.
fn used_columns(spec: &ModelSpec) -> Vec<String> {
    let mut used: Vec<String> = Vec::new();
    for eq in &spec.equations {
        for c in &eq.covariates {
            if !used.contains(c) {
                used.push(c.clone());
            }
        }
    }
    for c in &spec.outcome_columns {
        if !used.contains(c) {
            used.push(c.clone());
        }
    }
    used
}

/// Loads a typed observation table for the model.
pub fn load_table(path: &Path, spec: &ModelSpec) -> Result<LoadedTable> {
    load_with_required(path, spec, &used_columns(spec))
}

/// Loads a table requiring only the covariate columns, for prediction on
/// data without observed outcomes.
pub fn load_covariate_table(path: &Path, spec: &ModelSpec) -> Result<LoadedTable> {
    let mut required: Vec<String> = Vec::new();
    for eq in &spec.equations {
        for c in &eq.covariates {
            if !required.contains(c) {
                required.push(c.clone());
            }
        }
    }
    load_with_required(path, spec, &required)
}

fn load_with_required(path: &Path, spec: &ModelSpec, required: &[String]) -> Result<LoadedTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| CliError::Csv {
            path: path.to_path_buf(),
            source: Box::new(e),
        })?;
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| CliError::Csv {
            path: path.to_path_buf(),
            source: Box::new(e),
        })?
        .iter()
        .map(|s| s.trim().to_string())
        .collect();

    for col in required {
        if !headers.contains(col) {
            return Err(CliError::Usage(format!(
                "required column {col:?} is missing from {}",
                path.display()
            )));
        }
    }
    let required_idx: Vec<usize> = required
        .iter()
        .map(|c| headers.iter().position(|h| h == c).expect("checked"))
        .collect();
    // Stage range checks for outcome columns that are present.
    let outcome_limits: Vec<(usize, usize, String)> = spec
        .equations
        .iter()
        .zip(&spec.outcome_columns)
        .filter_map(|(eq, c)| {
            headers
                .iter()
                .position(|h| h == c)
                .filter(|idx| required_idx.contains(idx))
                .map(|idx| (idx, eq.n_stages, c.clone()))
        })
        .collect();

    let mut raw_rows: Vec<csv::StringRecord> = Vec::new();
    let mut rows_dropped = 0usize;
    for (line, record) in reader.records().enumerate() {
        let row = line + 1; // 1-based data row, header excluded
        let record = record.map_err(|e| CliError::Csv {
            path: path.to_path_buf(),
            source: Box::new(e),
        })?;
        let mut missing = false;
        for &idx in &required_idx {
            let cell = record.get(idx).unwrap_or("").trim();
            if cell.is_empty() {
                missing = true;
                break;
            }
        }
        if missing {
            rows_dropped += 1;
            continue;
        }
        // Hard errors for unparseable or out-of-range used cells.
        for &idx in &required_idx {
            let cell = record.get(idx).unwrap_or("").trim();
            let value: f64 = cell.parse().map_err(|_| CliError::Cell {
                row,
                column: headers[idx].clone(),
                message: format!("{cell:?} is not a number"),
            })?;
            if let Some((_, n_stages, name)) =
                outcome_limits.iter().find(|(i, _, _)| *i == idx)
            {
                if value.fract() != 0.0 || value < 0.0 || value as usize >= *n_stages {
                    return Err(CliError::Cell {
                        row,
                        column: name.clone(),
                        message: format!(
                            "outcome {value} is outside the stage range 0..{}",
                            n_stages - 1
                        ),
                    });
                }
            }
        }
        raw_rows.push(record);
    }

    let mut warnings = Vec::new();
    if rows_dropped > 0 {
        warnings.push(format!(
            "{rows_dropped} rows dropped (missing values in used columns)"
        ));
    }
    if raw_rows.is_empty() {
        return Err(CliError::Usage(format!(
            "{} contains no usable data rows",
            path.display()
        )));
    }

    // Assemble columns: used ones are guaranteed numeric; other columns are
    // kept when fully numeric on the retained rows.
    let mut columns: Vec<(String, Vec<f64>)> = Vec::new();
    'col: for (idx, name) in headers.iter().enumerate() {
        let is_required = required_idx.contains(&idx);
        let mut values = Vec::with_capacity(raw_rows.len());
        for record in &raw_rows {
            let cell = record.get(idx).unwrap_or("").trim();
            match cell.parse::<f64>() {
                Ok(v) => values.push(v),
                Err(_) => {
                    if is_required {
                        unreachable!("required cells were validated above");
                    }
                    warnings.push(format!(
                        "column {name:?} dropped (non-numeric values)"
                    ));
                    continue 'col;
                }
            }
        }
        columns.push((name.clone(), values));
    }

    let table = ObservationTable::new(columns)?;
    Ok(LoadedTable {
        table,
        warnings,
        rows_dropped,
    })
}

/// Writes a table as CSV with shortest-round-trip float formatting, so
/// identical tables produce byte-identical files.
pub fn write_table_csv(table: &ObservationTable, path: &Path) -> Result<()> {
    let mut out = String::new();
    let names: Vec<&str> = table.column_names().collect();
    out.push_str(&names.join(","));
    out.push('\n');
    for i in 0..table.n_rows() {
        let mut first = true;
        for (_, values) in table.columns() {
            if !first {
                out.push(',');
            }
            first = false;
            out.push_str(&values[i].to_string());
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use mvoprobit::model::EquationSpec;
    use std::io::Write;

    fn spec() -> ModelSpec {
        ModelSpec {
            equations: vec![EquationSpec {
                name: "e".into(),
                n_stages: 3,
                covariates: vec!["x".into()],
            }],
            outcome_columns: vec!["y".into()],
        }
    }

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    #[test]
    fn loads_and_drops_incomplete_rows() {
        let f = write_tmp("x,y,note\n1.0,0,a\n2.0,1,b\n,2,c\n3.5,,d\n0.5,2,e\n");
        let loaded = load_table(f.path(), &spec()).unwrap();
        assert_eq!(loaded.table.n_rows(), 3);
        assert_eq!(loaded.rows_dropped, 2);
        assert!(loaded.warnings.iter().any(|w| w.contains("2 rows dropped")));
        // The non-numeric passenger column is dropped with a warning.
        assert!(loaded.table.column("note").is_none());
        assert!(loaded.warnings.iter().any(|w| w.contains("note")));
    }

    #[test]
    fn out_of_range_outcome_names_row_and_column() {
        let f = write_tmp("x,y\n1.0,0\n2.0,4\n");
        match load_table(f.path(), &spec()) {
            Err(CliError::Cell { row, column, .. }) => {
                assert_eq!(row, 2);
                assert_eq!(column, "y");
            }
            other => panic!("expected cell error, got {other:?}"),
        }
    }

    #[test]
    fn unparseable_cell_names_row_and_column() {
        let f = write_tmp("x,y\noops,0\n");
        match load_table(f.path(), &spec()) {
            Err(CliError::Cell { row, column, .. }) => {
                assert_eq!(row, 1);
                assert_eq!(column, "x");
            }
            other => panic!("expected cell error, got {other:?}"),
        }
    }

    #[test]
    fn header_only_file_is_empty_data() {
        let f = write_tmp("x,y\n");
        let err = load_table(f.path(), &spec()).unwrap_err();
        assert!(err.to_string().contains("no usable data rows"));
    }

    #[test]
    fn missing_required_column_is_reported() {
        let f = write_tmp("x\n1.0\n");
        let err = load_table(f.path(), &spec()).unwrap_err();
        assert!(err.to_string().contains("\"y\""));
    }

    #[test]
    fn csv_round_trip_is_byte_stable() {
        let f = write_tmp("x,y\n1.25,0\n-0.5,2\n");
        let loaded = load_table(f.path(), &spec()).unwrap();
        let out = tempfile::NamedTempFile::new().unwrap();
        write_table_csv(&loaded.table, out.path()).unwrap();
        let first = std::fs::read(out.path()).unwrap();
        write_table_csv(&loaded.table, out.path()).unwrap();
        let second = std::fs::read(out.path()).unwrap();
        assert_eq!(first, second);
        assert_eq!(
            String::from_utf8(first).unwrap(),
            "x,y\n1.25,0\n-0.5,2\n"
        );
    }
}
