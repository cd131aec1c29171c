//! CSV ingestion and emission.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use gpsmc::Matrix;

use crate::error::{ExperimentError, Result};
use crate::report::Table;

/// A CSV file with a header row and numeric fields.
#[derive(Clone, Debug, PartialEq)]
pub struct NumericTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl NumericTable {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| ExperimentError::MissingColumn(name.to_string()))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let j = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[j]).collect())
    }

    /// All columns except `exclude`, in file order.
    pub fn matrix_without(&self, exclude: &[&str]) -> Result<Matrix<f64>> {
        for name in exclude {
            self.column_index(name)?;
        }
        let keep: Vec<usize> = (0..self.columns.len())
            .filter(|&j| !exclude.contains(&self.columns[j].as_str()))
            .collect();
        let mut m = Matrix::with_cols(keep.len());
        for r in &self.rows {
            let row: Vec<f64> = keep.iter().map(|&j| r[j]).collect();
            m.push_row(&row)?;
        }
        Ok(m)
    }

    pub fn matrix(&self) -> Result<Matrix<f64>> {
        self.matrix_without(&[])
    }
}

/// Parses CSV text with a header row. Errors carry the 1-based line number.
pub fn read_numeric_csv<R: Read>(reader: R) -> Result<NumericTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let columns: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != columns.len() {
            return Err(ExperimentError::Ragged {
                line,
                expected: columns.len(),
                found: record.len(),
            });
        }
        let row = record
            .iter()
            .zip(&columns)
            .map(|(field, column)| {
                field.parse::<f64>().map_err(|_| ExperimentError::Parse {
                    line,
                    column: column.clone(),
                    value: field.to_string(),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(NumericTable { columns, rows })
}

pub fn ingest_csv(path: &Path) -> Result<NumericTable> {
    read_numeric_csv(File::open(path)?)
}

/// Writes `table` with a header row; floats use the shortest representation
/// that parses back to the same value.
pub fn write_csv<W: Write>(table: &Table, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(&table.header)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|c| c.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(table: &Table, path: &Path) -> Result<()> {
    write_csv(table, File::create(path)?)
}
