use std::io::{Read, Write};
use std::path::Path;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// A numeric table read from CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Option<Vec<String>>,
    pub columns: usize,
    /// Row-major values.
    pub values: Vec<f64>,
}

impl Table {
    pub fn rows(&self) -> usize {
        self.values.len().checked_div(self.columns).unwrap_or(0)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.columns..(i + 1) * self.columns]
    }
}

fn parse_cell(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parses comma-separated numeric rows. A first row containing any
/// non-numeric cell is treated as a header.
pub fn parse_table<R: Read>(reader: R) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let mut header = None;
    let mut columns = 0;
    let mut values = Vec::new();
    let mut data_rows = 0usize;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(i + 1, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = rec.position().map_or(i + 1, |p| p.line() as usize);
        if rec.iter().all(|c| c.is_empty()) {
            continue;
        }
        if header.is_none() && data_rows == 0 && rec.iter().any(|c| parse_cell(c).is_none()) {
            header = Some(rec.iter().map(str::to_owned).collect::<Vec<_>>());
            columns = rec.len();
            continue;
        }
        if columns == 0 {
            columns = rec.len();
        } else if rec.len() != columns {
            return Err(Error::Parse {
                line,
                message: format!("expected {columns} columns, found {}", rec.len()),
            });
        }
        for (j, cell) in rec.iter().enumerate() {
            let v = parse_cell(cell).ok_or_else(|| Error::Parse {
                line,
                message: format!("column {}: '{cell}' is not a finite number", j + 1),
            })?;
            values.push(v);
        }
        data_rows += 1;
    }
    if data_rows == 0 {
        return Err(Error::Parse {
            line: 1,
            message: "no data rows".into(),
        });
    }
    Ok(Table {
        header,
        columns,
        values,
    })
}

pub fn read_table(path: &Path) -> Result<Table> {
    let file = std::fs::File::open(path)?;
    parse_table(std::io::BufReader::new(file))
}

/// Features in all but the last column, response in the last.
pub fn load_csv(path: &Path) -> Result<PointCloud> {
    let table = read_table(path)?;
    table_to_cloud(&table)
}

pub(crate) fn table_to_cloud(table: &Table) -> Result<PointCloud> {
    if table.columns < 2 {
        return Err(Error::Parse {
            line: 1,
            message: format!(
                "need at least 2 columns (features then response), found {}",
                table.columns
            ),
        });
    }
    let d = table.columns - 1;
    let n = table.rows();
    let mut coords = Vec::with_capacity(n * d);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let row = table.row(i);
        coords.extend_from_slice(&row[..d]);
        y.push(row[d]);
    }
    PointCloud::new(d, coords, y)
}

/// Writes rows with shortest round-trip float formatting.
pub fn write_table<W: Write>(writer: W, header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let csv_err = |e: csv::Error| Error::Format(e.to_string());
    if !header.is_empty() {
        w.write_record(header).map_err(csv_err)?;
    }
    for row in rows {
        w.write_record(row.iter().map(|v| format!("{v}"))).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
