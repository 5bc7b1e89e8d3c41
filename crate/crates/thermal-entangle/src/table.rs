//! Numeric tables with a `key=value` header, written as CSV or JSON.
//!
//! CSV files start with `# key=value` comment lines followed by a header row.
//! JSON files hold `{"meta": {...}, "columns": [...], "rows": [[...]]}`;
//! non-finite numbers are stored as `null`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::Format;
use crate::error::CliError;

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

/// Equality treating NaN as equal to NaN.
impl PartialEq for Table {
    fn eq(&self, other: &Self) -> bool {
        self.meta == other.meta
            && self.columns == other.columns
            && self.rows.len() == other.rows.len()
            && self.rows.iter().zip(&other.rows).all(|(a, b)| {
                a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x == y || (x.is_nan() && y.is_nan()))
            })
    }
}

#[derive(Serialize, Deserialize)]
struct JsonTable {
    meta: serde_json::Map<String, serde_json::Value>,
    columns: Vec<String>,
    rows: Vec<Vec<Option<f64>>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            meta: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn with_meta(mut self, meta: Vec<(String, String)>) -> Self {
        self.meta.extend(meta);
        self
    }

    pub fn note(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_string(), value.to_string()));
    }

    pub fn push(&mut self, row: Vec<f64>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn write(&self, path: &Path, format: Format) -> Result<(), CliError> {
        self.write_to(BufWriter::new(File::create(path)?), format)
    }

    pub fn write_to(&self, mut w: impl Write, format: Format) -> Result<(), CliError> {
        match format {
            Format::Csv => {
                for (k, v) in &self.meta {
                    writeln!(w, "# {k}={v}")?;
                }
                let mut csv = csv::Writer::from_writer(&mut w);
                csv.write_record(&self.columns)?;
                for row in &self.rows {
                    csv.write_record(row.iter().map(|v| format!("{v:e}")))?;
                }
                csv.flush()?;
            }
            Format::Json => {
                let doc = JsonTable {
                    meta: self
                        .meta
                        .iter()
                        .map(|(k, v)| (k.clone(), serde_json::Value::String(v.clone())))
                        .collect(),
                    columns: self.columns.clone(),
                    rows: self
                        .rows
                        .iter()
                        .map(|r| r.iter().map(|v| v.is_finite().then_some(*v)).collect())
                        .collect(),
                };
                serde_json::to_writer_pretty(&mut w, &doc)?;
                writeln!(w)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read(path: &Path, format: Format) -> Result<Self, CliError> {
        match format {
            Format::Csv => {
                let mut meta = Vec::new();
                for line in BufReader::new(File::open(path)?).lines() {
                    let line = line?;
                    let Some(rest) = line.strip_prefix("# ") else { break };
                    let (k, v) = rest
                        .split_once('=')
                        .ok_or_else(|| CliError::Output(format!("bad header line {line:?}")))?;
                    meta.push((k.to_string(), v.to_string()));
                }
                let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
                let columns = r.headers()?.iter().map(String::from).collect();
                let rows = r
                    .records()
                    .map(|rec| {
                        rec?.iter()
                            .map(|s| s.parse::<f64>().map_err(|e| CliError::Output(format!("{s:?}: {e}"))))
                            .collect()
                    })
                    .collect::<Result<_, CliError>>()?;
                Ok(Self { meta, columns, rows })
            }
            Format::Json => {
                let doc: JsonTable = serde_json::from_reader(BufReader::new(File::open(path)?))?;
                Ok(Self {
                    meta: doc
                        .meta
                        .into_iter()
                        .map(|(k, v)| (k, v.as_str().map(String::from).unwrap_or_else(|| v.to_string())))
                        .collect(),
                    columns: doc.columns,
                    rows: doc
                        .rows
                        .into_iter()
                        .map(|r| r.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect())
                        .collect(),
                })
            }
        }
    }
}

/// `dir/stem_suffix.ext` next to `path`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    let name = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) => format!("{stem}_{suffix}.{ext}"),
        None => format!("{stem}_{suffix}"),
    };
    path.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new(&["x", "y"]);
        t.note("kappa", 0.01);
        t.note("axes", "temperature, time");
        t.push(vec![0.0, 1.0 / 3.0]);
        t.push(vec![-2.5e-17, f64::NAN]);
        t
    }

    #[test]
    fn csv_and_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        for (name, f) in [("a.csv", Format::Csv), ("a.json", Format::Json)] {
            let p = dir.path().join(name);
            let t = sample();
            t.write(&p, f).unwrap();
            assert_eq!(Table::read(&p, f).unwrap(), t);
        }
    }

    #[test]
    fn sibling_names() {
        assert_eq!(sibling(Path::new("/x/run.csv"), "grid"), PathBuf::from("/x/run_grid.csv"));
        assert_eq!(sibling(Path::new("run"), "grid"), PathBuf::from("run_grid"));
    }
}
