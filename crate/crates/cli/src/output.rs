//! CSV and JSON writers.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::commands::Row;
use crate::CliError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Header of every table.
pub const COLUMNS: [&str; 10] = [
    "experiment_id",
    "policy",
    "model",
    "model_param",
    "beta",
    "N",
    "c",
    "metric",
    "value",
    "stderr",
];

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> Result<(), CliError> {
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(COLUMNS).map_err(csv_err)?;
    }
    for r in rows {
        if !r.value.is_finite() || !r.stderr.is_finite() {
            return Err(CliError::Run(format!("non-finite value in row {r:?}")));
        }
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Run(format!("csv: {e}"))
}

pub fn write_json<W: Write, T: Serialize + ?Sized>(value: &T, mut out: W) -> Result<(), CliError> {
    serde_json::to_writer_pretty(&mut out, value)
        .map_err(|e| CliError::Run(format!("json: {e}")))?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

/// Open `path` for writing, or stdout when absent.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>, CliError> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| {
            CliError::Config(format!("out: cannot write {}: {e}", p.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_quoting() {
        let row = Row {
            experiment_id: "a,b".into(),
            policy: "lru".into(),
            model: "pareto".into(),
            model_param: 2.0,
            beta: 0.5,
            n: None,
            c: 0.1,
            metric: "miss_probability".into(),
            value: 0.25,
            stderr: 0.0,
        };
        let mut buf = Vec::new();
        write_csv(&[row], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), COLUMNS.join(","));
        assert_eq!(
            lines.next().unwrap(),
            "\"a,b\",lru,pareto,2.0,0.5,,0.1,miss_probability,0.25,0.0"
        );
    }

    #[test]
    fn empty_table_keeps_header() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().trim(), COLUMNS.join(","));
    }
}
