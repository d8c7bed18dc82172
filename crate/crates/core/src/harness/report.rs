use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::sweep::{ResultRow, Table1Row};
use crate::error::{invalid, Error, Result};

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        context: path.display().to_string(),
        source,
    }
}

fn write_csv<T: Serialize>(rows: &[T], path: &Path) -> Result<()> {
    if rows.is_empty() {
        return Err(invalid("no rows to write"));
    }
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_csv_to(rows, file, &path.display().to_string())
}

fn write_csv_to<T: Serialize, W: Write>(rows: &[T], sink: W, context: &str) -> Result<()> {
    if rows.is_empty() {
        return Err(invalid("no rows to write"));
    }
    let err = |source| Error::Csv {
        context: context.to_string(),
        source,
    };
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
    for r in rows {
        w.serialize(r).map_err(err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: context.to_string(),
        source,
    })
}

/// Header: `gate,scheme,tau_s,gate_time_s,pulse_count,fidelity,fidelity_stderr,seed,error`.
pub fn write_rows_csv(rows: &[ResultRow], path: &Path) -> Result<()> {
    write_csv(rows, path)
}

pub fn write_rows<W: Write>(rows: &[ResultRow], sink: W) -> Result<()> {
    write_csv_to(rows, sink, "<stream>")
}

pub fn read_rows_csv(path: &Path) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().map(|row| row.map_err(csv_err(path))).collect()
}

pub fn write_table1_csv(rows: &[Table1Row], path: &Path) -> Result<()> {
    write_csv(rows, path)
}

pub fn write_table1<W: Write>(rows: &[Table1Row], sink: W) -> Result<()> {
    write_csv_to(rows, sink, "<stream>")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub gate: String,
    pub scheme: String,
    /// Successful rows contributing to the statistics.
    pub n: usize,
    pub failed: usize,
    pub min: Option<f64>,
    pub median: Option<f64>,
    pub max: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub epsilon: f64,
    pub realizations: usize,
    pub seed: u64,
    pub cells: Vec<CellSummary>,
}

fn median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some(0.5 * (sorted[n / 2 - 1] + sorted[n / 2])),
    }
}

/// Min/median/max fidelity per `(gate, scheme)`, in row order.
pub fn summarize(rows: &[ResultRow], epsilon: f64, realizations: usize, seed: u64) -> Summary {
    let mut cells: Vec<CellSummary> = Vec::new();
    let mut i = 0;
    while i < rows.len() {
        let (gate, scheme) = (&rows[i].gate, &rows[i].scheme);
        let group: Vec<&ResultRow> = rows[i..].iter().take_while(|r| &r.gate == gate && &r.scheme == scheme).collect();
        i += group.len();
        let mut values: Vec<f64> = group.iter().filter(|r| r.is_ok()).map(|r| r.fidelity).collect();
        values.sort_by(f64::total_cmp);
        cells.push(CellSummary {
            gate: gate.clone(),
            scheme: scheme.clone(),
            n: values.len(),
            failed: group.len() - values.len(),
            min: values.first().copied(),
            median: median(&values),
            max: values.last().copied(),
        });
    }
    Summary {
        epsilon,
        realizations,
        seed,
        cells,
    }
}

pub fn write_summary_json(summary: &Summary, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(summary).map_err(|source| Error::Json {
        context: "serializing summary".into(),
        source,
    })?;
    text.push('\n');
    std::fs::write(path, text).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })
}
