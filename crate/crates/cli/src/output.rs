use std::io::Write;

use serde::Serialize;

use crate::{Failure, Outcome};

fn io(e: std::io::Error) -> Failure {
    Failure::Usage(format!("writing output: {e}"))
}

/// One JSON object on one line, or indented with `pretty`.
pub fn json<T: Serialize>(value: &T, pretty: bool) -> Outcome {
    let text = if pretty {
        serde_json::to_string_pretty(value)
    } else {
        serde_json::to_string(value)
    }
    .map_err(|e| Failure::Usage(format!("encoding JSON: {e}")))?;
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}").map_err(io)
}

/// Header plus rows as CSV, or as space-aligned columns with `pretty`.
pub fn table(header: &[&str], rows: &[Vec<String>], pretty: bool) -> Outcome {
    let mut out = std::io::stdout().lock();
    if pretty {
        let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
        for row in rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let line = |cells: Vec<&str>| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        writeln!(out, "{}", line(header.to_vec())).map_err(io)?;
        for row in rows {
            writeln!(out, "{}", line(row.iter().map(String::as_str).collect())).map_err(io)?;
        }
        return Ok(());
    }
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let csv_err = |e: csv::Error| Failure::Usage(format!("writing CSV: {e}"));
    w.write_record(header).map_err(csv_err)?;
    for row in rows {
        w.write_record(row).map_err(csv_err)?;
    }
    w.flush().map_err(io)
}
