use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::series::SeriesMatrix;

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => io_err(path, source),
        other => Error::Csv {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

fn is_time_column(name: &str) -> bool {
    let name = name.trim();
    name.eq_ignore_ascii_case("date") || name.eq_ignore_ascii_case("timestamp")
}

/// Reads a comma-separated file with a header row. A leading `date` or
/// `timestamp` column is skipped; every other column becomes a channel.
/// Row numbers in errors count data rows from 1.
pub fn load_csv(path: impl AsRef<Path>) -> Result<SeriesMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let skip = usize::from(header.first().is_some_and(|h| is_time_column(h)));
    let names: Vec<String> = header[skip..].to_vec();
    if names.is_empty() {
        return Err(Error::Csv {
            path: path.to_path_buf(),
            message: "no value columns".into(),
        });
    }
    let mut channels: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| csv_err(path, e))?;
        if record.len() != header.len() {
            return Err(Error::RaggedRow {
                path: path.to_path_buf(),
                row,
                found: record.len(),
                expected: header.len(),
            });
        }
        for (c, cell) in record.iter().skip(skip).enumerate() {
            let cell = cell.trim();
            let value: f64 = cell.parse().map_err(|_| Error::ParseCell {
                path: path.to_path_buf(),
                row,
                column: names[c].clone(),
                value: cell.to_string(),
            })?;
            if !value.is_finite() {
                return Err(Error::NonFiniteCell {
                    path: path.to_path_buf(),
                    row,
                    column: names[c].clone(),
                });
            }
            channels[c].push(value);
        }
    }
    if channels[0].is_empty() {
        return Err(Error::Csv {
            path: path.to_path_buf(),
            message: "no data rows".into(),
        });
    }
    SeriesMatrix::from_channels(channels, Some(names))
}

/// Writes one row per timestep, one column per channel. Floats use the
/// shortest representation that parses back to the same bits.
pub fn write_series_csv(path: impl AsRef<Path>, series: &SeriesMatrix) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(out, "{}", series.channel_names().join(","))?;
        for t in 0..series.n_timesteps() {
            let row: Vec<String> = (0..series.n_channels()).map(|c| series.get(c, t).to_string()).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| io_err(path, e))
}

/// Two columns: `iteration,loss`, iterations counted from 1.
pub fn write_loss_curve(path: impl AsRef<Path>, losses: &[f64]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut out = BufWriter::new(file);
    let write = |out: &mut BufWriter<File>| -> std::io::Result<()> {
        writeln!(out, "iteration,loss")?;
        for (i, l) in losses.iter().enumerate() {
            writeln!(out, "{},{}", i + 1, l)?;
        }
        out.flush()
    };
    write(&mut out).map_err(|e| io_err(path, e))
}
