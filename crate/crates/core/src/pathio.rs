//! Path CSV interchange: header `t,x`, one row per grid point, floats at 17
//! significant digits.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{BridgeError, Result};
use crate::model::{SamplePath, TimeGrid};

/// Round-trip-safe decimal rendering with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_path_csv(path: &SamplePath, out: &Path) -> Result<()> {
    let file = File::create(out).map_err(|e| BridgeError::io(out, e))?;
    write_path(path, file).map_err(|e| BridgeError::io(out, e))
}

pub fn write_path<W: Write>(path: &SamplePath, sink: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    w.write_record(["t", "x"])?;
    for (t, x) in path.times().iter().zip(path.values()) {
        w.write_record([fmt_f64(*t), fmt_f64(*x)])?;
    }
    w.flush()
}

/// Reads a path CSV. The file carries no horizon; `horizon` supplies `T`.
pub fn read_path_csv(file: &Path, horizon: f64) -> Result<SamplePath> {
    let parse_err = |message: String| BridgeError::Parse {
        path: file.to_path_buf(),
        message,
    };
    let mut reader = csv::Reader::from_path(file).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => BridgeError::io(file, io),
        other => parse_err(format!("{other:?}")),
    })?;
    let headers = reader.headers().map_err(|e| parse_err(e.to_string()))?;
    if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "x" {
        return Err(parse_err(format!(
            "expected header `t,x`, got `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(|e| parse_err(e.to_string()))?;
        let field = |i: usize| -> Result<f64> {
            record[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| parse_err(format!("row {}: `{}`: {e}", row + 1, &record[i])))
        };
        times.push(field(0)?);
        values.push(field(1)?);
    }
    SamplePath::new(TimeGrid::new(times)?, values, horizon)
}
