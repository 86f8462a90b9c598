use std::fs::File;
use std::io::{self, Write};
use std::path::Path;

use bp_core::solvers::IterationRecord;
use serde::Serialize;

use crate::error::{CliError, Result};

pub fn create(path: &Path) -> Result<File> {
    File::create(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Opens `path`, or stdout when it is `None`.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(create(p)?)),
        None => Box::new(io::stdout().lock()),
    })
}

/// Shortest round-trip form, switching to exponent notation for very large
/// or small magnitudes.
pub fn num(v: f64) -> String {
    if v.is_finite() {
        serde_json::Number::from_f64(v).map_or_else(|| v.to_string(), |n| n.to_string())
    } else {
        v.to_string()
    }
}

pub fn write_trace(path: &Path, trace: &[IterationRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    w.write_record(["iter", "f", "l1", "gap", "elapsed_ms"])?;
    for r in trace {
        w.write_record([
            r.k.to_string(),
            num(r.f),
            num(r.l1),
            num(r.gap),
            num(r.elapsed_ms),
        ])?;
    }
    w.flush().map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_json<T: Serialize>(path: Option<&Path>, value: &T) -> Result<()> {
    let mut out = sink(path)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)
        .and_then(|()| out.flush())
        .map_err(|source| CliError::Io {
            path: path.unwrap_or(Path::new("<stdout>")).to_path_buf(),
            source,
        })
}
