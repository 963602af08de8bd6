//! CSV, PGM and run-manifest writers.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde_json::{json, Value};

pub type CsvWriter = csv::Writer<Box<dyn Write>>;

/// CSV writer on `path`, or on stdout when `path` is `None`.
pub fn csv_writer(path: Option<&Path>) -> Result<CsvWriter> {
    let sink: Box<dyn Write> = match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    Ok(csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(sink))
}

/// Shortest decimal form that parses back to the same value.
pub fn num(x: f64) -> String {
    format!("{x}")
}

/// Plain PGM: one row per entry of `rows`, density 0 white (255), 1 black (0).
pub fn write_pgm(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let width = rows.first().map_or(0, Vec::len);
    let mut out = BufWriter::new(
        File::create(path).with_context(|| format!("cannot create {}", path.display()))?,
    );
    writeln!(out, "P2")?;
    writeln!(out, "{width} {}", rows.len())?;
    writeln!(out, "255")?;
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .map(|d| ((1.0 - d.clamp(0.0, 1.0)) * 255.0).round().to_string())
            .collect();
        writeln!(out, "{}", line.join(" "))?;
    }
    out.flush()?;
    Ok(())
}

/// `<output>.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Writes the sidecar manifest of `output`. `argv` replays the run.
pub fn write_manifest(output: &Path, command: &str, resolved: Value) -> Result<PathBuf> {
    let argv: Vec<String> = std::env::args().collect();
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let manifest = json!({
        "tool": "tasep",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "argv": argv,
        "parameters": resolved,
        "output": output.display().to_string(),
        "timestamp": timestamp,
    });
    let path = manifest_path(output);
    let mut file = BufWriter::new(
        File::create(&path).with_context(|| format!("cannot create {}", path.display()))?,
    );
    serde_json::to_writer_pretty(&mut file, &manifest)?;
    writeln!(file)?;
    file.flush()?;
    Ok(path)
}
