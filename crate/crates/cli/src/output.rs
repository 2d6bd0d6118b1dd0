//! Row types and the CSV/JSON writers.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// One grid point. CSV column order is the field order.
#[derive(Debug, Clone, Serialize)]
pub struct Row {
    pub log_r: f64,
    pub psi: f64,
    pub value_re: f64,
    pub value_im: f64,
    pub log_scale: f64,
    pub abs_error: f64,
    pub region: String,
    pub rho_z: Option<f64>,
    pub theta_z: Option<f64>,
}

/// A row plus verb-specific detail, which only the JSON output carries.
#[derive(Debug, Clone, Serialize)]
pub struct Record {
    #[serde(flatten)]
    pub row: Row,
    #[serde(flatten)]
    pub extra: serde_json::Map<String, serde_json::Value>,
}

pub fn sink(out: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// CSV takes the flat rows; JSON gets one object for a single point and
/// an array otherwise.
pub fn write_records(w: &mut dyn Write, records: &[Record], format: Format, single: bool) -> io::Result<()> {
    match format {
        Format::Csv => write_csv(w, records.iter().map(|r| &r.row)),
        Format::Json if single && records.len() == 1 => write_json(w, &records[0]),
        Format::Json => write_json(w, &records),
    }
}

pub fn write_csv<T: Serialize>(w: &mut dyn Write, rows: impl IntoIterator<Item = T>) -> io::Result<()> {
    let mut c = csv::Writer::from_writer(w);
    for r in rows {
        c.serialize(r).map_err(io::Error::other)?;
    }
    c.flush()
}

pub fn write_json<T: Serialize + ?Sized>(w: &mut dyn Write, value: &T) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut *w, value).map_err(io::Error::other)?;
    writeln!(w)?;
    w.flush()
}
