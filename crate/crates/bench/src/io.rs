use std::fs::{File, OpenOptions};
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::{Format, RunConfig};
use crate::runner::RunRecord;
use crate::BenchError;

/// Column order of the CSV output.
pub const CSV_COLUMNS: [&str; 11] = [
    "rep", "iter", "n_evals", "method", "problem", "q", "hv", "log_hv_diff", "fit_s", "acq_s", "eval_s",
];

/// JSON document: the run configuration followed by the records.
#[derive(Debug, Serialize, Deserialize)]
pub struct ResultsDocument {
    pub manifest: RunConfig,
    pub records: Vec<RunRecord>,
    #[serde(default)]
    pub errors: Vec<String>,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> BenchError {
    BenchError::Io(format!("{}: {e}", path.display()))
}

/// Writes the records, replacing any existing file.
pub fn write_results(records: &[RunRecord], path: &Path, format: Format, config: &RunConfig) -> Result<(), BenchError> {
    match format {
        Format::Csv => {
            let file = File::create(path).map_err(|e| io_err(path, e))?;
            write_csv(records, file, true).map_err(|e| io_err(path, e))
        }
        Format::Json => write_json(records, &[], path, config),
    }
}

pub fn write_json(records: &[RunRecord], errors: &[String], path: &Path, config: &RunConfig) -> Result<(), BenchError> {
    let doc = ResultsDocument {
        manifest: config.clone(),
        records: records.to_vec(),
        errors: errors.to_vec(),
    };
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &doc).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

/// Appends one replication's records, writing the header first when the file
/// is new or empty.
pub fn append_csv(records: &[RunRecord], path: &Path) -> Result<(), BenchError> {
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| io_err(path, e))?;
    let empty = file.metadata().map_err(|e| io_err(path, e))?.len() == 0;
    write_csv(records, file, empty).map_err(|e| io_err(path, e))
}

fn write_csv<W: Write>(records: &[RunRecord], out: W, header: bool) -> Result<(), csv::Error> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    if header {
        w.write_record(CSV_COLUMNS)?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv(path: &Path) -> Result<Vec<RunRecord>, BenchError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::Reader::from_reader(BufReader::new(file));
    let headers = reader.headers().map_err(|e| io_err(path, e))?.clone();
    if headers.iter().ne(CSV_COLUMNS) {
        return Err(io_err(path, "unexpected CSV header"));
    }
    reader
        .deserialize()
        .collect::<Result<Vec<RunRecord>, _>>()
        .map_err(|e| io_err(path, e))
}

pub fn read_json(path: &Path) -> Result<ResultsDocument, BenchError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| io_err(path, e))
}
