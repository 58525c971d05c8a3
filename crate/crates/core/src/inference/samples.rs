use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const SAMPLES_HEADER: [&str; 4] = ["dataset_id", "fid", "run", "avg_dsc"];

/// Average DSC of one training run on an augmented dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleRecord {
    pub dataset_id: String,
    pub fid: f64,
    pub run_index: u32,
    pub avg_dsc: f64,
}

impl SampleRecord {
    pub fn new(dataset_id: impl Into<String>, fid: f64, run_index: u32, avg_dsc: f64) -> Result<Self> {
        let dataset_id = dataset_id.into();
        if !(fid.is_finite() && fid > 0.0) {
            return Err(Error::dataset(&dataset_id, format!("fid must be > 0, got {fid}")));
        }
        if !(0.0..=1.0).contains(&avg_dsc) {
            return Err(Error::dataset(
                &dataset_id,
                format!("avg_dsc must lie in [0, 1], got {avg_dsc}"),
            ));
        }
        Ok(Self {
            dataset_id,
            fid,
            run_index,
            avg_dsc,
        })
    }
}

fn line_error(line: u64, reason: impl std::fmt::Display) -> Error {
    Error::Format(format!("samples line {line}: {reason}"))
}

/// Reads sample CSV (`dataset_id,fid,run,avg_dsc`).
pub fn parse_samples<R: Read>(reader: R) -> Result<Vec<SampleRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr
        .headers()
        .map_err(|e| line_error(1, e))?
        .iter()
        .map(str::to_owned)
        .collect::<Vec<_>>();
    if header != SAMPLES_HEADER {
        return Err(line_error(
            1,
            format!("header must be `{}`, got `{}`", SAMPLES_HEADER.join(","), header.join(",")),
        ));
    }
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            line_error(line, e)
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 4 {
            return Err(line_error(line, format!("expected 4 fields, got {}", rec.len())));
        }
        let num = |i: usize, name: &str| -> Result<f64> {
            rec[i]
                .parse::<f64>()
                .map_err(|_| line_error(line, format!("bad {name} `{}`", &rec[i])))
        };
        let run = rec[2]
            .parse::<u32>()
            .map_err(|_| line_error(line, format!("bad run `{}`", &rec[2])))?;
        let record = SampleRecord::new(&rec[0], num(1, "fid")?, run, num(3, "avg_dsc")?)
            .map_err(|e| line_error(line, e))?;
        out.push(record);
    }
    if out.is_empty() {
        return Err(Error::dataset("samples", "no sample records"));
    }
    Ok(out)
}

pub fn read_samples(path: impl AsRef<Path>) -> Result<Vec<SampleRecord>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_samples(file).map_err(|e| match e {
        Error::Format(msg) => Error::Format(format!("{}: {msg}", path.display())),
        other => other,
    })
}

pub fn write_samples<W: Write>(writer: W, records: &[SampleRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let fail = |e: csv::Error| Error::Format(format!("writing samples: {e}"));
    w.write_record(SAMPLES_HEADER).map_err(fail)?;
    for r in records {
        w.write_record([
            r.dataset_id.clone(),
            r.fid.to_string(),
            r.run_index.to_string(),
            r.avg_dsc.to_string(),
        ])
        .map_err(fail)?;
    }
    w.flush()
        .map_err(|e| Error::Format(format!("writing samples: {e}")))
}

pub fn samples_to_string(records: &[SampleRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_samples(&mut buf, records)?;
    Ok(String::from_utf8(buf).expect("csv writer emits utf-8"))
}
