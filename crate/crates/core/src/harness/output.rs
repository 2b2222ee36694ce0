//! CSV, JSON and JSONL emission.

use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::TrialRow;
use crate::algo::StepRecord;
use crate::error::Result;

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Columns: trial, primal, dual, opt, ratio. Missing values are empty cells.
pub fn write_csv(out: &mut impl Write, rows: &[TrialRow]) -> Result<()> {
    writeln!(out, "trial,primal,dual,opt,ratio")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.trial,
            r.primal,
            cell(r.dual),
            cell(r.opt),
            cell(r.ratio)
        )?;
    }
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer_pretty(&mut f, value)?;
    writeln!(f)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let f = std::io::BufReader::new(std::fs::File::open(path)?);
    Ok(serde_json::from_reader(f)?)
}

/// One step record per line.
pub fn write_trace_jsonl(out: &mut impl Write, steps: &[StepRecord]) -> Result<()> {
    for s in steps {
        serde_json::to_writer(&mut *out, s)?;
        writeln!(out)?;
    }
    Ok(())
}
