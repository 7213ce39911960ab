//! CSV and JSON artifacts.

use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::coupled::CouplingSeries;
use crate::Result;

pub const VERDICT_COLUMNS: [&str; 6] = ["statistic", "estimate", "ci_half_width", "reference", "pass", "tolerance"];
pub const SERIES_COLUMNS: [&str; 7] = ["k", "T_k", "mean_f_absZ", "ci_lo", "ci_hi", "mean_absZ", "merged_fraction"];

/// One verdict row. `reference` is empty when no theoretical value exists.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub statistic: String,
    pub estimate: f64,
    pub ci_half_width: f64,
    pub reference: Option<f64>,
    pub pass: bool,
    pub tolerance: String,
}

impl Verdict {
    pub fn new(statistic: impl Into<String>, estimate: f64, pass: bool, tolerance: impl Into<String>) -> Self {
        Verdict {
            statistic: statistic.into(),
            estimate,
            ci_half_width: 0.0,
            reference: None,
            pass,
            tolerance: tolerance.into(),
        }
    }

    pub fn with_ci(mut self, half_width: f64) -> Self {
        self.ci_half_width = half_width;
        self
    }

    pub fn with_reference(mut self, reference: f64) -> Self {
        self.reference = Some(reference);
        self
    }
}

fn fmt(v: f64) -> String {
    format!("{v:.10e}")
}

pub fn write_verdicts<W: Write>(out: W, verdicts: &[Verdict]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(VERDICT_COLUMNS)?;
    for v in verdicts {
        w.write_record([
            v.statistic.clone(),
            fmt(v.estimate),
            fmt(v.ci_half_width),
            v.reference.map(fmt).unwrap_or_default(),
            if v.pass { "pass" } else { "fail" }.to_string(),
            v.tolerance.clone(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_coupling_series<W: Write>(out: W, s: &CouplingSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SERIES_COLUMNS)?;
    for i in 0..s.steps.len() {
        let (v, h) = (s.f_abs_z.values[i], s.f_abs_z.ci_half_widths[i]);
        w.write_record([
            s.steps[i].to_string(),
            fmt(s.f_abs_z.times[i]),
            fmt(v),
            fmt(v - h),
            fmt(v + h),
            fmt(s.abs_z.values[i]),
            fmt(s.merged_fraction[i]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_merge_times<W: Write>(out: W, s: &CouplingSeries) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["pair", "merge_time"])?;
    for (i, t) in s.merge_times.iter().enumerate() {
        w.write_record([i.to_string(), t.map(fmt).unwrap_or_default()])?;
    }
    w.flush()?;
    Ok(())
}

/// Writes rows of a table with a header.
pub fn write_table<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn num(v: f64) -> String {
    fmt(v)
}

/// Collects the files written into one output directory.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root)?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn file(&mut self, name: &str) -> Result<File> {
        let path = self.root.join(name);
        let f = File::create(&path)?;
        self.written.push(path);
        Ok(f)
    }

    pub fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let f = self.file(name)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(f), value)?;
        Ok(())
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn root(&self) -> &Path {
        &self.root
    }
}
