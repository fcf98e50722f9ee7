//! Artifact writers: CSV tables, JSON reports, plain-text summary.
//!
//! Every writer is deterministic: floats go through Rust's shortest
//! round-trip formatting (always a '.' separator), field order is fixed by
//! the structs, and nothing records wall-clock time. Fields are quoted per
//! RFC 4180 only when they contain a comma, quote, or line break.

use leafwave::sojourn::SojournCatalog;
use leafwave::spectral::SpectralData;
use leafwave::wavetrace::TraceSeries;
use serde::Serialize;
use std::fs::File;
use std::io::{BufWriter, Result, Write};
use std::path::Path;

fn csv_field(raw: &str) -> String {
    if raw.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw.to_string()
    }
}

fn write_row(w: &mut impl Write, fields: &[String]) -> Result<()> {
    let cols: Vec<String> = fields.iter().map(|f| csv_field(f)).collect();
    writeln!(w, "{}", cols.join(","))
}

pub fn write_spectrum_csv(path: &Path, data: &SpectralData) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_row(
        &mut w,
        &["index", "label", "lambda", "sqrt_lambda", "multiplicity", "convention", "provenance"]
            .map(String::from),
    )?;
    for (i, e) in data.entries.iter().enumerate() {
        write_row(
            &mut w,
            &[
                i.to_string(),
                e.label.clone(),
                e.lambda.to_string(),
                e.lambda.sqrt().to_string(),
                e.multiplicity.to_string(),
                data.convention.as_str().to_string(),
                data.provenance.as_str().to_string(),
            ],
        )?;
    }
    w.flush()
}

pub fn write_sojourn_csv(path: &Path, catalog: &SojournCatalog) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_row(
        &mut w,
        &[
            "T",
            "classification",
            "e_T_estimate",
            "witness_count",
            "residual",
            "used_closure_match",
            "start",
            "covector",
        ]
        .map(String::from),
    )?;
    for e in &catalog.entries {
        let join = |xs: &[f64]| xs.iter().map(f64::to_string).collect::<Vec<_>>().join(";");
        write_row(
            &mut w,
            &[
                e.time.to_string(),
                e.classification.as_str().to_string(),
                e.e_t_estimate.to_string(),
                e.witness_count.to_string(),
                e.residual.to_string(),
                e.used_closure_match.to_string(),
                join(&e.witness.start.base.coords),
                join(&e.witness.start.xi),
            ],
        )?;
    }
    w.flush()
}

pub fn write_trace_csv(path: &Path, series: &TraceSeries) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_row(&mut w, &["t", "re", "im", "abs", "lambda_cutoff"].map(String::from))?;
    for (t, v) in series.t.iter().zip(&series.values) {
        write_row(
            &mut w,
            &[
                t.to_string(),
                v.re.to_string(),
                v.im.to_string(),
                v.norm().to_string(),
                series.window.cutoff.to_string(),
            ],
        )?;
    }
    w.flush()
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(&mut w)?;
    w.flush()
}

pub fn write_text(path: &Path, lines: &[String]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for line in lines {
        writeln!(w, "{line}")?;
    }
    w.flush()
}
