//! CSV and config-echo writers.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::experiment::RunOutput;
use crate::summary::SummaryTable;

pub const SUMMARY_HEADER: &str = "estimator,mse,mse_se,coverage,dropped";
pub const NA: &str = "NA";

/// `x` with 6 significant digits in the style of C's `%.6g`.
pub fn format_sig6(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mantissa.to_string()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| NA.to_string(), format_sig6)
}

pub fn write_summary<W: Write>(table: &SummaryTable, mut out: W) -> io::Result<()> {
    writeln!(out, "{SUMMARY_HEADER}")?;
    for r in &table.rows {
        writeln!(out, "{},{},{},{},{}", r.estimator, opt(r.mse), opt(r.mse_se), opt(r.coverage), r.dropped)?;
    }
    Ok(())
}

pub fn summary_csv(table: &SummaryTable) -> String {
    let mut buf = Vec::new();
    write_summary(table, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("ascii output")
}

/// One line per replicate: values, interval hits, risks and diagnostics.
pub fn write_records<W: Write>(run: &RunOutput, mut out: W) -> io::Result<()> {
    let labels = &run.layout.labels;
    let with_interval: Vec<usize> =
        (0..labels.len()).filter(|&j| run.records.iter().any(|r| r.hits[j].is_some())).collect();
    let mut header = vec!["index".to_string(), "status".to_string()];
    header.extend(labels.iter().cloned());
    for &j in &with_interval {
        header.push(format!("{}_hit", labels[j]));
        header.push(format!("{}_risk", labels[j]));
    }
    header.extend(run.layout.diagnostics.iter().cloned());
    writeln!(out, "{}", header.join(","))?;
    for r in &run.records {
        let mut row = vec![r.index.to_string(), if r.is_failed() { "failed" } else { "ok" }.to_string()];
        row.extend(r.values.iter().map(|&v| opt(v)));
        for &j in &with_interval {
            row.push(r.hits[j].map_or_else(|| NA.to_string(), |h| (h as u8).to_string()));
            row.push(opt(r.risks[j]));
        }
        row.extend(r.diagnostics.iter().map(|&d| if d.is_finite() { format_sig6(d) } else { NA.to_string() }));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

/// Paths written by [`write_outputs`].
#[derive(Debug, Clone)]
pub struct OutputFiles {
    pub summary: PathBuf,
    pub config: PathBuf,
    pub records: Option<PathBuf>,
}

/// Writes `summary.csv`, `config.json` and optionally `records.csv` into `dir`.
pub fn write_outputs(dir: &Path, cfg: &ExperimentConfig, run: &RunOutput, records: bool) -> io::Result<OutputFiles> {
    fs::create_dir_all(dir)?;
    let summary = dir.join("summary.csv");
    write_summary(&run.summary, io::BufWriter::new(fs::File::create(&summary)?))?;
    let config = dir.join("config.json");
    fs::write(&config, cfg.echo())?;
    let records = if records {
        let path = dir.join("records.csv");
        let mut w = io::BufWriter::new(fs::File::create(&path)?);
        write_records(run, &mut w)?;
        w.flush()?;
        Some(path)
    } else {
        None
    };
    Ok(OutputFiles { summary, config, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sig6_formatting() {
        assert_eq!(format_sig6(0.0), "0");
        assert_eq!(format_sig6(1.0), "1");
        assert_eq!(format_sig6(0.0100321), "0.0100321");
        assert_eq!(format_sig6(94.09), "94.09");
        assert_eq!(format_sig6(123456.7), "123457");
        assert_eq!(format_sig6(1234567.0), "1.23457e+06");
        assert_eq!(format_sig6(-2.5e-7), "-2.5e-07");
        assert_eq!(format_sig6(0.000123456789), "0.000123457");
        assert_eq!(format_sig6(9.999996), "10");
        assert_eq!(format_sig6(999999.6), "1e+06");
    }

    #[test]
    fn empty_table_is_header_only() {
        assert_eq!(summary_csv(&SummaryTable::default()), format!("{SUMMARY_HEADER}\n"));
    }
}
