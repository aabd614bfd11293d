//! Training-log CSV files and learning-curve smoothing.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::ppo::IterationMetrics;

pub const METRICS_SCHEMA: &str = "simsec-metrics/1";

pub const METRICS_HEADER: [&str; 11] = [
    "iteration",
    "env_steps",
    "mean_asr",
    "mean_reward",
    "jain",
    "qos_violation_rate",
    "surrogate_loss",
    "value_loss",
    "entropy",
    "clip_fraction",
    "wall_seconds",
];

pub fn write_metrics<W: Write>(out: W, rows: &[IterationMetrics]) -> Result<()> {
    let mut w = MetricsWriter::new(out)?;
    rows.iter().try_for_each(|r| w.push(r))
}

/// Appends rows to an open writer as they are produced.
pub struct MetricsWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(out: W) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new().has_headers(false).from_writer(out);
        inner.write_record(METRICS_HEADER)?;
        Ok(Self { inner })
    }

    pub fn push(&mut self, row: &IterationMetrics) -> Result<()> {
        self.inner.serialize(row)?;
        self.inner.flush()?;
        Ok(())
    }
}

/// Parses a metrics file, rejecting any other header as a schema mismatch.
pub fn read_metrics<R: Read>(input: R) -> Result<Vec<IterationMetrics>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if header.iter().ne(METRICS_HEADER.iter().copied()) {
        return Err(Error::Schema(format!(
            "metrics header {:?} does not match {METRICS_SCHEMA}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    r.deserialize()
        .map(|row| row.map_err(|e| Error::Schema(e.to_string())))
        .collect()
}

pub fn read_metrics_file(path: &Path) -> Result<Vec<IterationMetrics>> {
    let file = std::fs::File::open(path)?;
    read_metrics(file).map_err(|e| match e {
        Error::Schema(m) => Error::Schema(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Trailing moving average over `min(window, i + 1)` points.
pub fn moving_average(values: &[f64], window: usize) -> Result<Vec<f64>> {
    if window == 0 {
        return Err(Error::config("window", "must be at least 1"));
    }
    let out = (0..values.len())
        .map(|i| {
            let n = window.min(i + 1);
            values[i + 1 - n..=i].iter().sum::<f64>() / n as f64
        })
        .collect();
    Ok(out)
}

/// Smoothed `mean_asr` of several runs aligned on `env_steps`; missing cells are empty.
pub fn plot_table(runs: &[(String, Vec<IterationMetrics>)], window: usize) -> Result<String> {
    let mut table: BTreeMap<usize, Vec<Option<f64>>> = BTreeMap::new();
    for (k, (_, rows)) in runs.iter().enumerate() {
        let asr: Vec<f64> = rows.iter().map(|r| r.mean_asr).collect();
        for (row, s) in rows.iter().zip(moving_average(&asr, window)?) {
            table.entry(row.env_steps).or_insert_with(|| vec![None; runs.len()])[k] = Some(s);
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["env_steps".to_string()];
    header.extend(runs.iter().map(|(name, _)| name.clone()));
    w.write_record(&header)?;
    for (steps, cells) in table {
        let mut rec = vec![steps.to_string()];
        rec.extend(cells.iter().map(|c| c.map_or(String::new(), |v| v.to_string())));
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}
