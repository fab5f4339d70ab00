use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{run, MetricReport, RunRecord, SampleScore};
use crate::corpus::DatasetManifest;
use crate::metrics::Metric;
use crate::{Error, Result};

pub const RUN_MANIFEST_FORMAT: &str = "alseg.run.v1";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// `iteration,n_labeled,<7 metrics>,n_single_contour,train_loss`.
pub fn write_learning_curve_csv<W: Write>(mut out: W, record: &RunRecord) -> std::io::Result<()> {
    let names: Vec<&str> = Metric::ALL.iter().map(|m| m.name()).collect();
    writeln!(out, "iteration,n_labeled,{},n_single_contour,train_loss", names.join(","))?;
    for r in &record.rows {
        let vals: Vec<String> = Metric::ALL.iter().map(|&m| opt(r.get(m))).collect();
        writeln!(out, "{},{},{},{},{}", r.iteration, r.n_labeled, vals.join(","), r.n_single_contour, r.train_loss)?;
    }
    Ok(())
}

/// `iteration,seconds`. Kept apart from the learning curve so that file is
/// reproducible byte for byte.
pub fn write_timings_csv<W: Write>(mut out: W, timings: &[f64]) -> std::io::Result<()> {
    writeln!(out, "iteration,seconds")?;
    for (i, t) in timings.iter().enumerate() {
        writeln!(out, "{},{t:.3}", i + 1)?;
    }
    Ok(())
}

/// `sample_id,metric,value,single_contour` for the final hold-out scores.
/// Undefined distance metrics (empty boundary) are omitted.
pub fn write_sample_metrics_csv<W: Write>(mut out: W, scores: &[SampleScore]) -> std::io::Result<()> {
    writeln!(out, "sample_id,metric,value,single_contour")?;
    for s in scores {
        for m in Metric::ALL {
            if let Some(v) = s.metrics.get(m) {
                writeln!(out, "{},{},{v},{}", s.sample_id, m.name(), u8::from(s.metrics.single_contour))?;
            }
        }
    }
    Ok(())
}

/// `metric,strategy,aggregate,n,test,statistic,p_value,significant,degenerate`.
pub fn write_comparison_csv<W: Write>(mut out: W, report: &MetricReport) -> std::io::Result<()> {
    writeln!(out, "metric,strategy,aggregate,n,test,statistic,p_value,significant,degenerate")?;
    for c in &report.cells {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            c.metric.name(),
            c.strategy,
            opt(c.aggregate),
            c.n,
            c.test.name(),
            opt(c.statistic),
            c.p_value,
            u8::from(c.significant),
            u8::from(c.degenerate)
        )?;
    }
    Ok(())
}

pub fn write_comparison_json<W: Write>(out: W, report: &MetricReport) -> Result<()> {
    serde_json::to_writer_pretty(out, report)?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct RunManifest {
    format: String,
    record: RunRecord,
}

pub fn save_run_manifest(record: &RunRecord, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let doc = RunManifest { format: RUN_MANIFEST_FORMAT.to_string(), record: record.clone() };
    let text = serde_json::to_string_pretty(&doc)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn load_run_manifest(path: impl AsRef<Path>) -> Result<RunRecord> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    match value.get("format").and_then(|f| f.as_str()) {
        Some(RUN_MANIFEST_FORMAT) => {}
        Some(other) => return Err(Error::parse("format", format!("unsupported run manifest format `{other}`"))),
        None => return Err(Error::parse("format", "missing")),
    }
    let doc: RunManifest = serde_json::from_value(value).map_err(|e| Error::parse("record", e.to_string()))?;
    Ok(doc.record)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutcome {
    pub identical: bool,
    /// Serialized queried-id history of the recorded and the replayed run.
    pub recorded: String,
    pub replayed: String,
}

/// Re-execute the recorded experiment and compare its queried-id history
/// byte for byte.
pub fn replay(record: &RunRecord, dataset: &DatasetManifest) -> Result<ReplayOutcome> {
    if record.dataset != dataset.name {
        return Err(Error::invalid(format!(
            "record was produced on dataset `{}`, got `{}`",
            record.dataset, dataset.name
        )));
    }
    let again = run(&record.config, dataset)?.record;
    let recorded = serde_json::to_string(&record.history)?;
    let replayed = serde_json::to_string(&again.history)?;
    let seeds_match = again.query_seeds == record.query_seeds;
    Ok(ReplayOutcome { identical: seeds_match && recorded == replayed, recorded, replayed })
}
