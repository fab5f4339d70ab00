use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::RunRecord;
use crate::metrics::Metric;
use crate::stats::{paired_t, unpaired_t, wilcoxon_signed_rank, Direction, TestResult};
use crate::{Error, Result};

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    PairedT,
    WelchT,
    Wilcoxon,
}

impl TestKind {
    /// Paired t for overlap scores, Welch for distances, Wilcoxon for
    /// volumetric similarity.
    pub fn for_metric(m: Metric) -> Self {
        match m {
            Metric::VolumetricSimilarity => TestKind::Wilcoxon,
            m if m.is_distance() => TestKind::WelchT,
            _ => TestKind::PairedT,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TestKind::PairedT => "paired_t",
            TestKind::WelchT => "welch_t",
            TestKind::Wilcoxon => "wilcoxon",
        }
    }
}

/// One strategy × metric entry of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportCell {
    pub metric: Metric,
    pub strategy: String,
    /// Mean, or median for volumetric similarity. `None` when no sample
    /// contributes (distance metrics with no single-contour prediction).
    pub aggregate: Option<f64>,
    pub n: usize,
    pub test: TestKind,
    /// `None` when the statistic is infinite (zero-variance convention).
    pub statistic: Option<f64>,
    pub p_value: f64,
    pub degenerate: bool,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub baseline: String,
    pub strategies: Vec<String>,
    /// Metric-major: all strategies for `Metric::ALL[0]`, then the next metric.
    pub cells: Vec<ReportCell>,
}

impl MetricReport {
    pub fn cell(&self, metric: Metric, strategy: &str) -> Option<&ReportCell> {
        self.cells.iter().find(|c| c.metric == metric && c.strategy == strategy)
    }
}

fn median(v: &mut [f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

fn reported(rec: &RunRecord, m: Metric) -> BTreeMap<usize, f64> {
    rec.final_scores
        .iter()
        .filter_map(|s| s.metrics.reported(m).map(|v| (s.sample_id, v)))
        .collect()
}

fn direction(m: Metric) -> Direction {
    if m.higher_is_better() {
        Direction::Greater
    } else {
        Direction::Less
    }
}

fn run_test(m: Metric, strat: &BTreeMap<usize, f64>, base: &BTreeMap<usize, f64>) -> Result<TestResult> {
    let dir = direction(m);
    match TestKind::for_metric(m) {
        TestKind::WelchT => {
            let x: Vec<f64> = strat.values().copied().collect();
            let y: Vec<f64> = base.values().copied().collect();
            unpaired_t(&x, &y, dir)
        }
        kind => {
            // pair on the sample ids both runs report
            let (x, y): (Vec<f64>, Vec<f64>) = strat
                .iter()
                .filter_map(|(id, &v)| base.get(id).map(|&b| (v, b)))
                .unzip();
            if kind == TestKind::PairedT {
                paired_t(&x, &y, dir)
            } else {
                wilcoxon_signed_rank(&x, &y, dir)
            }
        }
    }
}

/// Compare each record's final hold-out scores with the baseline's.
pub fn compare(records: &[RunRecord], baseline: &RunRecord) -> Result<MetricReport> {
    let ids = |r: &RunRecord| -> Vec<usize> {
        let mut v: Vec<usize> = r.final_scores.iter().map(|s| s.sample_id).collect();
        v.sort_unstable();
        v
    };
    let base_ids = ids(baseline);
    if base_ids.is_empty() {
        return Err(Error::invalid("baseline record has no hold-out scores"));
    }
    for r in records {
        if r.dataset != baseline.dataset || ids(r) != base_ids {
            return Err(Error::invalid(format!(
                "record `{}` was evaluated on a different hold-out set than baseline `{}`",
                r.label, baseline.label
            )));
        }
    }
    let mut cells = Vec::with_capacity(Metric::ALL.len() * records.len());
    for m in Metric::ALL {
        let base = reported(baseline, m);
        for r in records {
            let strat = reported(r, m);
            let mut values: Vec<f64> = strat.values().copied().collect();
            let aggregate = if m == Metric::VolumetricSimilarity {
                median(&mut values)
            } else if values.is_empty() {
                None
            } else {
                Some(values.iter().sum::<f64>() / values.len() as f64)
            };
            let t = run_test(m, &strat, &base)?;
            cells.push(ReportCell {
                metric: m,
                strategy: r.label.clone(),
                aggregate,
                n: strat.len(),
                test: TestKind::for_metric(m),
                statistic: t.statistic.is_finite().then_some(t.statistic),
                p_value: t.p_one_sided,
                degenerate: t.degenerate,
                significant: t.p_one_sided < SIGNIFICANCE_LEVEL,
            });
        }
    }
    Ok(MetricReport {
        baseline: baseline.label.clone(),
        strategies: records.iter().map(|r| r.label.clone()).collect(),
        cells,
    })
}
