//! Active-learning experiment driver: seeding, the query → annotate → train
//! → evaluate loop, learning curves, comparison tables and replay.

mod config;
mod io;
mod report;

pub use config::{ExperimentConfig, Variant, DEFAULT_SEEDING_MAX_EPOCHS};
pub use io::{
    load_run_manifest, replay, save_run_manifest, write_comparison_csv, write_comparison_json, write_learning_curve_csv,
    write_sample_metrics_csv, write_timings_csv, ReplayOutcome, RUN_MANIFEST_FORMAT,
};
pub use report::{compare, MetricReport, ReportCell, TestKind};

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corpus::{init_pool_with_count, DatasetManifest, PoolState, QueryRecord};
use crate::learner::{self, Example, ModelState};
use crate::metrics::{binarize, evaluate, Metric, SampleMetrics};
use crate::strategies::{query, QueryContext, StrategySpec};
use crate::{exec, rng};
use crate::{Error, Result};

const POOL_STREAM: u64 = 0xB001;
const QUERY_STREAM: u64 = 0x0E41;

/// Hold-out scores after one iteration. Distance metrics average the
/// single-contour predictions only and are `None` when there are none.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRow {
    pub iteration: usize,
    pub n_labeled: usize,
    pub dice: f64,
    pub precision: f64,
    pub sensitivity: f64,
    pub volumetric_similarity: f64,
    pub mean_surface_distance: Option<f64>,
    pub avg_hausdorff: Option<f64>,
    pub hd95: Option<f64>,
    pub n_single_contour: usize,
    pub train_loss: f64,
}

impl IterationRow {
    pub fn get(&self, m: Metric) -> Option<f64> {
        match m {
            Metric::Dice => Some(self.dice),
            Metric::Precision => Some(self.precision),
            Metric::Sensitivity => Some(self.sensitivity),
            Metric::VolumetricSimilarity => Some(self.volumetric_similarity),
            Metric::MeanSurfaceDistance => self.mean_surface_distance,
            Metric::AvgHausdorff => self.avg_hausdorff,
            Metric::Hd95 => self.hd95,
        }
    }
}

/// Metrics of one hold-out sample, keyed by its dataset id.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleScore {
    pub sample_id: usize,
    pub metrics: SampleMetrics,
}

/// Everything needed to report and replay a run. Deterministic under the
/// config seed; wall-clock timings live in [`RunOutcome`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub label: String,
    pub dataset: String,
    pub config: ExperimentConfig,
    pub initial_labeled: usize,
    pub seeding_epochs: usize,
    pub seeding_dice: f64,
    pub query_seeds: Vec<u64>,
    pub history: Vec<QueryRecord>,
    pub rows: Vec<IterationRow>,
    pub final_scores: Vec<SampleScore>,
}

impl RunRecord {
    pub fn final_row(&self) -> Option<&IterationRow> {
        self.rows.last()
    }
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub record: RunRecord,
    pub model: ModelState,
    /// Seconds spent on each iteration.
    pub timings: Vec<f64>,
}

/// Seed of the query issued at `iteration` (1-based).
pub fn query_seed(config: &ExperimentConfig, iteration: usize) -> u64 {
    rng::derive(rng::derive(config.seed, QUERY_STREAM) ^ config.strategy.seed, iteration as u64)
}

struct Prepared<'a> {
    examples: Vec<Example>,
    pixels: Vec<Vec<f64>>,
    dataset: &'a DatasetManifest,
}

impl<'a> Prepared<'a> {
    fn new(dataset: &'a DatasetManifest) -> Result<Self> {
        dataset.validate()?;
        let examples: Vec<Example> = exec::map(&dataset.samples, Example::from_sample);
        let pixels = examples.iter().map(|e| e.pixels.clone()).collect();
        Ok(Prepared { examples, pixels, dataset })
    }

    fn refs(&self, ids: &[usize]) -> Vec<&Example> {
        ids.iter().map(|&i| &self.examples[i]).collect()
    }

    fn evaluate_holdout(&self, model: &ModelState) -> Result<Vec<SampleScore>> {
        self.evaluate(model, &self.dataset.splits.holdout)
    }

    fn evaluate(&self, model: &ModelState, ids: &[usize]) -> Result<Vec<SampleScore>> {
        let preds = learner::predict_many(model, &self.refs(ids))?;
        let spacing = self.dataset.pixel_spacing;
        exec::map_range(ids.len(), |k| {
            let s = &self.dataset.samples[ids[k]];
            let pred = binarize(&preds[k].probs, 0.5);
            evaluate(&pred, &s.mask, spacing).map(|metrics| SampleScore { sample_id: s.id, metrics })
        })
        .into_iter()
        .collect()
    }
}

/// Score `model` on the samples at positions `ids` of `dataset`.
pub fn evaluate_samples(model: &ModelState, dataset: &DatasetManifest, ids: &[usize]) -> Result<Vec<SampleScore>> {
    if let Some(&i) = ids.iter().find(|&&i| i >= dataset.len()) {
        return Err(Error::invalid(format!("sample position {i} out of range")));
    }
    Prepared::new(dataset)?.evaluate(model, ids)
}

fn summarize(iteration: usize, n_labeled: usize, train_loss: f64, scores: &[SampleScore]) -> IterationRow {
    let mean_of = |m: Metric| -> Option<f64> {
        let v: Vec<f64> = scores.iter().filter_map(|s| s.metrics.reported(m)).collect();
        (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
    };
    IterationRow {
        iteration,
        n_labeled,
        dice: mean_of(Metric::Dice).unwrap_or(0.0),
        precision: mean_of(Metric::Precision).unwrap_or(0.0),
        sensitivity: mean_of(Metric::Sensitivity).unwrap_or(0.0),
        volumetric_similarity: mean_of(Metric::VolumetricSimilarity).unwrap_or(0.0),
        mean_surface_distance: mean_of(Metric::MeanSurfaceDistance),
        avg_hausdorff: mean_of(Metric::AvgHausdorff),
        hd95: mean_of(Metric::Hd95),
        n_single_contour: scores.iter().filter(|s| s.metrics.single_contour).count(),
        train_loss,
    }
}

fn last_or_nan(trace: &[f64]) -> f64 {
    trace.last().copied().unwrap_or(f64::NAN)
}

/// The labeled/unlabeled split a run of `config` starts from.
pub fn initial_pool(config: &ExperimentConfig, dataset: &DatasetManifest) -> Result<PoolState> {
    let train_ids = &dataset.splits.train;
    let initial = config.initial_pool_size(train_ids.len())?;
    init_pool_with_count(train_ids, initial, rng::derive(config.seed, POOL_STREAM))
}

/// Run one active-learning experiment on `dataset`.
pub fn run(config: &ExperimentConfig, dataset: &DatasetManifest) -> Result<RunOutcome> {
    run_observed(config, dataset, |_| {})
}

/// [`run`], calling `observe` after every iteration.
pub fn run_observed(
    config: &ExperimentConfig,
    dataset: &DatasetManifest,
    mut observe: impl FnMut(&IterationRow),
) -> Result<RunOutcome> {
    let data = Prepared::new(dataset)?;
    let train_ids = &dataset.splits.train;
    let initial = config.initial_pool_size(train_ids.len())?;
    let iterations = config.effective_iterations();
    config.validate_budget(train_ids.len())?;

    let mut pool = initial_pool(config, dataset)?;
    let lcfg = config.effective_learner();
    let mut model = lcfg.init_model();

    // Seeding phase: epoch by epoch until the training Dice reaches the threshold.
    let labeled = pool.labeled_vec();
    let mut seeding_epochs = 0;
    let mut seeding_dice = 0.0;
    while seeding_epochs < config.seeding_max_epochs {
        learner::train(&mut model, &data.refs(&labeled), 1, &lcfg)?;
        seeding_epochs += 1;
        seeding_dice = learner::mean_dice(&model, &data.refs(&labeled))?;
        if seeding_dice >= config.seeding_dice_threshold {
            break;
        }
    }

    let mut record = RunRecord {
        label: config.label(),
        dataset: dataset.name.clone(),
        config: config.clone(),
        initial_labeled: initial,
        seeding_epochs,
        seeding_dice,
        query_seeds: Vec::with_capacity(iterations),
        history: Vec::new(),
        rows: Vec::with_capacity(iterations),
        final_scores: Vec::new(),
    };
    let mut timings = Vec::with_capacity(iterations);

    for it in 1..=iterations {
        let start = Instant::now();
        let seed = query_seed(config, it);
        let selected = query_step(config, &data, &model, &pool, it, seed)?;
        pool.apply_query(&selected, it)?;
        pool.check_invariants(train_ids, initial)?;
        if config.reset_optimizer {
            model.adam.reset();
        }
        let trace = learner::train(&mut model, &data.refs(&pool.labeled_vec()), config.epochs_per_iter, &lcfg)?;
        let scores = data.evaluate_holdout(&model)?;
        record.rows.push(summarize(it, pool.labeled.len(), last_or_nan(&trace), &scores));
        observe(record.rows.last().expect("just pushed"));
        record.query_seeds.push(seed);
        if it == iterations {
            record.final_scores = scores;
        }
        timings.push(start.elapsed().as_secs_f64());
    }
    record.history = pool.history;
    Ok(RunOutcome { record, model, timings })
}

fn query_step(
    config: &ExperimentConfig,
    data: &Prepared<'_>,
    model: &ModelState,
    pool: &PoolState,
    iteration: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let spec = StrategySpec { seed, ..config.strategy.clone() };
    let needed = if spec.name.is_hybrid() { spec.n_c } else { spec.n_u };
    if pool.unlabeled.len() < needed {
        return Err(Error::BudgetExhausted { iteration, needed, available: pool.unlabeled.len() });
    }
    let labeled = pool.labeled_vec();
    let unlabeled = pool.unlabeled_vec();
    let predictions = if spec.name.needs_predictions() {
        Some(learner::predict_many(model, &data.refs(&unlabeled))?)
    } else {
        None
    };
    let ctx = QueryContext {
        labeled: &labeled,
        unlabeled: &unlabeled,
        predictions: predictions.as_deref(),
        pixels: Some(&data.pixels),
    };
    Ok(query(&spec, &ctx)?.selected)
}

/// Train from scratch on the whole train split for
/// `iterations × epochs_per_iter` epochs, logging one row per
/// `epochs_per_iter` block.
pub fn full_data_reference(config: &ExperimentConfig, dataset: &DatasetManifest) -> Result<RunOutcome> {
    let data = Prepared::new(dataset)?;
    let train_ids = dataset.splits.train.clone();
    if train_ids.is_empty() {
        return Err(Error::invalid("train split is empty"));
    }
    let iterations = config.effective_iterations();
    let lcfg = config.effective_learner();
    let mut model = lcfg.init_model();
    let mut record = RunRecord {
        label: "full_data".to_string(),
        dataset: dataset.name.clone(),
        config: config.clone(),
        initial_labeled: train_ids.len(),
        seeding_epochs: 0,
        seeding_dice: 0.0,
        query_seeds: Vec::new(),
        history: Vec::new(),
        rows: Vec::with_capacity(iterations),
        final_scores: Vec::new(),
    };
    let mut timings = Vec::new();
    for it in 1..=iterations {
        let start = Instant::now();
        let trace = learner::train(&mut model, &data.refs(&train_ids), config.epochs_per_iter, &lcfg)?;
        let scores = data.evaluate_holdout(&model)?;
        record.rows.push(summarize(it, train_ids.len(), last_or_nan(&trace), &scores));
        if it == iterations {
            record.final_scores = scores;
        }
        timings.push(start.elapsed().as_secs_f64());
    }
    Ok(RunOutcome { record, model, timings })
}
