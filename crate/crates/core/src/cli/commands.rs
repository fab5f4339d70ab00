use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use ndarray::Array2;

use super::{CliError, CompareArgs, EmbedArgs, EvalArgs, ReplayArgs, RunArgs, SplitArg, SynthArgs, VariantArg};
use crate::corpus::{load_manifest, save_manifest, synth_dataset, DatasetManifest, SynthOptions};
use crate::harness::{
    self, compare as compare_records, evaluate_samples, full_data_reference, load_run_manifest, run_observed,
    save_run_manifest, write_comparison_csv, write_comparison_json, write_learning_curve_csv,
    write_sample_metrics_csv, write_timings_csv, ExperimentConfig, MetricReport, RunOutcome, Variant,
};
use crate::learner::{load_checkpoint, predict_many, save_checkpoint, Example};
use crate::metrics::Metric;
use crate::reduce::{pca_fit, pca_transform, umap_fit, umap_transform, UmapConfig};
use crate::strategies::{feature_matrix, StrategyName};
use crate::{Error, Result};

type CliResult<T = ()> = std::result::Result<T, CliError>;

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::from(Error::io(path, e))
}

fn require_file(path: &Path, what: &str) -> CliResult {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!("{what} `{}` not found", path.display())))
    }
}

fn load_dataset(path: &Path) -> CliResult<DatasetManifest> {
    require_file(path, "dataset manifest")?;
    Ok(load_manifest(path)?)
}

pub(super) fn synth(a: SynthArgs) -> CliResult {
    let opts = SynthOptions {
        n_subjects: a.subjects,
        slices_per_subject: a.slices,
        side: a.side,
        noise_sd: a.noise,
        seed: a.seed,
        hard: a.hard,
        holdout_fraction: a.holdout,
    };
    let mut manifest = synth_dataset(&opts).map_err(CliError::config)?;
    manifest.name = a.name;
    let path = a.out.join("manifest.json");
    save_manifest(&manifest, &path)?;
    println!("{}", path.display());
    Ok(())
}

fn build_configs(a: &RunArgs) -> CliResult<(Vec<ExperimentConfig>, PathBuf)> {
    let (mut base, base_dir) = match &a.config {
        Some(p) => {
            require_file(p, "config")?;
            let dir = p.parent().map(Path::to_path_buf).unwrap_or_default();
            (ExperimentConfig::load(p).map_err(CliError::config)?, dir)
        }
        None => (ExperimentConfig::default(), PathBuf::new()),
    };
    let dataset = match (&a.dataset, &base.dataset) {
        (Some(d), _) => d.clone(),
        (None, Some(d)) => base_dir.join(d),
        (None, None) => return Err(CliError::Usage("no dataset given (use --dataset or `dataset` in the config)".into())),
    };
    if let Some(v) = a.n_c {
        base.strategy.n_c = v;
    }
    if let Some(v) = a.n_u {
        base.strategy.n_u = v;
    }
    if let Some(v) = a.iterations {
        base.iterations = v;
    }
    if let Some(v) = a.epochs_per_iter {
        base.epochs_per_iter = v;
    }
    if let Some(v) = a.seed {
        base.seed = v;
    }
    if let Some(v) = a.variant {
        base.variant = match v {
            VariantArg::Standard => Variant::Standard,
            VariantArg::LargeInitial => Variant::LargeInitial,
        };
    }
    let names: Vec<StrategyName> = if a.strategies.is_empty() {
        vec![base.strategy.name]
    } else {
        a.strategies
            .iter()
            .map(|s| s.parse().map_err(CliError::config))
            .collect::<CliResult<_>>()?
    };
    let configs = names
        .into_iter()
        .map(|name| {
            let mut c = base.clone();
            c.strategy.name = name;
            c.validate().map_err(CliError::config)?;
            Ok(c)
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok((configs, dataset))
}

fn write_run_outputs(dir: &Path, outcome: &RunOutcome) -> CliResult {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let rec = &outcome.record;
    let p = dir.join("learning_curve.csv");
    write_learning_curve_csv(create(&p)?, rec).map_err(io_err(&p))?;
    let p = dir.join("timings.csv");
    write_timings_csv(create(&p)?, &outcome.timings).map_err(io_err(&p))?;
    let p = dir.join("sample_metrics.csv");
    write_sample_metrics_csv(create(&p)?, &rec.final_scores).map_err(io_err(&p))?;
    save_run_manifest(rec, dir.join("run.json"))?;
    save_checkpoint(&outcome.model, &rec.config.effective_learner(), dir.join("checkpoint.json"))?;
    Ok(())
}

pub(super) fn run(a: RunArgs) -> CliResult {
    let (mut configs, dataset_path) = build_configs(&a)?;
    let dataset = load_dataset(&dataset_path)?;
    let abs = fs::canonicalize(&dataset_path).map_err(io_err(&dataset_path))?;
    for c in &mut configs {
        c.dataset = Some(abs.to_string_lossy().into_owned());
        if !a.full_data {
            c.validate_budget(dataset.splits.train.len()).map_err(CliError::config)?;
        }
    }
    if a.full_data {
        configs.truncate(1);
    }

    let next = AtomicUsize::new(0);
    let failures = Mutex::new(Vec::new());
    let jobs = a.jobs.clamp(1, configs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                let Some(cfg) = configs.get(i) else { break };
                let label = if a.full_data { "full_data".to_string() } else { cfg.label() };
                let result = run_one(cfg, &dataset, &label, a.full_data)
                    .and_then(|outcome| write_run_outputs(&a.out.join(&label), &outcome));
                if let Err(e) = result {
                    failures.lock().expect("lock").push(format!("{label}: {e}"));
                }
            });
        }
    });
    let failures = failures.into_inner().expect("lock");
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::Runtime(failures.join("; ")))
    }
}

fn run_one(cfg: &ExperimentConfig, dataset: &DatasetManifest, label: &str, full: bool) -> CliResult<RunOutcome> {
    if full {
        return Ok(full_data_reference(cfg, dataset)?);
    }
    let outcome = run_observed(cfg, dataset, |row| {
        eprintln!(
            "[{label}] iteration {} |D_L|={} dice={:.4} single_contour={}",
            row.iteration, row.n_labeled, row.dice, row.n_single_contour
        );
    })?;
    Ok(outcome)
}

pub(super) fn eval(a: EvalArgs) -> CliResult {
    require_file(&a.checkpoint, "checkpoint")?;
    let dataset = load_dataset(&a.dataset)?;
    let (model, _) = load_checkpoint(&a.checkpoint)?;
    let ids = match a.split {
        SplitArg::Train => &dataset.splits.train,
        SplitArg::Holdout => &dataset.splits.holdout,
    };
    let scores = evaluate_samples(&model, &dataset, ids)?;
    write_sample_metrics_csv(create(&a.out)?, &scores).map_err(io_err(&a.out))?;
    let dice = scores.iter().map(|s| s.metrics.overlap.dice).sum::<f64>() / scores.len().max(1) as f64;
    println!("{} samples, mean dice {dice:.4}", scores.len());
    Ok(())
}

fn print_report(report: &MetricReport) {
    let mut header = format!("{:<24}", "metric");
    for s in &report.strategies {
        header.push_str(&format!(" {s:>20}"));
    }
    println!("{header}");
    for m in Metric::ALL {
        let mut line = format!("{:<24}", m.name());
        for s in &report.strategies {
            let cell = report.cell(m, s).expect("cell per metric and strategy");
            let v = cell.aggregate.map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
            let flag = if cell.significant { "*" } else { " " };
            line.push_str(&format!(" {:>11} p={:.3}{flag}", v, cell.p_value));
        }
        println!("{line}");
    }
    println!("baseline: {}; * marks p < .05", report.baseline);
}

pub(super) fn compare(a: CompareArgs) -> CliResult {
    let Some(base_path) = a.baseline else {
        return Err(CliError::Usage("--baseline is required".into()));
    };
    require_file(&base_path, "baseline run manifest")?;
    let baseline = load_run_manifest(&base_path)?;
    let mut records = vec![baseline.clone()];
    for p in &a.runs {
        if p == &base_path {
            continue;
        }
        require_file(p, "run manifest")?;
        records.push(load_run_manifest(p)?);
    }
    let report = compare_records(&records, &baseline).map_err(CliError::config)?;
    let p = a.out.join("comparison.csv");
    write_comparison_csv(create(&p)?, &report).map_err(io_err(&p))?;
    let p = a.out.join("comparison.json");
    let mut w = create(&p)?;
    write_comparison_json(&mut w, &report)?;
    writeln!(w).map_err(io_err(&p))?;
    print_report(&report);
    Ok(())
}

fn features_of(model: &crate::learner::ModelState, dataset: &DatasetManifest, ids: &[usize]) -> Result<Array2<f64>> {
    let ex: Vec<Example> = ids.iter().map(|&i| Example::from_sample(&dataset.samples[i])).collect();
    let refs: Vec<&Example> = ex.iter().collect();
    feature_matrix(&predict_many(model, &refs)?)
}

pub(super) fn embed(a: EmbedArgs) -> CliResult {
    require_file(&a.checkpoint, "checkpoint")?;
    let dataset = load_dataset(&a.dataset)?;
    let (model, _) = load_checkpoint(&a.checkpoint)?;
    let (train, hold) = (&dataset.splits.train, &dataset.splits.holdout);
    let f_train = features_of(&model, &dataset, train)?;
    let f_hold = features_of(&model, &dataset, hold)?;

    let pca = pca_fit(&f_train, 2).map_err(CliError::config)?;
    let umap = umap_fit(&f_train, &UmapConfig::for_points(train.len(), a.seed)).map_err(CliError::config)?;
    let blocks = [
        ("pca", pca_transform(&pca, &f_train)?, pca_transform(&pca, &f_hold)?),
        ("umap", umap.embedding.clone(), umap_transform(&umap, &f_hold)?),
    ];

    let mut w = create(&a.out)?;
    let mut body = String::from("sample_id,split,method,x,y\n");
    for (method, e_train, e_hold) in &blocks {
        for (split, ids, e) in [("train", train, e_train), ("holdout", hold, e_hold)] {
            for (k, &i) in ids.iter().enumerate() {
                body.push_str(&format!("{},{split},{method},{},{}\n", dataset.samples[i].id, e[[k, 0]], e[[k, 1]]));
            }
        }
    }
    w.write_all(body.as_bytes()).map_err(io_err(&a.out))?;
    println!("{}", a.out.display());
    Ok(())
}

pub(super) fn replay(a: ReplayArgs) -> CliResult {
    require_file(&a.manifest, "run manifest")?;
    let record = load_run_manifest(&a.manifest)?;
    let dataset_path = match (a.dataset, &record.config.dataset) {
        (Some(p), _) => p,
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => return Err(CliError::Usage("run manifest names no dataset; pass --dataset".into())),
    };
    let dataset = load_dataset(&dataset_path)?;
    let outcome = harness::replay(&record, &dataset)?;
    if outcome.identical {
        println!("replay identical: {} queries over {} iterations", record.history.iter().map(|h| h.indices.len()).sum::<usize>(), record.history.len());
        Ok(())
    } else {
        Err(CliError::Runtime(format!(
            "replayed history differs\nrecorded: {}\nreplayed: {}",
            outcome.recorded, outcome.replayed
        )))
    }
}
