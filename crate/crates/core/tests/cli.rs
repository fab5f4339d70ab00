use std::path::Path;
use std::process::{Command, Output};

fn alseg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_alseg")).args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> String {
    p.to_string_lossy().into_owned()
}

fn synth(dir: &Path) -> String {
    let o = alseg(&["synth", "--subjects", "6", "--slices", "5", "--side", "16", "--seed", "2", "-o", &s(dir)]);
    assert!(o.status.success(), "{}", stderr(&o));
    s(&dir.join("manifest.json"))
}

fn quick_run(manifest: &str, out: &Path, strategies: &[&str]) -> Output {
    let mut args = vec!["run", "--dataset", manifest, "--iterations", "2", "--epochs-per-iter", "1"];
    args.extend(["--n-c", "4", "--n-u", "2", "--seed", "9"]);
    for st in strategies {
        args.extend(["--strategy", st]);
    }
    let out = s(out);
    args.extend(["-o", &out]);
    alseg(&args)
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(dir.path());
    let cases: Vec<Vec<String>> = vec![
        vec!["synth".into()],
        vec!["run".into(), "--dataset".into(), manifest.clone(), "--strategy".into(), "bogus".into(), "-o".into(), s(dir.path())],
        vec!["run".into(), "--dataset".into(), s(&dir.path().join("missing.json")), "-o".into(), s(dir.path())],
        vec!["compare".into(), "-o".into(), s(dir.path())],
        vec!["eval".into(), "--checkpoint".into(), "nope.json".into(), "--dataset".into(), manifest.clone(), "-o".into(), "x.csv".into()],
        vec!["frobnicate".into()],
    ];
    for args in cases {
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = alseg(&argv);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
    let o = alseg(&["run", "--dataset", &manifest, "--strategy", "bogus", "-o", &s(dir.path())]);
    let err = stderr(&o);
    for name in ["entropy-umap", "coreset", "random-entropy"] {
        assert!(err.contains(name), "{err}");
    }
}

#[test]
fn synth_is_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (ma, mb) = (synth(a.path()), synth(b.path()));
    assert_eq!(std::fs::read(ma).unwrap(), std::fs::read(mb).unwrap());
}

#[test]
fn run_compare_eval_embed() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(&dir.path().join("data"));
    let runs = dir.path().join("runs");
    let o = quick_run(&manifest, &runs, &["random", "entropy-umap"]);
    assert!(o.status.success(), "{}", stderr(&o));

    let curve = std::fs::read_to_string(runs.join("entropy_umap/learning_curve.csv")).unwrap();
    assert_eq!(curve.lines().count(), 3);
    assert_eq!(std::fs::read_to_string(runs.join("random/timings.csv")).unwrap().lines().count(), 3);
    let sample = std::fs::read_to_string(runs.join("random/sample_metrics.csv")).unwrap();
    assert!(sample.starts_with("sample_id,metric,value,single_contour\n"));

    // the learning curve is reproducible byte for byte
    let again = dir.path().join("again");
    assert!(quick_run(&manifest, &again, &["entropy-umap"]).status.success());
    assert_eq!(curve, std::fs::read_to_string(again.join("entropy_umap/learning_curve.csv")).unwrap());

    let base = s(&runs.join("random/run.json"));
    let other = s(&runs.join("entropy_umap/run.json"));
    let cmp = dir.path().join("cmp");
    let o = alseg(&["compare", "--baseline", &base, &other, "-o", &s(&cmp)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = String::from_utf8_lossy(&o.stdout);
    assert!(table.contains("hd95") && table.contains("entropy_umap"), "{table}");
    let csv = std::fs::read_to_string(cmp.join("comparison.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 7 * 2);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(cmp.join("comparison.json")).unwrap()).unwrap();
    assert_eq!(json["baseline"], "random");

    let ckpt = s(&runs.join("random/checkpoint.json"));
    let eval_out = dir.path().join("eval.csv");
    let o = alseg(&["eval", "--checkpoint", &ckpt, "--dataset", &manifest, "--split", "train", "-o", &s(&eval_out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let ds: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
    let n_train = ds["splits"]["train"].as_array().unwrap().len();
    let n_hold = ds["splits"]["holdout"].as_array().unwrap().len();
    let rows = std::fs::read_to_string(&eval_out).unwrap();
    let ids: std::collections::BTreeSet<&str> = rows.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ids.len(), n_train);

    let emb = dir.path().join("emb.csv");
    let o = alseg(&["embed", "--checkpoint", &ckpt, "--dataset", &manifest, "-o", &s(&emb)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&emb).unwrap();
    assert_eq!(text.lines().next().unwrap(), "sample_id,split,method,x,y");
    assert_eq!(text.lines().count(), 1 + 2 * (n_train + n_hold));

    let o = alseg(&["replay", &other]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn config_file_and_full_data() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = synth(&dir.path().join("data"));
    let cfg = dir.path().join("exp.toml");
    std::fs::write(
        &cfg,
        "dataset = \"data/manifest.json\"\niterations = 2\nepochs_per_iter = 1\n\n[strategy]\nname = \"pca\"\nn_u = 2\nn_c = 4\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = alseg(&["run", "-c", &s(&cfg), "-o", &s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.join("pca/run.json").is_file());

    let o = alseg(&["run", "--dataset", &manifest, "--full-data", "--iterations", "2", "--epochs-per-iter", "1", "-o", &s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(out.join("full_data/learning_curve.csv")).unwrap().lines().count(), 3);

    std::fs::write(&cfg, "iterations = 2\nbogus = true\n").unwrap();
    let o = alseg(&["run", "-c", &s(&cfg), "--dataset", &manifest, "-o", &s(&out)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}
