use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use groupdyn::network::{load_network, write_network, EdgeListFormat};
use groupdyn::validation::{planted_network, PlantedConfig};

fn groupdyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_groupdyn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.cfg");
    fs::write(&p, text).unwrap();
    p
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "data.nodes = 50\ndata.steps = 10\nmodel.lambda = 3\nmodel.gamma = 0.2\nrun.seed = 7\n",
    );
    for out in ["a", "b"] {
        let o = groupdyn(&["generate", "--config", path(&cfg), "--output", path(&dir.path().join(out))]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for f in ["network.txt", "truth.json", "resolved.cfg"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
}

#[test]
fn zero_rate_generates_no_groups() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "data.nodes = 100\ndata.steps = 4\nmodel.lambda = 0\nmodel.density = -1.2\n");
    let out = dir.path().join("g");
    let o = groupdyn(&["generate", "--config", path(&cfg), "--output", path(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let truth = fs::read_to_string(out.join("truth.json")).unwrap();
    let state = groupdyn::model::ModelState::from_json(&truth).unwrap();
    assert_eq!(state.num_groups(), 0);

    let net = load_network(out.join("network.txt"), EdgeListFormat::default()).unwrap().network;
    let pairs = net.num_pairs() * net.num_steps();
    let links: usize = (0..net.num_steps()).map(|t| net.edge_count(t)).sum();
    let expected = 1.0 / (1.0 + 1.2f64.exp());
    assert!((links as f64 / pairs as f64 - expected).abs() < 0.01);
}

#[test]
fn unknown_keys_exit_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sampler.burnin = 10\n");
    let o = groupdyn(&["generate", "--config", path(&cfg), "--output", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sampler.burnin"));

    let o = Command::new(env!("CARGO_BIN_EXE_groupdyn"))
        .args(["generate", "--output", path(dir.path())])
        .env("GROUPDYN_MODEL_LAMBDAA", "1")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("GROUPDYN_MODEL_LAMBDAA"));
}

#[test]
fn env_overrides_file_and_flags_override_env() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "data.nodes = 6\ndata.steps = 2\nrun.seed = 1\n");
    let out = dir.path().join("g");
    let o = Command::new(env!("CARGO_BIN_EXE_groupdyn"))
        .args(["generate", "--config", path(&cfg), "--seed", "9", "--output", path(&out)])
        .env("GROUPDYN_DATA_NODES", "8")
        .env("GROUPDYN_RUN_SEED", "5")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let resolved = fs::read_to_string(out.join("resolved.cfg")).unwrap();
    assert!(resolved.contains("data.nodes = 8\n"));
    assert!(resolved.contains("run.seed = 9\n"));
    assert!(resolved.contains("data.steps = 2\n"));
}

#[test]
fn missing_network_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = groupdyn(&[
        "fit",
        "--network",
        path(&dir.path().join("absent.txt")),
        "--output",
        path(&dir.path().join("fit")),
    ]);
    assert_eq!(o.status.code(), Some(3));
}

fn toy_network(dir: &Path) -> PathBuf {
    // every pair is linked at exactly two of the four steps
    let mut text = String::from("5 4 undirected\n");
    let pairs = (0..5).flat_map(|i| (i + 1..5).map(move |j| (i, j)));
    for (p, (i, j)) in pairs.enumerate() {
        for t in 1..=4 {
            if (p + t) % 2 == 0 {
                text.push_str(&format!("{t} {i} {j}\n"));
            }
        }
    }
    let p = dir.join("toy.txt");
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn fit_smoke_then_predict_validate_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let net = toy_network(dir.path());
    let cfg = write_config(
        dir.path(),
        "sampler.chains = 1\nsampler.burn_in = 2\nsampler.samples = 2\nrun.mask_fraction = 0.2\n",
    );
    let fit = dir.path().join("fit");
    let o = groupdyn(&["fit", "--network", path(&net), "--config", path(&cfg), "--output", path(&fit)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest = groupdyn::inference::read_manifest(&fit).unwrap();
    assert_eq!(manifest.retained, vec![2]);
    assert_eq!(manifest.settings["sampler.burn_in"], "2");
    let mask = fs::read_to_string(fit.join("mask.txt")).unwrap();
    assert_eq!(mask.lines().count(), 2);
    let log = fs::read_to_string(fit.join("progress.log")).unwrap();
    assert_eq!(log.lines().count(), 1 + 4);

    let o = groupdyn(&["validate", "--network", path(&net), "--fit", path(&fit), "--config", path(&cfg)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("held-out flip ignored"));

    let pm = dir.path().join("pm");
    let o = groupdyn(&[
        "predict-missing",
        "--network",
        path(&net),
        "--fit",
        path(&fit),
        "--config",
        path(&cfg),
        "--output",
        path(&pm),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let preds = fs::read_to_string(pm.join("predictions.csv")).unwrap();
    assert_eq!(preds.lines().count(), 1 + 2 * 4);
    let metrics = fs::read_to_string(pm.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("dataset,model,metric,value,stderr\n"));

    let rep = dir.path().join("rep");
    let o = groupdyn(&["report", "--fit", path(&fit), "--output", path(&rep)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let counts = fs::read_to_string(rep.join("group_counts.csv")).unwrap();
    assert_eq!(counts.lines().count(), 3);
}

#[test]
fn validate_rejects_a_fit_of_another_network() {
    let dir = tempfile::tempdir().unwrap();
    let net = toy_network(dir.path());
    let cfg = write_config(dir.path(), "sampler.chains = 1\nsampler.burn_in = 1\nsampler.samples = 1\n");
    let fit = dir.path().join("fit");
    assert!(groupdyn(&["fit", "--network", path(&net), "--config", path(&cfg), "--output", path(&fit)])
        .status
        .success());
    let other = dir.path().join("other.txt");
    fs::write(&other, "6 4 undirected\n1 0 5\n").unwrap();
    let o = groupdyn(&["validate", "--network", path(&other), "--fit", path(&fit)]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn mask_fraction_zero_holds_nothing_out() {
    let dir = tempfile::tempdir().unwrap();
    let net = toy_network(dir.path());
    let fit = dir.path().join("fit");
    let o = groupdyn(&[
        "fit",
        "--network",
        path(&net),
        "--chains",
        "1",
        "--mask-fraction",
        "0",
        "--output",
        path(&fit),
    ]);
    // default chain length on a 5-node toy is quick
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(fs::read_to_string(fit.join("mask.txt")).unwrap(), "");
    let o = groupdyn(&["predict-missing", "--network", path(&net), "--fit", path(&fit), "--output", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
}

fn four_entry_truth(dir: &Path) -> (PathBuf, PathBuf) {
    // held-out pairs (0,1) and (2,3) over two steps
    let net = dir.join("truth.txt");
    fs::write(&net, "4 2 undirected\n1 0 1\n2 2 3\n").unwrap();
    let mask = dir.join("mask.txt");
    fs::write(&mask, "0 1\n2 3\n").unwrap();
    (net, mask)
}

#[test]
fn evaluate_four_entry_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let (net, mask) = four_entry_truth(dir.path());
    // labels 1, 0, 1, 0 with scores 0.9, 0.8, 0.4, 0.1
    let preds = dir.path().join("p.csv");
    fs::write(&preds, "t,i,j,score\n1,0,1,0.9\n1,2,3,0.8\n2,2,3,0.4\n2,1,0,0.1\n").unwrap();
    let o = groupdyn(&["evaluate", "--truth", path(&net), "--predictions", path(&preds), "--mask", path(&mask)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let value = |metric: &str| -> f64 {
        text.lines()
            .find(|l| l.split(',').nth(2) == Some(metric))
            .and_then(|l| l.split(',').nth(3))
            .unwrap()
            .parse()
            .unwrap()
    };
    assert!((value("AUC") - 0.75).abs() < 1e-12);
    assert!((value("F1") - 0.8).abs() < 1e-12);
    let want = 0.9f64.ln() + 0.2f64.ln() + 0.4f64.ln() + 0.9f64.ln();
    assert!((value("TestLL") - want).abs() < 1e-9);

    fs::write(&preds, "t,i,j,score\n1,0,1,0.5\n1,2,3,0.5\n2,2,3,0.5\n2,0,1,0.5\n").unwrap();
    let out = dir.path().join("m.json");
    let o = groupdyn(&[
        "evaluate",
        "--truth",
        path(&net),
        "--predictions",
        path(&preds),
        "--mask",
        path(&mask),
        "--format",
        "json",
        "--output",
        path(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let auc = rows.as_array().unwrap().iter().find(|r| r["metric"] == "AUC").unwrap();
    assert_eq!(auc["value"], 0.5);
}

#[test]
fn evaluate_names_missing_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let (net, mask) = four_entry_truth(dir.path());
    let preds = dir.path().join("p.csv");
    fs::write(&preds, "t,i,j,score\n1,0,1,0.9\n1,2,3,0.8\n2,0,1,0.1\n").unwrap();
    let o = groupdyn(&["evaluate", "--truth", path(&net), "--predictions", path(&preds), "--mask", path(&mask)]);
    assert_eq!(o.status.code(), Some(3));
    let err = stderr(&o);
    assert!(err.contains("1 missing pair(s): (t=2, i=2, j=3)"), "{err}");
}

#[test]
fn training_loglik_rises_over_burn_in() {
    let dir = tempfile::tempdir().unwrap();
    let (net, _) = planted_network(&PlantedConfig::default()).unwrap();
    let file = dir.path().join("planted.txt");
    write_network(&net, &file).unwrap();
    let cfg = write_config(dir.path(), "sampler.chains = 1\nsampler.burn_in = 60\nsampler.samples = 1\nrun.seed = 3\n");
    let fit = dir.path().join("fit");
    let o = groupdyn(&["fit", "--network", path(&file), "--config", path(&cfg), "--output", path(&fit)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let log = fs::read_to_string(fit.join("progress.log")).unwrap();
    let trace: Vec<f64> = log
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(trace.len(), 61);
    assert!(trace[59] >= trace[0], "{} -> {}", trace[0], trace[59]);
}

#[test]
fn forecast_rejects_out_of_range_tobs() {
    let dir = tempfile::tempdir().unwrap();
    let net = toy_network(dir.path());
    let o = groupdyn(&["forecast", "--network", path(&net), "--tobs", "4", "--output", path(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("run.tobs"));
}
