use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use groupdyn::eval::{
    evaluate as score_metrics, forecast as run_forecast, forecast_series, metrics_csv, naive_baseline,
    summarize, BaselineTarget, BaselineVariant, MetricRow, Metrics, ScoredPair, ScoredPairs,
};
use groupdyn::inference::{
    chain_seed, read_manifest, run_chains, write_posterior, ChainRecord, PosteriorManifest,
    SamplerConfig,
};
use groupdyn::model::{link_probability, log_likelihood, sample_network, sample_state, ModelState};
use groupdyn::network::{
    generate_holdout_mask, load_network, write_network, DynamicNetwork, EdgeListFormat, PairMask,
};
use groupdyn::validation::{geweke_joint_test, GewekeConfig};

use crate::config::RunConfig;
use crate::error::CliError;

const MASK_STREAM: u64 = 0x6D61_736B_0000_0001;
/// Pairs listed individually in a coverage error.
const COVERAGE_LIST_CAP: usize = 10;

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))
}

fn load(cfg: &RunConfig, path: &Path) -> Result<(DynamicNetwork, String), CliError> {
    let directed = cfg.get("data.directed")?;
    let loaded = load_network(path, EdgeListFormat { directed })?;
    Ok((loaded.network, loaded.ids.to_text()))
}

fn baseline_variant(cfg: &RunConfig) -> Result<BaselineVariant, CliError> {
    match cfg.get::<String>("eval.baseline")?.as_str() {
        "per_pair" => Ok(BaselineVariant::PerPair),
        "global" => Ok(BaselineVariant::GlobalDensity),
        other => Err(CliError::Config(format!(
            "invalid value {other:?} for `eval.baseline` (per_pair or global)"
        ))),
    }
}

fn metrics_text(cfg: &RunConfig, rows: &[MetricRow]) -> Result<(String, &'static str), CliError> {
    match cfg.get::<String>("run.format")?.as_str() {
        "csv" => Ok((metrics_csv(rows), "csv")),
        "json" => {
            let text = serde_json::to_string_pretty(rows).map_err(|e| CliError::Data(e.to_string()))?;
            Ok((text + "\n", "json"))
        }
        other => Err(CliError::Config(format!("invalid value {other:?} for `run.format` (csv or json)"))),
    }
}

fn write_metrics(cfg: &RunConfig, dir: &Path, rows: &[MetricRow]) -> Result<(), CliError> {
    let (text, ext) = metrics_text(cfg, rows)?;
    write(&dir.join(format!("metrics.{ext}")), &text)?;
    print!("{text}");
    Ok(())
}

pub fn generate(cfg: &RunConfig, out: &Path) -> Result<(), CliError> {
    let nodes: usize = cfg.get("data.nodes")?;
    let steps: usize = cfg.get("data.steps")?;
    let directed: bool = cfg.get("data.directed")?;
    let density: f64 = cfg.get("model.density")?;
    let hyper = cfg.hyper()?;
    if !density.is_finite() {
        return Err(CliError::Config("`model.density` must be finite".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.get("run.seed")?);
    let state = sample_state(&hyper, nodes, steps, directed, vec![density; steps], &mut rng)
        .map_err(|e| CliError::Config(format!("data: {e}")))?;
    let net = sample_network(&state, &mut rng);
    create_dir(out)?;
    write_network(&net, out.join("network.txt"))?;
    write(&out.join("truth.json"), &state.to_json())?;
    write(&out.join("resolved.cfg"), &cfg.to_text())?;
    Ok(())
}

fn holdout(cfg: &RunConfig, net: &DynamicNetwork) -> Result<PairMask, CliError> {
    let fraction: f64 = cfg.get("run.mask_fraction")?;
    if fraction == 0.0 {
        return Ok(PairMask::none(net.num_nodes(), net.is_directed()));
    }
    let seed = chain_seed(cfg.get::<u64>("run.seed")? ^ MASK_STREAM, 0);
    generate_holdout_mask(net, fraction, seed).map_err(|e| CliError::Config(format!("run.mask_fraction: {e}")))
}

fn progress_log(chains: &[groupdyn::inference::PosteriorSamples]) -> String {
    let mut out = String::from("chain,sweep,loglik\n");
    for c in chains {
        for (s, ll) in c.loglik_trace.iter().enumerate() {
            writeln!(out, "{},{},{ll}", c.chain_id, s + 1).unwrap();
        }
        if let Some(reason) = &c.aborted {
            writeln!(out, "# chain {} aborted: {reason}", c.chain_id).unwrap();
        }
    }
    out
}

pub fn fit(cfg: &RunConfig, network: &Path, out: &Path) -> Result<(), CliError> {
    let sampler = cfg.sampler()?;
    let workers: usize = cfg.get("run.workers")?;
    let (net, ids) = load(cfg, network)?;
    let mask = holdout(cfg, &net)?;
    let chains = run_chains(&net, &mask, &sampler, workers)?;

    create_dir(out)?;
    write_posterior(out, &sampler, &chains, cfg.values().clone())?;
    write(&out.join("resolved.cfg"), &cfg.to_text())?;
    write(&out.join("mask.txt"), &mask.to_text())?;
    write(&out.join("nodes.txt"), &ids)?;
    write(&out.join("progress.log"), &progress_log(&chains))?;

    let aborted: Vec<_> = chains.iter().filter_map(|c| c.aborted.as_ref().map(|r| (c.chain_id, r))).collect();
    for (id, reason) in &aborted {
        eprintln!("groupdyn: chain {id} aborted: {reason}");
    }
    if !chains.is_empty() && aborted.len() == chains.len() {
        return Err(CliError::Numerical("every chain aborted".into()));
    }
    Ok(())
}

struct FitRun {
    manifest: PosteriorManifest,
    mask: PairMask,
    chains: Vec<ChainRecord>,
}

fn read_fit(fit: &Path) -> Result<FitRun, CliError> {
    let manifest = read_manifest(fit)?;
    let mask = PairMask::read(fit.join("mask.txt"), manifest.num_nodes, manifest.directed)?;
    let chains = manifest
        .chain_files
        .iter()
        .map(|f| ChainRecord::read(fit.join(f)))
        .collect::<groupdyn::Result<Vec<_>>>()?;
    Ok(FitRun { manifest, mask, chains })
}

fn check_shape(run: &FitRun, net: &DynamicNetwork) -> Result<(), CliError> {
    let m = &run.manifest;
    if (m.num_nodes, m.num_steps, m.directed) != (net.num_nodes(), net.num_steps(), net.is_directed()) {
        return Err(CliError::Data(format!(
            "network has {} nodes, {} steps ({}), fit expects {} nodes, {} steps ({})",
            net.num_nodes(),
            net.num_steps(),
            if net.is_directed() { "directed" } else { "undirected" },
            m.num_nodes,
            m.num_steps,
            if m.directed { "directed" } else { "undirected" }
        )));
    }
    Ok(())
}

/// Per-step sums of held-out link probabilities over `states`.
fn heldout_sums(states: &[ModelState], mask: &PairMask, steps: usize) -> Result<Vec<f64>, CliError> {
    let held = mask.held_out_pairs();
    let mut sums = vec![0.0; held.len() * steps];
    for s in states {
        for t in 0..steps {
            for (k, &(i, j)) in held.iter().enumerate() {
                sums[t * held.len() + k] += link_probability(s, i, j, t)?;
            }
        }
    }
    Ok(sums)
}

fn heldout_scores(sums: &[f64], draws: usize, mask: &PairMask, net: &DynamicNetwork) -> Result<ScoredPairs, CliError> {
    let held = mask.held_out_pairs();
    let mut records = Vec::with_capacity(sums.len());
    for t in 0..net.num_steps() {
        for (k, &(i, j)) in held.iter().enumerate() {
            records.push(ScoredPair {
                t,
                i,
                j,
                label: net.has_link(t, i, j),
                score: sums[t * held.len() + k] / draws as f64,
            });
        }
    }
    Ok(ScoredPairs::new(records)?)
}

pub fn predict_missing(cfg: &RunConfig, network: &Path, fit: &Path, out: &Path) -> Result<(), CliError> {
    let (net, _) = load(cfg, network)?;
    let run = read_fit(fit)?;
    check_shape(&run, &net)?;
    if run.mask.is_empty() {
        return Err(CliError::Config("the fit holds out no pairs (run.mask_fraction = 0)".into()));
    }
    let steps = net.num_steps();
    let mut pooled = vec![0.0; run.mask.len() * steps];
    let mut total = 0usize;
    let mut per_chain = Vec::new();
    for c in &run.chains {
        let states = c.states()?;
        if states.is_empty() {
            continue;
        }
        let sums = heldout_sums(&states, &run.mask, steps)?;
        per_chain.push(score_metrics(&heldout_scores(&sums, states.len(), &run.mask, &net)?)?);
        for (p, s) in pooled.iter_mut().zip(&sums) {
            *p += s;
        }
        total += states.len();
    }
    if total == 0 {
        return Err(CliError::Numerical("no retained posterior draws".into()));
    }
    let scored = heldout_scores(&pooled, total, &run.mask, &net)?;
    let baseline = naive_baseline(&net, &run.mask, BaselineTarget::Missing, baseline_variant(cfg)?)?;
    let model = score_metrics(&scored)?;
    let se = summarize(&per_chain).and_then(|(_, se)| se);

    create_dir(out)?;
    write(&out.join("predictions.csv"), &scored.to_csv())?;
    write(&out.join("baseline.csv"), &baseline.to_csv())?;
    let dataset: String = cfg.get("run.dataset")?;
    let mut rows = MetricRow::rows(&dataset, "model", &model, se.as_ref());
    rows.extend(MetricRow::rows(&dataset, "baseline", &score_metrics(&baseline)?, None));
    write_metrics(cfg, out, &rows)
}

pub fn forecast(cfg: &RunConfig, network: &Path, out: &Path) -> Result<(), CliError> {
    let sampler = cfg.sampler()?;
    let workers: usize = cfg.get("run.workers")?;
    let t_obs: usize = cfg.get("run.tobs")?;
    let (net, _) = load(cfg, network)?;
    let dataset: String = cfg.get("run.dataset")?;
    create_dir(out)?;
    write(&out.join("resolved.cfg"), &cfg.to_text())?;
    if t_obs == 0 {
        let series = forecast_series(&net, &sampler, workers).map_err(range_error)?;
        let mut rows = Vec::new();
        for p in &series {
            let name = format!("{dataset}@{}", p.t_obs);
            rows.extend(MetricRow::rows(&name, "model", &p.model, None));
            rows.extend(MetricRow::rows(&name, "baseline", &p.baseline, None));
        }
        return write_metrics(cfg, out, &rows);
    }
    let outcome = run_forecast(&net, t_obs, &sampler, workers).map_err(range_error)?;
    let mask = PairMask::none(net.num_nodes(), net.is_directed());
    let baseline = naive_baseline(&net, &mask, BaselineTarget::Forecast { t_obs }, baseline_variant(cfg)?)?;
    write(&out.join("predictions.csv"), &outcome.scored.to_csv())?;
    write(&out.join("baseline.csv"), &baseline.to_csv())?;
    let mut rows = MetricRow::rows(&dataset, "model", &score_metrics(&outcome.scored)?, None);
    rows.extend(MetricRow::rows(&dataset, "baseline", &score_metrics(&baseline)?, None));
    write_metrics(cfg, out, &rows)
}

fn range_error(e: groupdyn::Error) -> CliError {
    match e {
        groupdyn::Error::InvalidArgument(m) => CliError::Config(format!("run.tobs: {m}")),
        other => other.into(),
    }
}

/// Reads `t,i,j,score` (or `prob`) rows with one-based `t`.
fn read_predictions(path: &Path, directed: bool) -> Result<BTreeMap<(usize, usize, usize), f64>, CliError> {
    let data = |m: String| CliError::Data(format!("{}: {m}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| data(e.to_string()))?;
    let headers = reader.headers().map_err(|e| data(e.to_string()))?.clone();
    let column = |names: &[&str]| {
        headers
            .iter()
            .position(|h| names.contains(&h))
            .ok_or_else(|| data(format!("missing column {}", names.join(" or "))))
    };
    let (ct, ci, cj) = (column(&["t"])?, column(&["i"])?, column(&["j"])?);
    let cs = column(&["score", "prob"])?;
    let mut out = BTreeMap::new();
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| data(e.to_string()))?;
        let line = row + 2;
        let field = |c: usize| rec.get(c).unwrap_or("");
        let int = |c: usize| {
            field(c)
                .parse::<usize>()
                .map_err(|_| data(format!("line {line}: bad integer {:?}", field(c))))
        };
        let (t, i, j) = (int(ct)?, int(ci)?, int(cj)?);
        if t == 0 {
            return Err(data(format!("line {line}: time indices start at 1")));
        }
        let score: f64 = field(cs)
            .parse()
            .map_err(|_| data(format!("line {line}: bad score {:?}", field(cs))))?;
        let (i, j) = if directed || i < j { (i, j) } else { (j, i) };
        if out.insert((t - 1, i, j), score).is_some() {
            return Err(data(format!("line {line}: duplicate pair t={t} i={i} j={j}")));
        }
    }
    Ok(out)
}

fn coverage_error(label: &str, pairs: &[(usize, usize, usize)]) -> String {
    let mut msg = format!("{} {label} pair(s):", pairs.len());
    for (t, i, j) in pairs.iter().take(COVERAGE_LIST_CAP) {
        write!(msg, " (t={}, i={i}, j={j})", t + 1).unwrap();
    }
    if pairs.len() > COVERAGE_LIST_CAP {
        write!(msg, " and {} more", pairs.len() - COVERAGE_LIST_CAP).unwrap();
    }
    msg
}

pub fn evaluate(
    cfg: &RunConfig,
    truth: &Path,
    predictions: &Path,
    mask: Option<&Path>,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let (net, _) = load(cfg, truth)?;
    let required: Vec<(usize, usize, usize)> = match mask {
        Some(path) => {
            let mask = PairMask::read(path, net.num_nodes(), net.is_directed())?;
            let held = mask.held_out_pairs();
            (0..net.num_steps()).flat_map(|t| held.iter().map(move |&(i, j)| (t, i, j))).collect()
        }
        None => {
            let t_obs: usize = cfg.get("run.tobs")?;
            if t_obs == 0 || t_obs >= net.num_steps() {
                return Err(CliError::Config(format!(
                    "evaluate needs --mask, or run.tobs in 1..={} for a forecast",
                    net.num_steps() - 1
                )));
            }
            net.pairs().map(|(i, j)| (t_obs, i, j)).collect()
        }
    };
    let mut given = read_predictions(predictions, net.is_directed())?;
    let mut missing = Vec::new();
    let mut records = Vec::with_capacity(required.len());
    for &(t, i, j) in &required {
        match given.remove(&(t, i, j)) {
            Some(score) => records.push(ScoredPair {
                t,
                i,
                j,
                label: net.has_link(t, i, j),
                score,
            }),
            None => missing.push((t, i, j)),
        }
    }
    let extra: Vec<_> = given.into_keys().collect();
    if !missing.is_empty() || !extra.is_empty() {
        let mut parts = Vec::new();
        if !missing.is_empty() {
            parts.push(coverage_error("missing", &missing));
        }
        if !extra.is_empty() {
            parts.push(coverage_error("unexpected", &extra));
        }
        return Err(CliError::Data(format!("prediction coverage: {}", parts.join("; "))));
    }
    let scored = ScoredPairs::new(records).map_err(|e| CliError::Data(e.to_string()))?;
    let metrics: Metrics = score_metrics(&scored)?;
    let rows = MetricRow::rows(&cfg.get::<String>("run.dataset")?, "predictions", &metrics, None);
    let (text, _) = metrics_text(cfg, &rows)?;
    match output {
        Some(path) => write(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn validate_fit(cfg: &RunConfig, network: &Path, fit: &Path) -> Result<(), CliError> {
    let (net, _) = load(cfg, network)?;
    let run = read_fit(fit)?;
    check_shape(&run, &net)?;
    let mut scrambled = net.clone();
    for t in 0..net.num_steps() {
        for (i, j) in run.mask.held_out_pairs() {
            scrambled.set_link(t, i, j, !net.has_link(t, i, j))?;
        }
    }
    let mut failures = Vec::new();
    let mut checked = 0usize;
    for c in &run.chains {
        let Some(last) = c.snapshots.last() else { continue };
        let state = ModelState::try_from(last.clone())?;
        let ll = log_likelihood(&state, &net, Some(&run.mask))?;
        let flipped = log_likelihood(&state, &scrambled, Some(&run.mask))?;
        let traced = c.loglik_trace.last().copied().unwrap_or(f64::NAN);
        let tol = 1e-8 * ll.abs().max(1.0);
        let ok_trace = (ll - traced).abs() <= tol;
        let ok_mask = ll == flipped;
        println!(
            "chain {}: recomputed {ll} traced {traced} {} held-out flip {}",
            c.chain_id,
            if ok_trace { "match" } else { "MISMATCH" },
            if ok_mask { "ignored" } else { "CHANGES LIKELIHOOD" }
        );
        if !(ok_trace && ok_mask) {
            failures.push(c.chain_id);
        }
        checked += 1;
    }
    println!("held-out pairs {}; chains checked {checked}", run.mask.len());
    if checked == 0 {
        return Err(CliError::Data("fit has no retained draws to check".into()));
    }
    if !failures.is_empty() {
        return Err(CliError::Numerical(format!("validation failed for chains {failures:?}")));
    }
    Ok(())
}

pub fn validate_sampler(cfg: &RunConfig, rounds: usize) -> Result<(), CliError> {
    let defaults = GewekeConfig::default();
    let gcfg = GewekeConfig {
        forward_draws: rounds,
        rounds,
        seed: cfg.get("run.seed")?,
        sampler: SamplerConfig {
            gibbs_sweeps: cfg.get("sampler.gibbs_sweeps")?,
            hmc_step: cfg.get("sampler.hmc_step")?,
            hmc_leaps: cfg.get("sampler.hmc_leaps")?,
            ..defaults.sampler.clone()
        },
        ..defaults
    };
    if rounds < 2 * gcfg.batches {
        return Err(CliError::Config(format!("--rounds must be at least {}", 2 * gcfg.batches)));
    }
    let report = geweke_joint_test(&gcfg, None)?;
    println!("statistic,forward_mean,chain_mean,z");
    for s in &report.stats {
        println!("{},{},{},{}", s.name, s.forward_mean, s.chain_mean, s.z);
    }
    if report.max_abs_z() >= 4.0 {
        return Err(CliError::Numerical(format!("max |z| = {} >= 4", report.max_abs_z())));
    }
    Ok(())
}

pub fn report(fit: &Path, chain: usize, out: &Path) -> Result<(), CliError> {
    let run = read_fit(fit)?;
    let record = run
        .chains
        .iter()
        .find(|c| c.chain_id == chain)
        .ok_or_else(|| CliError::Config(format!("fit has no chain {chain}")))?;
    let last = record
        .snapshots
        .last()
        .ok_or_else(|| CliError::Data(format!("chain {chain} retained no draws")))?;
    let state = ModelState::try_from(last.clone())?;
    create_dir(out)?;

    let steps = state.num_steps();
    let mut summary = String::from("label,birth,death,join,leave,theta00,theta01,theta10,theta11,memberships\n");
    for g in &state.groups {
        let a = g.affinity.0;
        writeln!(
            summary,
            "{},{},{},{},{},{},{},{},{},{}",
            g.label,
            g.lifetime.birth + 1,
            g.lifetime.death + 1,
            g.transition.join,
            g.transition.leave,
            a[0][0],
            a[0][1],
            a[1][0],
            a[1][1],
            g.members.count_ones()
        )
        .unwrap();
        let mut raster = String::from("node");
        for t in 1..=steps {
            write!(raster, ",t{t}").unwrap();
        }
        raster.push('\n');
        for i in 0..state.num_nodes() {
            write!(raster, "{i}").unwrap();
            for t in 0..steps {
                write!(raster, ",{}", u8::from(g.is_member(i, t))).unwrap();
            }
            raster.push('\n');
        }
        write(&out.join(format!("membership_{}.csv", g.label)), &raster)?;
    }
    write(&out.join("groups.csv"), &summary)?;

    let mut counts = String::from("chain,draw,groups\n");
    for c in &run.chains {
        for (d, s) in c.snapshots.iter().enumerate() {
            writeln!(counts, "{},{},{}", c.chain_id, d + 1, s.groups.len()).unwrap();
        }
    }
    write(&out.join("group_counts.csv"), &counts)?;

    let mut active = String::from("t,active\n");
    let timeline = state.timeline();
    for t in 0..steps {
        writeln!(active, "{},{}", t + 1, timeline.active_count(t)).unwrap();
    }
    write(&out.join("active_groups.csv"), &active)?;
    Ok(())
}
