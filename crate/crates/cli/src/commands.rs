use std::collections::HashSet;
use std::path::Path;

use anyhow::Context;
use serde_json::{json, Value};

use pzero::config::{merge, EstimatorFile, ProcessFile, Study, SCHEMA_VERSION};
use pzero::estimators::rank_sources_with;
use pzero::experiments::{records_csv, run_batch_on_graph, summary_csv, SweepEntry, SweepResult};
use pzero::graph::{write_edge_list, LoadedGraph};
use pzero::{
    batch_simulate, generate as build_graph, load_edge_list, rank_curve, Error, GraphSpec,
    LikelihoodReport, NodeId, Observation, Realization,
};

use crate::args::{DetectArgs, ExperimentArgs, GenerateArgs, SimulateArgs, SweepArgs};
use crate::output::{self, create_dir, label_dir, write, write_json};

fn graph_stats(loaded: &LoadedGraph) -> Value {
    json!({
        "nodes": loaded.graph.node_count(),
        "edges": loaded.graph.edge_count(),
    })
}

fn load_graph(path: &Path) -> anyhow::Result<LoadedGraph> {
    load_edge_list(path).with_context(|| format!("loading graph {}", path.display()))
}

fn to_internal(loaded: &LoadedGraph, id: u64) -> anyhow::Result<NodeId> {
    loaded
        .external_ids
        .binary_search(&id)
        .map_err(|_| anyhow::anyhow!("node {id} does not appear in the graph"))
}

fn read_realization(path: &Path, what: &str) -> anyhow::Result<Realization> {
    let text = output::read(path)?;
    Realization::from_text(text.trim()).with_context(|| format!("parsing {what} {}", path.display()))
}

pub fn generate(args: GenerateArgs) -> anyhow::Result<()> {
    let spec = args
        .generator
        .spec(args.seed)?
        .ok_or_else(|| anyhow::anyhow!("one of --grid, --ring, --ws, --er or --ba is required"))?;
    let graph = build_graph(&spec)?;
    let stats = format!(
        "nodes={} edges={} mean_degree={:.4}",
        graph.node_count(),
        graph.edge_count(),
        graph.mean_degree()
    );
    let text = write_edge_list(&graph);
    match &args.out {
        Some(path) => {
            write(path, &text)?;
            let manifest = json!({
                "version": SCHEMA_VERSION,
                "command": "generate",
                "graph": spec,
                "nodes": graph.node_count(),
                "edges": graph.edge_count(),
            });
            write_json(&output::sidecar(path), &manifest)?;
            println!("{stats}");
        }
        None => {
            print!("{text}");
            eprintln!("{stats}");
        }
    }
    Ok(())
}

pub fn simulate(args: SimulateArgs) -> anyhow::Result<()> {
    anyhow::ensure!(args.runs > 0, "--runs must be at least 1");
    let loaded = load_graph(&args.graph)?;
    let process = args.process.file()?;
    let params = process.resolve()?;
    let source = to_internal(&loaded, args.source)?;
    let runs = batch_simulate(&loaded.graph, &params, source, args.runs, args.seed)?;
    let mut text = String::new();
    for r in &runs {
        text.push_str(&r.to_text());
        text.push('\n');
    }
    let mean = runs.iter().map(|r| r.count_ones()).sum::<usize>() as f64 / runs.len() as f64;
    match &args.out {
        Some(dir) => {
            create_dir(dir)?;
            write(&dir.join("realizations.txt"), &text)?;
            let manifest = json!({
                "version": SCHEMA_VERSION,
                "command": "simulate",
                "graph": {"path": args.graph, "stats": graph_stats(&loaded)},
                "process": ProcessFile::from_params(&params),
                "source": args.source,
                "runs": args.runs,
                "seed": args.seed,
            });
            write_json(&dir.join("manifest.json"), &manifest)?;
        }
        None => print!("{text}"),
    }
    eprintln!("{} run(s), mean outbreak size {mean:.2}", runs.len());
    Ok(())
}

/// Report with candidate ids translated back to the ids used in the file.
fn external_report(mut report: LikelihoodReport, loaded: &LoadedGraph) -> LikelihoodReport {
    let ext = |i: NodeId| loaded.external_ids[i] as NodeId;
    for r in &mut report.ranked {
        r.candidate_id = ext(r.candidate_id);
    }
    report.argmax = ext(report.argmax);
    report
}

pub fn detect(args: DetectArgs) -> anyhow::Result<()> {
    let loaded = load_graph(&args.graph)?;
    let n = loaded.graph.node_count();
    let observed = read_realization(&args.observed, "observed realization")?;
    if observed.len() != n {
        return Err(Error::Dimension { expected: n, found: observed.len() }).with_context(|| {
            format!(
                "{} has {} positions but the graph has {n} nodes",
                args.observed.display(),
                observed.len()
            )
        });
    }
    let observation = match &args.mask {
        Some(path) => {
            let mask = read_realization(path, "mask")?;
            if mask.len() != n {
                return Err(Error::Dimension { expected: n, found: mask.len() })
                    .with_context(|| format!("{} has {} positions but the graph has {n} nodes", path.display(), mask.len()));
            }
            Observation::masked(&observed, mask)?
        }
        None => Observation::full(observed),
    };
    let candidates = observation.infected();
    anyhow::ensure!(!candidates.is_empty(), "the observation contains no infected nodes");

    let params = args.process.file()?.resolve()?;
    let graph_spec = GraphSpec::EdgeList { path: args.graph.clone() };
    let spec = args.estimator.file().resolve(&graph_spec)?;
    let report = rank_sources_with(
        &loaded.graph,
        &params,
        &observation,
        &candidates,
        &spec,
        args.tie_rule.into(),
        args.seed,
    )?;
    let report = external_report(report, &loaded);

    create_dir(&args.out)?;
    write(&args.out.join("report.csv"), report.to_csv()?)?;
    write(&args.out.join("report.json"), report.to_json()? + "\n")?;
    let manifest = json!({
        "version": SCHEMA_VERSION,
        "command": "detect",
        "graph": {"path": args.graph, "stats": graph_stats(&loaded)},
        "observed": args.observed,
        "mask": args.mask,
        "process": ProcessFile::from_params(&params),
        "estimator": EstimatorFile::from_spec(&spec),
        "tie_rule": report.tie_rule,
        "seed": args.seed,
    });
    write_json(&args.out.join("manifest.json"), &manifest)?;
    let top = &report.ranked[0];
    println!("argmax {} score {:?} ({} candidates)", report.argmax, top.score, report.len());
    Ok(())
}

/// Renames a `T` horizon key to `horizon` so overrides cannot collide with it.
fn normalize_horizon(config: &mut Value) {
    if let Some(process) = config.get_mut("process").and_then(Value::as_object_mut) {
        if let Some(t) = process.remove("T") {
            process.entry("horizon").or_insert(t);
        }
    }
}

/// Applies command-line overrides to a config file. For a study the
/// overrides go into every run so they take precedence over run settings.
fn apply_overlay(mut config: Value, overlay: &Value) -> Value {
    let empty = overlay.as_object().is_none_or(|o| o.is_empty());
    if let Some(runs) = config.get_mut("runs").and_then(Value::as_array_mut) {
        for run in runs {
            if empty {
                break;
            }
            if let Some(run) = run.as_object_mut() {
                let set = run.entry("set").or_insert_with(|| json!({}));
                if set.is_null() {
                    *set = json!({});
                }
                normalize_horizon(set);
                merge(set, overlay);
            }
        }
        if let Some(base) = config.get_mut("base") {
            normalize_horizon(base);
        }
    } else {
        normalize_horizon(&mut config);
        merge(&mut config, overlay);
    }
    config
}

fn load_study(path: &Path, overlay: &Value) -> anyhow::Result<Study> {
    let text = output::read(path)?;
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: invalid JSON: {e}", path.display())))?;
    let study = Study::from_value(apply_overlay(value, overlay))
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    Ok(study)
}

pub fn experiment(args: ExperimentArgs) -> anyhow::Result<()> {
    let overlay = args.overlay()?;
    let study = match &args.config {
        Some(path) => load_study(path, &overlay)?,
        None => Study::from_value(overlay)?,
    };
    anyhow::ensure!(
        study.runs.len() == 1,
        "the config defines {} runs; use `pzero sweep` for multi-run studies",
        study.runs.len()
    );
    execute(&study, args.batch.out.as_deref(), args.batch.dry_run, true)
}

pub fn sweep(args: SweepArgs) -> anyhow::Result<()> {
    let overlay = Value::Object(args.batch.overlay());
    let study = load_study(&args.config, &overlay)?;
    execute(&study, args.batch.out.as_deref(), args.batch.dry_run, false)
}

fn run_one(label: &str, config: &pzero::ExperimentConfig) -> pzero::Result<SweepResult> {
    let graph = build_graph(&config.graph)?;
    let total = config.n_experiments;
    let progress = |done: usize| eprint!("\r{label}: {done}/{total} experiments");
    let records = run_batch_on_graph(&graph, config, Some(&progress));
    eprintln!();
    let records = records?;
    let curve = rank_curve(&records)?;
    Ok(SweepResult { records, curve })
}

/// Runs every batch of `study`, writing `records.csv` and `curve.csv` per run
/// (directly into `out` for a single experiment, into `out/<label>/`
/// otherwise), then `summary.csv`. The manifest is written first.
fn execute(study: &Study, out: Option<&Path>, dry_run: bool, single: bool) -> anyhow::Result<()> {
    let manifest = study.manifest_json();
    if dry_run {
        print!("{manifest}");
        return Ok(());
    }
    let out = out.ok_or_else(|| anyhow::anyhow!("--out is required"))?;
    let mut dirs = HashSet::new();
    for (label, _) in &study.runs {
        anyhow::ensure!(
            dirs.insert(label_dir(label)),
            "run label {label:?} collides with another run's output directory"
        );
    }
    create_dir(out)?;
    write(&out.join("manifest.json"), &manifest)?;

    let mut entries = Vec::with_capacity(study.runs.len());
    for (label, config) in &study.runs {
        let outcome = run_one(label, config);
        match &outcome {
            Ok(result) => {
                let dir = if single { out.to_path_buf() } else { out.join(label_dir(label)) };
                create_dir(&dir)?;
                write(&dir.join("records.csv"), records_csv(&result.records))?;
                write(&dir.join("curve.csv"), result.curve.to_csv())?;
                eprintln!(
                    "{label}: area {:.4} over {} experiments ({} with unobserved source)",
                    result.curve.area(),
                    result.curve.len(),
                    result.curve.excluded
                );
            }
            Err(e) => eprintln!("{label}: failed: {e}"),
        }
        entries.push(SweepEntry { label: label.clone(), outcome });
    }
    write(&out.join("summary.csv"), summary_csv(&entries))?;

    let failed: Vec<SweepEntry> = entries.into_iter().filter(|e| e.outcome.is_err()).collect();
    match failed.len() {
        0 => Ok(()),
        1 if single => Err(failed.into_iter().next().unwrap().outcome.unwrap_err().into()),
        k => anyhow::bail!("{k} of {} runs failed; see summary.csv", study.runs.len()),
    }
}
