use std::path::{Path, PathBuf};
use std::time::Duration;

use serde_json::json;

use fedhet::data::sample_shard;
use fedhet::experiment::{build_shards, run_experiment};
use fedhet::wire::{client_loop, serve, ServeOptions};
use fedhet::Error as FedError;

use crate::config::{resolve, Overrides, ResolvedExperiment};
use crate::output::{write_run_outputs, Summary};

/// Errors split by exit code: 2 for configuration, 3 for runtime aborts.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) => m,
            CliError::Runtime(m) => m,
        }
    }
}

fn runtime(e: FedError) -> CliError {
    CliError::Runtime(e.to_string())
}

fn dataset_descriptor(exp: &ResolvedExperiment) -> serde_json::Value {
    let d = &exp.file.dataset;
    match d.source.as_str() {
        "synth" => json!({
            "source": "synth",
            "labels": d.labels,
            "per_label": d.per_label,
            "noise": d.noise,
            "seed": d.seed.unwrap_or_else(|| fedhet::rng::synth_seed(exp.run.experiment_seed)),
        }),
        _ => json!({
            "source": "idx",
            "images": d.images,
            "labels_file": d.labels_file,
        }),
    }
}

pub fn cmd_run(
    config: &Path,
    overrides: &Overrides,
    wire: bool,
    listen: Option<&str>,
    timeout_secs: u64,
) -> Result<(), CliError> {
    let exp = resolve(config, overrides).map_err(CliError::Config)?;
    let records = if wire {
        let listen = listen.ok_or_else(|| {
            CliError::Config("--wire requires --listen <host:port>".into())
        })?;
        serve_records(&exp, listen, timeout_secs)?
    } else {
        run_experiment(&exp.source, &exp.run).map_err(runtime)?
    };
    let dataset = dataset_descriptor(&exp);
    write_run_outputs(
        &exp.out,
        &exp.file.scenario.clients,
        &exp.run,
        dataset,
        &records,
    )
    .map_err(CliError::Runtime)?;
    let last = records.last().expect("at least one round ran");
    println!(
        "run complete: {} rounds, stop = {}, final accuracy mean {:.4} min {:.4} max {:.4}",
        records.len(),
        last.stop.map(|s| s.to_string()).unwrap_or_default(),
        last.mean_accuracy(),
        last.min_accuracy(),
        last.max_accuracy(),
    );
    println!("wrote {}", exp.out.join("metrics.csv").display());
    Ok(())
}

fn serve_records(
    exp: &ResolvedExperiment,
    listen: &str,
    timeout_secs: u64,
) -> Result<Vec<fedhet::experiment::RoundRecord>, CliError> {
    let opts = ServeOptions {
        connect_timeout: Duration::from_secs(timeout_secs),
    };
    serve(&exp.source, &exp.run, listen, &opts).map_err(|e| match e {
        FedError::WireAcceptTimeout { connected: 0, .. } => CliError::Config(format!(
            "{e}; check client processes and --listen address"
        )),
        other => CliError::Runtime(other.to_string()),
    })
}

pub fn cmd_serve(
    config: &Path,
    overrides: &Overrides,
    listen: &str,
    timeout_secs: u64,
) -> Result<(), CliError> {
    let exp = resolve(config, overrides).map_err(CliError::Config)?;
    println!(
        "serving {} clients on {listen} (connect timeout {timeout_secs}s)",
        exp.run.num_clients()
    );
    let records = serve_records(&exp, listen, timeout_secs)?;
    let dataset = dataset_descriptor(&exp);
    write_run_outputs(
        &exp.out,
        &exp.file.scenario.clients,
        &exp.run,
        dataset,
        &records,
    )
    .map_err(CliError::Runtime)?;
    println!("wrote {}", exp.out.join("metrics.csv").display());
    Ok(())
}

pub fn cmd_client(
    config: &Path,
    overrides: &Overrides,
    connect: &str,
    client_id: usize,
    timeout_secs: u64,
) -> Result<(), CliError> {
    let exp = resolve(config, overrides).map_err(CliError::Config)?;
    let spec = exp
        .run
        .shard_specs
        .get(client_id)
        .ok_or_else(|| {
            CliError::Config(format!(
                "client id {client_id} out of range: the scenario has {} clients",
                exp.run.num_clients()
            ))
        })?
        .clone();
    let shard = sample_shard(&exp.source, &spec, exp.run.scale).map_err(runtime)?;
    let reason = client_loop(
        connect,
        client_id,
        &exp.run.model,
        &shard,
        Duration::from_secs(timeout_secs),
    )
    .map_err(|e| CliError::Runtime(e.to_string()))?;
    println!("client {client_id} finished: {reason}");
    Ok(())
}

pub fn cmd_partition(config: &Path, overrides: &Overrides) -> Result<(), CliError> {
    let exp = resolve(config, overrides).map_err(CliError::Config)?;
    let shards = build_shards(&exp.source, &exp.run).map_err(runtime)?;
    std::fs::create_dir_all(&exp.out)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", exp.out.display())))?;

    let mut csv = String::from("client,label,train,test\n");
    for (id, shard) in shards.iter().enumerate() {
        let (train, test) = fedhet::data::shard_histogram(shard);
        for label in 0..fedhet::NUM_CLASSES {
            csv.push_str(&format!("{id},{label},{},{}\n", train[label], test[label]));
        }
        let manifest = shard.manifest(exp.run.scale);
        let path = exp.out.join(format!("client_{id}_manifest.json"));
        std::fs::write(
            &path,
            serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
        )
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    let csv_path = exp.out.join("histogram.csv");
    std::fs::write(&csv_path, csv)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", csv_path.display())))?;
    println!(
        "wrote {} and {} manifests",
        csv_path.display(),
        shards.len()
    );
    Ok(())
}

/// One comparison line. The metric fields of two runs with identical
/// records are identical regardless of where the runs live on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub name: String,
    pub algorithm: String,
    pub clients: usize,
    pub rounds: usize,
    pub final_min: f64,
    pub final_mean: f64,
    pub final_max: f64,
    pub rounds_to_threshold: Option<usize>,
    pub threshold: f64,
}

pub fn compare_rows(dir: &Path, default_threshold: f64) -> Result<Vec<CompareRow>, CliError> {
    let mut rows = Vec::new();
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join("summary.json").is_file())
        .collect();
    entries.sort();
    for run_dir in entries {
        let path = run_dir.join("summary.json");
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let summary: Summary = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        if summary.rounds.is_empty() || summary.final_accuracy.is_empty() {
            return Err(CliError::Config(format!(
                "{}: summary holds no rounds",
                path.display()
            )));
        }
        let threshold = summary.config.target_accuracy.unwrap_or(default_threshold);
        let min = summary.final_accuracy.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = summary
            .final_accuracy
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let mean =
            summary.final_accuracy.iter().sum::<f64>() / summary.final_accuracy.len() as f64;
        let rounds_to_threshold = summary.rounds.iter().find_map(|r| {
            let rmin = r.accuracy.iter().cloned().fold(f64::INFINITY, f64::min);
            (rmin >= threshold).then_some(r.round)
        });
        rows.push(CompareRow {
            name: run_dir
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            algorithm: summary.config.algorithm.kind.to_string(),
            clients: summary.final_accuracy.len(),
            rounds: summary.rounds.len(),
            final_min: min,
            final_mean: mean,
            final_max: max,
            rounds_to_threshold,
            threshold,
        });
    }
    if rows.len() < 2 {
        return Err(CliError::Config(format!(
            "{} holds {} completed run(s); compare needs at least 2",
            dir.display(),
            rows.len()
        )));
    }
    let clients = rows[0].clients;
    if let Some(bad) = rows.iter().find(|r| r.clients != clients) {
        return Err(CliError::Config(format!(
            "runs are incomparable: {} has {} clients, {} has {}",
            rows[0].name, clients, bad.name, bad.clients
        )));
    }
    Ok(rows)
}

pub fn render_compare_table(rows: &[CompareRow]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<20} {:<8} {:>7} {:>7} {:>10} {:>10} {:>10} {:>10}\n",
        "run", "algo", "clients", "rounds", "final_min", "final_mean", "final_max", "to_thresh"
    ));
    for r in rows {
        out.push_str(&format!(
            "{:<20} {:<8} {:>7} {:>7} {:>10.4} {:>10.4} {:>10.4} {:>10}\n",
            r.name,
            r.algorithm,
            r.clients,
            r.rounds,
            r.final_min,
            r.final_mean,
            r.final_max,
            r.rounds_to_threshold
                .map(|n| n.to_string())
                .unwrap_or_else(|| "-".into()),
        ));
    }
    out
}

pub fn cmd_compare(dir: &Path, threshold: f64, out: Option<&Path>) -> Result<(), CliError> {
    let rows = compare_rows(dir, threshold)?;
    let table = render_compare_table(&rows);
    print!("{table}");
    if let Some(path) = out {
        let mut csv = String::from(
            "run,algorithm,clients,rounds,final_min,final_mean,final_max,rounds_to_threshold\n",
        );
        for r in &rows {
            csv.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                r.name,
                r.algorithm,
                r.clients,
                r.rounds,
                r.final_min,
                r.final_mean,
                r.final_max,
                r.rounds_to_threshold
                    .map(|n| n.to_string())
                    .unwrap_or_default(),
            ));
        }
        std::fs::write(path, csv)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}
