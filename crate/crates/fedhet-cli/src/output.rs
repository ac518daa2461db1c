//! Metrics export: plot-ready CSV and a reproducibility summary.

use std::path::Path;

use serde::{Deserialize, Serialize};

use fedhet::experiment::{RoundRecord, RunConfig};

/// Stable schema: `round,client_0,...,client_{K-1},mean,min,max`.
pub fn render_csv(records: &[RoundRecord]) -> String {
    let clients = records.first().map_or(0, |r| r.client_accuracy.len());
    let mut out = String::from("round");
    for i in 0..clients {
        out.push_str(&format!(",client_{i}"));
    }
    out.push_str(",mean,min,max\n");
    for r in records {
        out.push_str(&r.round.to_string());
        for a in &r.client_accuracy {
            out.push_str(&format!(",{a}"));
        }
        out.push_str(&format!(
            ",{},{},{}\n",
            r.mean_accuracy(),
            r.min_accuracy(),
            r.max_accuracy()
        ));
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RoundSummary {
    pub round: usize,
    pub accuracy: Vec<f64>,
    pub train_loss: Vec<f64>,
    pub param_hash: String,
    pub duration_ms: f64,
}

/// Everything needed to reproduce and compare a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub version: String,
    pub scenario: String,
    pub seed: u64,
    pub config: RunConfig,
    pub dataset: serde_json::Value,
    pub stop_reason: Option<String>,
    pub final_accuracy: Vec<f64>,
    pub rounds: Vec<RoundSummary>,
}

impl Summary {
    pub fn new(
        scenario: &str,
        cfg: &RunConfig,
        dataset: serde_json::Value,
        records: &[RoundRecord],
    ) -> Summary {
        Summary {
            version: env!("CARGO_PKG_VERSION").to_string(),
            scenario: scenario.to_string(),
            seed: cfg.experiment_seed,
            config: cfg.clone(),
            dataset,
            stop_reason: records
                .last()
                .and_then(|r| r.stop)
                .map(|s| s.to_string()),
            final_accuracy: records
                .last()
                .map(|r| r.client_accuracy.clone())
                .unwrap_or_default(),
            rounds: records
                .iter()
                .map(|r| RoundSummary {
                    round: r.round,
                    accuracy: r.client_accuracy.clone(),
                    train_loss: r.client_train_loss.clone(),
                    param_hash: format!("{:016x}", r.param_hash),
                    duration_ms: r.duration.as_secs_f64() * 1e3,
                })
                .collect(),
        }
    }
}

pub fn write_run_outputs(
    out_dir: &Path,
    scenario: &str,
    cfg: &RunConfig,
    dataset: serde_json::Value,
    records: &[RoundRecord],
) -> Result<(), String> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| format!("cannot create {}: {e}", out_dir.display()))?;
    let csv_path = out_dir.join("metrics.csv");
    std::fs::write(&csv_path, render_csv(records))
        .map_err(|e| format!("cannot write {}: {e}", csv_path.display()))?;

    let summary = Summary::new(scenario, cfg, dataset, records);
    let json_path = out_dir.join("summary.json");
    let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
    std::fs::write(&json_path, text)
        .map_err(|e| format!("cannot write {}: {e}", json_path.display()))?;
    Ok(())
}
