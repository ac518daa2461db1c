//! Experiment file parsing and resolution.
//!
//! The config is a sectioned key-value (TOML) file. Every field has a
//! documented default except the dataset source. The scenario shorthand is
//! a comma-separated list of `<count>x<type>` terms with types from
//! `even-more`, `even-less`, `zipf-more`, `zipf-less`, e.g.
//! `"1xzipf-more,9xeven-more"`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use fedhet::data::{load_idx, synth_dataset, LabelDist, LabeledDataset, ShardSpec, SizeClass};
use fedhet::experiment::{EvalMode, RunConfig};
use fedhet::fed::{AlgorithmConfig, AlgorithmKind};
use fedhet::nn::{ModelSpec, OptimizerKind};
use fedhet::rng::{seeded_rank_perm, shard_seed, synth_seed};
use fedhet::NUM_CLASSES;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub dataset: DatasetSection,
    #[serde(default)]
    pub scenario: ScenarioSection,
    #[serde(default)]
    pub algorithm: AlgorithmSection,
    #[serde(default)]
    pub model: ModelSection,
    #[serde(default)]
    pub run: RunSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    /// "synth" or "idx".
    pub source: String,
    /// synth: number of distinct labels.
    #[serde(default = "default_labels")]
    pub labels: usize,
    /// synth: samples generated per label in the source pool.
    #[serde(default = "default_per_label")]
    pub per_label: usize,
    /// synth: Gaussian pixel noise (std dev) around each label template.
    #[serde(default = "default_noise")]
    pub noise: f64,
    /// synth: generation seed; derived from the run seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// idx: images file path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub images: Option<PathBuf>,
    /// idx: labels file path.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels_file: Option<PathBuf>,
}

fn default_labels() -> usize {
    NUM_CLASSES
}
fn default_per_label() -> usize {
    450
}
fn default_noise() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    /// Comma-separated `<count>x<type>` terms.
    #[serde(default = "default_clients")]
    pub clients: String,
}

fn default_clients() -> String {
    "10xeven-more".into()
}

impl Default for ScenarioSection {
    fn default() -> Self {
        ScenarioSection {
            clients: default_clients(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlgorithmSection {
    pub kind: String,
    /// Proximal coefficient for fedprox/fedmix.
    pub mu: f32,
    pub local_epochs: usize,
    pub batch_size: usize,
    pub lr: f32,
    /// "sgd" or "adam".
    pub optimizer: String,
}

impl Default for AlgorithmSection {
    fn default() -> Self {
        AlgorithmSection {
            kind: "fedavg".into(),
            mu: 0.01,
            local_epochs: 1,
            batch_size: 32,
            lr: 1e-3,
            optimizer: "adam".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelSection {
    /// "mlp" or "cnn".
    pub kind: String,
    /// mlp hidden layer sizes; empty for a linear classifier.
    pub hidden: Vec<usize>,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            kind: "mlp".into(),
            hidden: vec![128],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    pub rounds: usize,
    pub seed: u64,
    /// Global size-table scale; 1.0 reproduces the full 6000/1000 table.
    pub scale: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_accuracy: Option<f64>,
    /// "global" or "local": which model per-client accuracy is measured with.
    pub eval: String,
    /// Zipf exponent for zipf-* shard types.
    pub zipf_a: f64,
    pub out: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection {
            rounds: 30,
            seed: 42,
            scale: 0.1,
            target_accuracy: None,
            eval: "global".into(),
            zipf_a: 2.0,
            out: PathBuf::from("runs/out"),
        }
    }
}

/// One term of the scenario shorthand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioTerm {
    pub count: usize,
    pub even: bool,
    pub more: bool,
}

pub fn parse_scenario(spec: &str) -> Result<Vec<ScenarioTerm>, String> {
    let mut terms = Vec::new();
    for raw in spec.split(',') {
        let term = raw.trim();
        if term.is_empty() {
            return Err(format!("empty scenario term in {spec:?}"));
        }
        let (count, kind) = term
            .split_once('x')
            .ok_or_else(|| format!("scenario term {term:?} is not <count>x<type>"))?;
        let count: usize = count
            .trim()
            .parse()
            .map_err(|_| format!("bad client count in scenario term {term:?}"))?;
        let (even, more) = match kind.trim() {
            "even-more" => (true, true),
            "even-less" => (true, false),
            "zipf-more" => (false, true),
            "zipf-less" => (false, false),
            other => {
                return Err(format!(
                    "unknown shard type {other:?} (expected even-more|even-less|zipf-more|zipf-less)"
                ))
            }
        };
        terms.push(ScenarioTerm { count, even, more });
    }
    if terms.iter().map(|t| t.count).sum::<usize>() == 0 {
        return Err("scenario resolves to zero clients".into());
    }
    Ok(terms)
}

/// A fully resolved experiment: source pool, run config, output location.
pub struct ResolvedExperiment {
    pub file: ExperimentFile,
    pub source: LabeledDataset,
    pub run: RunConfig,
    pub out: PathBuf,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub scale: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

pub fn load_file(path: &Path) -> Result<ExperimentFile, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    toml::from_str(&text).map_err(|e| format!("config {}: {e}", path.display()))
}

pub fn resolve(path: &Path, overrides: &Overrides) -> Result<ResolvedExperiment, String> {
    let mut file = load_file(path)?;
    if let Some(scale) = overrides.scale {
        file.run.scale = scale;
    }
    if let Some(seed) = overrides.seed {
        file.run.seed = seed;
    }
    if let Some(out) = &overrides.out {
        file.run.out = out.clone();
    }
    resolve_file(file)
}

pub fn resolve_file(file: ExperimentFile) -> Result<ResolvedExperiment, String> {
    let scenario = parse_scenario(&file.scenario.clients)?;
    let seed = file.run.seed;

    let kind: AlgorithmKind = file
        .algorithm
        .kind
        .parse()
        .map_err(|e: fedhet::Error| e.to_string())?;
    let optimizer = match file.algorithm.optimizer.as_str() {
        "sgd" => OptimizerKind::Sgd,
        "adam" => OptimizerKind::Adam,
        other => return Err(format!("unknown optimizer {other:?} (expected sgd|adam)")),
    };
    let algorithm = AlgorithmConfig {
        kind,
        mu: if kind.proximal_solver() {
            file.algorithm.mu
        } else {
            0.0
        },
        local_epochs: file.algorithm.local_epochs,
        batch_size: file.algorithm.batch_size,
        lr: file.algorithm.lr,
        optimizer,
    };
    algorithm.validate_strict().map_err(|e| e.to_string())?;

    let model = match file.model.kind.as_str() {
        "mlp" => ModelSpec::mlp(file.model.hidden.clone()),
        "cnn" => ModelSpec::cnn(),
        other => return Err(format!("unknown model kind {other:?} (expected mlp|cnn)")),
    };

    let eval_mode = match file.run.eval.as_str() {
        "global" => EvalMode::Global,
        "local" => EvalMode::Local,
        other => return Err(format!("unknown eval mode {other:?} (expected global|local)")),
    };

    let mut shard_specs = Vec::new();
    for term in &scenario {
        for _ in 0..term.count {
            let client = shard_specs.len() as u64;
            let label_dist = if term.even {
                LabelDist::Even
            } else {
                LabelDist::Zipf {
                    a: file.run.zipf_a,
                    rank_perm: seeded_rank_perm(seed, client),
                }
            };
            shard_specs.push(ShardSpec {
                label_dist,
                size_class: if term.more {
                    SizeClass::More
                } else {
                    SizeClass::Less
                },
                seed: shard_seed(seed, client),
            });
        }
    }

    let source = match file.dataset.source.as_str() {
        "synth" => synth_dataset(
            file.dataset.labels,
            file.dataset.per_label,
            file.dataset.noise,
            file.dataset.seed.unwrap_or_else(|| synth_seed(seed)),
        )
        .map_err(|e| e.to_string())?,
        "idx" => {
            let images = file
                .dataset
                .images
                .as_ref()
                .ok_or("dataset.images is required for source = \"idx\"")?;
            let labels = file
                .dataset
                .labels_file
                .as_ref()
                .ok_or("dataset.labels_file is required for source = \"idx\"")?;
            load_idx(images, labels).map_err(|e| e.to_string())?
        }
        other => return Err(format!("unknown dataset source {other:?} (expected synth|idx)")),
    };

    let run = RunConfig {
        shard_specs,
        algorithm,
        model,
        max_rounds: file.run.rounds,
        target_accuracy: file.run.target_accuracy,
        experiment_seed: seed,
        scale: file.run.scale,
        eval_mode,
    };
    run.validate().map_err(|e| e.to_string())?;

    Ok(ResolvedExperiment {
        out: file.run.out.clone(),
        source,
        run,
        file,
    })
}
