//! The broadcasting-training-averaging loop: round scheduling, per-client
//! evaluation, stopping rules, and metrics capture.

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{sample_shard, ClientShard, LabeledDataset, ShardSpec};
use crate::error::{Error, Result};
use crate::fed::{AlgorithmConfig, ClientUpdate, GlobalModel};
use crate::nn::{evaluate_accuracy, mean_loss, param_axpy, ModelSpec, ParamSet};
use crate::nn::{fnv1a_bytes, fnv1a_init};
use crate::rng::init_stream;

/// Which model per-client test accuracy is measured with.
///
/// `Global` evaluates the post-aggregation global model on each client's
/// test shard (the default). `Local` evaluates each client's own
/// end-of-round local model instead, which is what makes per-client curves
/// diverge on identically distributed test sets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvalMode {
    #[default]
    Global,
    Local,
}

/// Everything a run needs besides the source data pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// One spec per client; client ids follow this order.
    pub shard_specs: Vec<ShardSpec>,
    pub algorithm: AlgorithmConfig,
    pub model: ModelSpec,
    pub max_rounds: usize,
    pub target_accuracy: Option<f64>,
    pub experiment_seed: u64,
    /// Global size-table scale factor for desk runs.
    pub scale: f64,
    #[serde(default)]
    pub eval_mode: EvalMode,
}

impl RunConfig {
    pub fn num_clients(&self) -> usize {
        self.shard_specs.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.shard_specs.is_empty() {
            return Err(Error::InvalidParam("at least one client is required".into()));
        }
        if self.max_rounds == 0 {
            return Err(Error::InvalidParam("max_rounds must be >= 1".into()));
        }
        if let Some(t) = self.target_accuracy {
            if !(t > 0.0 && t <= 1.0) {
                return Err(Error::InvalidParam(format!(
                    "target_accuracy {t} must lie in (0, 1]"
                )));
            }
        }
        if !(self.scale > 0.0) {
            return Err(Error::InvalidParam(format!(
                "scale {} must be > 0",
                self.scale
            )));
        }
        self.algorithm.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    TargetMet,
    RoundLimit,
}

impl std::fmt::Display for StopReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            StopReason::TargetMet => write!(f, "target_met"),
            StopReason::RoundLimit => write!(f, "round_limit"),
        }
    }
}

/// Per-round metrics. Accuracy is per client on its own test shard; train
/// loss is the aggregated global model's mean cross-entropy on each
/// client's train shard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: usize,
    pub client_accuracy: Vec<f64>,
    pub client_train_loss: Vec<f64>,
    pub param_hash: u64,
    pub duration: Duration,
    pub stop: Option<StopReason>,
}

impl RoundRecord {
    /// Hash of every deterministic field (wall-clock duration excluded).
    /// Two runs of the same config must produce identical digest sequences.
    pub fn digest(&self) -> u64 {
        let mut h = fnv1a_init();
        h = fnv1a_bytes(h, &(self.round as u64).to_le_bytes());
        for v in &self.client_accuracy {
            h = fnv1a_bytes(h, &v.to_bits().to_le_bytes());
        }
        for v in &self.client_train_loss {
            h = fnv1a_bytes(h, &v.to_bits().to_le_bytes());
        }
        h = fnv1a_bytes(h, &self.param_hash.to_le_bytes());
        let stop_tag: u8 = match self.stop {
            None => 0,
            Some(StopReason::TargetMet) => 1,
            Some(StopReason::RoundLimit) => 2,
        };
        fnv1a_bytes(h, &[stop_tag])
    }

    pub fn mean_accuracy(&self) -> f64 {
        self.client_accuracy.iter().sum::<f64>() / self.client_accuracy.len() as f64
    }

    pub fn min_accuracy(&self) -> f64 {
        self.client_accuracy.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_accuracy(&self) -> f64 {
        self.client_accuracy.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Continue,
    Stop(StopReason),
}

/// Stopping rule: the target is met once every client's accuracy reaches
/// it; otherwise the round threshold ends the run.
pub fn check_stop(records: &[RoundRecord], cfg: &RunConfig) -> StopDecision {
    let last = match records.last() {
        Some(r) => r,
        None => return StopDecision::Continue,
    };
    if let Some(target) = cfg.target_accuracy {
        if last.min_accuracy() >= target {
            return StopDecision::Stop(StopReason::TargetMet);
        }
    }
    if last.round >= cfg.max_rounds {
        return StopDecision::Stop(StopReason::RoundLimit);
    }
    StopDecision::Continue
}

/// The initial global model shared verbatim with all clients.
pub fn init_global(cfg: &RunConfig) -> GlobalModel {
    GlobalModel::new(cfg.model.init_params(&mut init_stream(cfg.experiment_seed)))
}

/// Materialize every client's shard from the source pool.
pub fn build_shards(source: &LabeledDataset, cfg: &RunConfig) -> Result<Vec<ClientShard>> {
    cfg.shard_specs
        .par_iter()
        .map(|spec| sample_shard(source, spec, cfg.scale))
        .collect()
}

/// Where a round's client updates come from: in-process training or remote
/// client processes. Both must return one update per client.
pub(crate) trait ClientPool {
    fn round_updates(&mut self, round: usize, global: &GlobalModel) -> Result<Vec<ClientUpdate>>;
}

pub(crate) struct LocalClients<'a> {
    pub model: &'a ModelSpec,
    pub shards: &'a [ClientShard],
    pub cfg: &'a AlgorithmConfig,
    pub experiment_seed: u64,
}

impl ClientPool for LocalClients<'_> {
    fn round_updates(&mut self, round: usize, global: &GlobalModel) -> Result<Vec<ClientUpdate>> {
        use crate::fed::client_local_update;
        use crate::rng::client_stream;
        debug_assert_eq!(round, global.round + 1);
        self.shards
            .par_iter()
            .enumerate()
            .map(|(client_id, shard)| {
                let mut rng = client_stream(self.experiment_seed, round as u64, client_id as u64);
                client_local_update(client_id, &global.params, shard, self.model, self.cfg, &mut rng)
            })
            .collect()
    }
}

/// Run the full experiment in-process.
pub fn run_experiment(source: &LabeledDataset, cfg: &RunConfig) -> Result<Vec<RoundRecord>> {
    cfg.validate()?;
    let shards = build_shards(source, cfg)?;
    let mut pool = LocalClients {
        model: &cfg.model,
        shards: &shards,
        cfg: &cfg.algorithm,
        experiment_seed: cfg.experiment_seed,
    };
    run_loop(cfg, &shards, &mut pool)
}

/// The shared round loop: broadcast, collect updates, aggregate, evaluate,
/// record, stop-check. Used by both in-process and wire modes.
pub(crate) fn run_loop(
    cfg: &RunConfig,
    shards: &[ClientShard],
    pool: &mut dyn ClientPool,
) -> Result<Vec<RoundRecord>> {
    use crate::fed::{aggregate_normalized, aggregate_weighted};

    let mut global = init_global(cfg);
    let mut records: Vec<RoundRecord> = Vec::new();
    for round in 1..=cfg.max_rounds {
        let started = Instant::now();
        let broadcast = global.params.clone();
        let updates = pool
            .round_updates(round, &global)
            .map_err(|e| at_round(round, e))?;
        if updates.len() != shards.len() {
            return Err(at_round(
                round,
                Error::InvalidParam(format!(
                    "expected {} client updates, got {}",
                    shards.len(),
                    updates.len()
                )),
            ));
        }
        let params = if cfg.algorithm.kind.normalized_aggregation() {
            aggregate_normalized(&global.params, &updates)
        } else {
            aggregate_weighted(&global.params, &updates)
        }
        .map_err(|e| at_round(round, e))?;
        global = GlobalModel { params, round };

        let record = evaluate_round(cfg, shards, &global, &broadcast, &updates, round)
            .map_err(|e| at_round(round, e))?;
        let mut record = record;
        record.duration = started.elapsed();
        records.push(record);

        if let StopDecision::Stop(reason) = check_stop(&records, cfg) {
            records.last_mut().expect("just pushed").stop = Some(reason);
            break;
        }
    }
    Ok(records)
}

fn at_round(round: usize, e: Error) -> Error {
    Error::AtRound {
        round,
        source: Box::new(e),
    }
}

fn evaluate_round(
    cfg: &RunConfig,
    shards: &[ClientShard],
    global: &GlobalModel,
    broadcast: &ParamSet<f32>,
    updates: &[ClientUpdate],
    round: usize,
) -> Result<RoundRecord> {
    let mut by_id: Vec<&ClientUpdate> = updates.iter().collect();
    by_id.sort_by_key(|u| u.client_id);

    let client_accuracy: Vec<f64> = shards
        .par_iter()
        .zip(&by_id)
        .map(|(shard, update)| match cfg.eval_mode {
            EvalMode::Global => evaluate_accuracy(&cfg.model, &global.params, &shard.test),
            EvalMode::Local => {
                let local = param_axpy(1.0, &update.delta, broadcast)?;
                evaluate_accuracy(&cfg.model, &local, &shard.test)
            }
        })
        .collect::<Result<_>>()?;

    let client_train_loss: Vec<f64> = shards
        .par_iter()
        .map(|shard| mean_loss(&cfg.model, &global.params, &shard.train))
        .collect::<Result<_>>()?;

    Ok(RoundRecord {
        round,
        client_accuracy,
        client_train_loss,
        param_hash: global.params.content_hash(),
        duration: Duration::ZERO,
        stop: None,
    })
}
