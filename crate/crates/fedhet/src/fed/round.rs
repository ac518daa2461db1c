use rayon::prelude::*;

use crate::data::ClientShard;
use crate::error::Result;
use crate::fed::aggregate::{aggregate_normalized, aggregate_weighted};
use crate::fed::client::{client_local_update, ClientUpdate};
use crate::fed::config::AlgorithmConfig;
use crate::nn::{ModelSpec, ParamSet};
use crate::rng::client_stream;

/// The shared model and its round counter.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalModel {
    pub params: ParamSet<f32>,
    pub round: usize,
}

impl GlobalModel {
    pub fn new(params: ParamSet<f32>) -> Self {
        GlobalModel { params, round: 0 }
    }
}

/// One full broadcast-train-aggregate round.
///
/// Clients train concurrently, each on its own RNG stream derived from
/// `(experiment_seed, round, client_id)`; aggregation then consumes the
/// updates in client-id order, so the result is schedule-independent.
pub fn run_algorithm_round(
    model: &ModelSpec,
    global: &GlobalModel,
    shards: &[ClientShard],
    cfg: &AlgorithmConfig,
    experiment_seed: u64,
) -> Result<(GlobalModel, Vec<ClientUpdate>)> {
    cfg.validate()?;
    if shards.is_empty() {
        return Err(crate::error::Error::InvalidParam(
            "at least one client shard is required".into(),
        ));
    }
    let round = global.round + 1;
    let updates: Vec<ClientUpdate> = shards
        .par_iter()
        .enumerate()
        .map(|(client_id, shard)| {
            let mut rng = client_stream(experiment_seed, round as u64, client_id as u64);
            client_local_update(client_id, &global.params, shard, model, cfg, &mut rng)
        })
        .collect::<Result<_>>()?;

    let params = if cfg.kind.normalized_aggregation() {
        aggregate_normalized(&global.params, &updates)?
    } else {
        aggregate_weighted(&global.params, &updates)?
    };
    Ok((GlobalModel { params, round }, updates))
}
