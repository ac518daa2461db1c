use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::data::{ClientShard, LabeledDataset};
use crate::error::{Error, Result};
use crate::fed::config::AlgorithmConfig;
use crate::nn::{
    adam_step, loss_and_grad, param_axpy, param_sub, sgd_step, ModelSpec, OptimizerKind,
    OptimizerState, ParamSet, Prox, ADAM_BETA1, ADAM_BETA2, ADAM_EPS,
};

/// One client's round result: the parameter movement, how many optimizer
/// steps produced it, and how many training samples backed it.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientUpdate {
    pub client_id: usize,
    pub delta: ParamSet<f32>,
    pub tau: usize,
    pub n: usize,
}

/// Optimizer steps one local pass schedule takes:
/// `local_epochs * ceil(n / batch_size)`.
pub fn local_steps(n: usize, batch_size: usize, local_epochs: usize) -> usize {
    local_epochs * n.div_ceil(batch_size)
}

#[derive(Debug, Clone)]
pub struct LocalTrainOutcome {
    pub params: ParamSet<f32>,
    pub tau: usize,
}

/// Run the local mini-batch schedule from `start`, anchored at `anchor`.
///
/// The proximal pull (when the algorithm's solver is proximal) always
/// targets `anchor` — the round's broadcast global — never a refreshed
/// model. Each epoch reshuffles the sample order from `rng`.
pub fn local_train(
    start: ParamSet<f32>,
    anchor: &ParamSet<f32>,
    model: &ModelSpec,
    train: &LabeledDataset,
    cfg: &AlgorithmConfig,
    rng: &mut ChaCha8Rng,
) -> Result<LocalTrainOutcome> {
    if train.is_empty() {
        return Err(Error::EmptyDataset("client training shard".into()));
    }
    cfg.validate()?;

    let proximal = cfg.kind.proximal_solver();
    let mut params = start;
    let mut opt = OptimizerState::new(cfg.optimizer, &params);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut tau = 0usize;
    for _ in 0..cfg.local_epochs {
        order.shuffle(rng);
        for chunk in order.chunks(cfg.batch_size) {
            let batch = train.gather_batch::<f32>(chunk);
            let labels = train.gather_labels(chunk);
            let (loss, grads) = loss_and_grad(model, &params, &batch, &labels)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    step: tau + 1,
                    loss: loss as f64,
                });
            }
            params = match cfg.optimizer {
                OptimizerKind::Sgd => {
                    let prox = proximal.then_some(Prox {
                        mu: cfg.mu,
                        anchor,
                    });
                    sgd_step(&params, &grads, cfg.lr, prox)?
                }
                OptimizerKind::Adam => {
                    let grads = if proximal {
                        // g + mu * (w - anchor), fed to Adam unchanged.
                        let pull = param_sub(&params, anchor)?;
                        param_axpy(cfg.mu, &pull, &grads)?
                    } else {
                        grads
                    };
                    adam_step(
                        &params,
                        &grads,
                        &mut opt,
                        cfg.lr,
                        ADAM_BETA1 as f32,
                        ADAM_BETA2 as f32,
                        ADAM_EPS as f32,
                    )?
                }
            };
            tau += 1;
        }
    }
    debug_assert_eq!(tau, local_steps(train.len(), cfg.batch_size, cfg.local_epochs));
    Ok(LocalTrainOutcome { params, tau })
}

/// The broadcast-train step of one client in one round.
pub fn client_local_update(
    client_id: usize,
    global: &ParamSet<f32>,
    shard: &ClientShard,
    model: &ModelSpec,
    cfg: &AlgorithmConfig,
    rng: &mut ChaCha8Rng,
) -> Result<ClientUpdate> {
    let outcome = local_train(global.clone(), global, model, &shard.train, cfg, rng)?;
    Ok(ClientUpdate {
        client_id,
        delta: param_sub(&outcome.params, global)?,
        tau: outcome.tau,
        n: shard.train.len(),
    })
}
