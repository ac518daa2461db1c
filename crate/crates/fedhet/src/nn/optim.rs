use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::params::ParamSet;
use crate::nn::tensor::Scalar;

pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OptimizerKind::Sgd => write!(f, "sgd"),
            OptimizerKind::Adam => write!(f, "adam"),
        }
    }
}

/// Optimizer state. SGD is stateless; Adam carries first/second moments and
/// the step counter, which advances by exactly one per `adam_step`.
#[derive(Debug, Clone, PartialEq)]
pub enum OptimizerState<T: Scalar = f32> {
    Sgd,
    Adam {
        m: ParamSet<T>,
        v: ParamSet<T>,
        t: u64,
    },
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(kind: OptimizerKind, params: &ParamSet<T>) -> Self {
        match kind {
            OptimizerKind::Sgd => OptimizerState::Sgd,
            OptimizerKind::Adam => OptimizerState::Adam {
                m: params.zeros_like(),
                v: params.zeros_like(),
                t: 0,
            },
        }
    }

    pub fn step_count(&self) -> u64 {
        match self {
            OptimizerState::Sgd => 0,
            OptimizerState::Adam { t, .. } => *t,
        }
    }
}

/// Proximal pull toward an anchor parameter set.
#[derive(Clone, Copy)]
pub struct Prox<'a, T: Scalar = f32> {
    pub mu: T,
    pub anchor: &'a ParamSet<T>,
}

/// `w <- w - lr * (g + mu * (w - anchor))`; plain SGD when `prox` is absent
/// or `mu == 0`.
pub fn sgd_step<T: Scalar>(
    params: &ParamSet<T>,
    grads: &ParamSet<T>,
    lr: T,
    prox: Option<Prox<'_, T>>,
) -> Result<ParamSet<T>> {
    if lr <= T::zero() {
        return Err(Error::InvalidParam(format!("learning rate {lr} must be > 0")));
    }
    if let Some(p) = &prox {
        if p.mu < T::zero() {
            return Err(Error::InvalidParam(format!("mu {} must be >= 0", p.mu)));
        }
        params.compatible(p.anchor, "sgd_step anchor")?;
    }
    match prox {
        None => params.zip_map(grads, "sgd_step", |w, g| w - lr * g),
        Some(p) => {
            let pulled = params.zip_map(p.anchor, "sgd_step prox", |w, a| p.mu * (w - a))?;
            let effective = grads.zip_map(&pulled, "sgd_step prox", |g, t| g + t)?;
            params.zip_map(&effective, "sgd_step", |w, g| w - lr * g)
        }
    }
}

/// Bias-corrected Adam update; increments the step counter.
pub fn adam_step<T: Scalar>(
    params: &ParamSet<T>,
    grads: &ParamSet<T>,
    state: &mut OptimizerState<T>,
    lr: T,
    beta1: T,
    beta2: T,
    eps: T,
) -> Result<ParamSet<T>> {
    if lr <= T::zero() || beta1 <= T::zero() || beta2 <= T::zero() || eps <= T::zero() {
        return Err(Error::InvalidParam(
            "adam hyperparameters must be positive".into(),
        ));
    }
    let (m, v, t) = match state {
        OptimizerState::Adam { m, v, t } => (m, v, t),
        OptimizerState::Sgd => {
            return Err(Error::InvalidParam(
                "adam_step requires adam optimizer state".into(),
            ))
        }
    };
    params.compatible(grads, "adam_step grads")?;
    params.compatible(m, "adam_step moments")?;

    *t += 1;
    let one = T::one();
    *m = m.zip_map(grads, "adam m", |mv, g| beta1 * mv + (one - beta1) * g)?;
    *v = v.zip_map(grads, "adam v", |vv, g| beta2 * vv + (one - beta2) * g * g)?;
    let bc1 = one - beta1.powi(*t as i32);
    let bc2 = one - beta2.powi(*t as i32);
    let step = m.zip_map(v, "adam step", |mv, vv| {
        let m_hat = mv / bc1;
        let v_hat = vv / bc2;
        lr * m_hat / (v_hat.sqrt() + eps)
    })?;
    params.zip_map(&step, "adam apply", |w, s| w - s)
}
