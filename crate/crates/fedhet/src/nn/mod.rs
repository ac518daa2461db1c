//! Minimal deterministic neural-network kernel.
//!
//! Fixed-architecture MLP/CNN forward and backward passes, cross-entropy,
//! SGD with an optional proximal term, and Adam. Generic over the scalar
//! type: experiments run in `f32`, gradient checks instantiate `f64`.

mod loss;
mod model;
mod optim;
mod params;
mod tensor;

pub use loss::cross_entropy;
pub use model::{backward, evaluate_accuracy, forward, loss_and_grad, mean_loss, ModelSpec};
pub use optim::{adam_step, sgd_step, OptimizerKind, OptimizerState, Prox, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use params::{param_axpy, param_l2_distance, param_scale, param_sub, ParamSet};
pub(crate) use params::{fnv1a_bytes, fnv1a_init};
pub use tensor::{Scalar, Tensor};
