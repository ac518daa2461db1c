//! The algorithm matrix: a client-side local solver (plain or proximal)
//! composed with a server-side aggregator (sample-weighted or
//! step-normalized).
//!
//! | kind    | solver   | aggregator |
//! |---------|----------|------------|
//! | fedavg  | plain    | weighted   |
//! | fedprox | proximal | weighted   |
//! | fednova | plain    | normalized |
//! | fedmix  | proximal | normalized |

mod aggregate;
mod client;
mod config;
mod round;

pub use aggregate::{aggregate_normalized, aggregate_weighted};
pub use client::{client_local_update, local_steps, local_train, ClientUpdate, LocalTrainOutcome};
pub use config::{AlgorithmConfig, AlgorithmKind};
pub use round::{run_algorithm_round, GlobalModel};
