//! Deterministic federated-learning experiment engine.
//!
//! The crate simulates the round-based broadcast/train/aggregate loop of
//! federated learning over heterogeneous client data shards. It provides:
//!
//! - [`nn`]: a small deterministic neural-network kernel (MLP and a
//!   two-conv-layer CNN, cross-entropy, SGD with an optional proximal term,
//!   Adam),
//! - [`data`]: IDX (EMNIST-compatible) ingestion, a synthetic 28x28 dataset
//!   generator, and heterogeneous shard construction (even/Zipf label
//!   distributions crossed with more/less quantity classes),
//! - [`fed`]: the client solver / server aggregator matrix behind FedAvg,
//!   FedProx, FedNova and FedMix,
//! - [`experiment`]: the round loop with stopping rules and per-round metrics,
//! - [`wire`]: an optional multi-process mode whose results are bit-identical
//!   to the in-process simulation.
//!
//! Every run is a pure function of its configuration: client RNG streams are
//! derived from `(experiment_seed, round, client_id)`, aggregation accumulates
//! in `f64` in client-id order, and all sampling is seeded.

pub mod data;
pub mod error;
pub mod experiment;
pub mod fed;
pub mod nn;
pub mod rng;
pub mod wire;

pub use error::{Error, Result};

/// Number of classes in the label space (EMNIST: 0-9, A-Z, a-z).
pub const NUM_CLASSES: usize = 62;
/// Input images are square grayscale of this side length.
pub const IMAGE_SIDE: usize = 28;
/// Pixels per image.
pub const IMAGE_PIXELS: usize = IMAGE_SIDE * IMAGE_SIDE;
