//! Dataset ingestion, synthetic data, and heterogeneous shard construction.

mod dataset;
mod idx;
mod shard;
mod synth;
mod zipf;

pub use dataset::LabeledDataset;
pub use idx::{load_idx, write_idx};
pub use shard::{
    sample_shard, scaled_sizes, shard_histogram, ClientShard, LabelDist, ShardManifest, ShardSpec,
    SizeClass,
};
pub use synth::synth_dataset;
pub use zipf::{target_counts, zipf_probs};
