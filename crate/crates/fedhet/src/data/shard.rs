use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::dataset::LabeledDataset;
use crate::data::zipf::{target_counts, zipf_probs};
use crate::error::{Error, Result};
use crate::NUM_CLASSES;

/// Standard / abnormal data amounts: (train, test) sample counts before
/// the global scale factor.
pub const SIZE_MORE: (usize, usize) = (6000, 1000);
pub const SIZE_LESS: (usize, usize) = (600, 100);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SizeClass {
    More,
    Less,
}

/// Label distribution a shard is sampled under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LabelDist {
    Even,
    /// Zipf over ranks: rank `k` (1-based) carries mass `k^(-a)` and is
    /// assigned to label `rank_perm[k-1]`.
    Zipf { a: f64, rank_perm: Vec<usize> },
}

/// A client's data recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShardSpec {
    pub label_dist: LabelDist,
    pub size_class: SizeClass,
    pub seed: u64,
}

/// One client's private train/test pair plus the recipe and the source
/// indices it was drawn from.
#[derive(Debug, Clone)]
pub struct ClientShard {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub spec: ShardSpec,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Reproducibility record for one shard.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShardManifest {
    pub spec: ShardSpec,
    pub scale: f64,
    pub train_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

impl ClientShard {
    pub fn manifest(&self, scale: f64) -> ShardManifest {
        ShardManifest {
            spec: self.spec.clone(),
            scale,
            train_indices: self.train_indices.clone(),
            test_indices: self.test_indices.clone(),
        }
    }
}

/// The size table entry for a class, scaled for desk runs. Scaled counts
/// round to nearest and never drop below one sample.
pub fn scaled_sizes(size_class: SizeClass, scale: f64) -> Result<(usize, usize)> {
    if !(scale > 0.0) {
        return Err(Error::InvalidParam(format!("scale {scale} must be > 0")));
    }
    let (train, test) = match size_class {
        SizeClass::More => SIZE_MORE,
        SizeClass::Less => SIZE_LESS,
    };
    let s = |n: usize| (((n as f64) * scale).round() as usize).max(1);
    Ok((s(train), s(test)))
}

fn validate_spec(spec: &ShardSpec) -> Result<Vec<f64>> {
    match &spec.label_dist {
        LabelDist::Even => Ok(vec![1.0 / NUM_CLASSES as f64; NUM_CLASSES]),
        LabelDist::Zipf { a, rank_perm } => {
            if rank_perm.len() != NUM_CLASSES {
                return Err(Error::InvalidParam(format!(
                    "rank_perm has {} entries, expected {NUM_CLASSES}",
                    rank_perm.len()
                )));
            }
            let mut seen = vec![false; NUM_CLASSES];
            for &l in rank_perm {
                if l >= NUM_CLASSES || seen[l] {
                    return Err(Error::InvalidParam(format!(
                        "rank_perm is not a permutation of 0..{NUM_CLASSES} (label {l})"
                    )));
                }
                seen[l] = true;
            }
            let ranked = zipf_probs(*a, NUM_CLASSES)?;
            let mut by_label = vec![0.0; NUM_CLASSES];
            for (rank, &label) in rank_perm.iter().enumerate() {
                by_label[label] = ranked[rank];
            }
            Ok(by_label)
        }
    }
}

/// Draw a client shard from the source pool.
///
/// Per-label counts are the deterministic largest-remainder targets for the
/// spec's distribution at the scaled sizes; indices are drawn without
/// replacement (train and test never share a source index within one
/// shard), seeded by `spec.seed`. Distinct shards may overlap.
pub fn sample_shard(
    source: &LabeledDataset,
    spec: &ShardSpec,
    scale: f64,
) -> Result<ClientShard> {
    let dist = validate_spec(spec)?;
    let (n_train, n_test) = scaled_sizes(spec.size_class, scale)?;
    let train_counts = target_counts(&dist, n_train)?;
    let test_counts = target_counts(&dist, n_test)?;

    let by_label = source.indices_by_label();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train_indices = Vec::with_capacity(n_train);
    let mut test_indices = Vec::with_capacity(n_test);
    for label in 0..NUM_CLASSES {
        let needed = train_counts[label] + test_counts[label];
        let pool = &by_label[label];
        if pool.len() < needed {
            return Err(Error::InsufficientSamples {
                label,
                needed,
                available: pool.len(),
            });
        }
        // Partial Fisher-Yates: the first `needed` entries are a uniform
        // without-replacement draw.
        let mut pool = pool.clone();
        for i in 0..needed {
            let j = rng.random_range(i..pool.len());
            pool.swap(i, j);
        }
        train_indices.extend_from_slice(&pool[..train_counts[label]]);
        test_indices.extend_from_slice(&pool[train_counts[label]..needed]);
    }

    Ok(ClientShard {
        train: source.subset(&train_indices)?,
        test: source.subset(&test_indices)?,
        spec: spec.clone(),
        train_indices,
        test_indices,
    })
}

/// Exact per-label counts of a shard's train and test sets.
pub fn shard_histogram(shard: &ClientShard) -> (Vec<usize>, Vec<usize>) {
    (shard.train.label_histogram(), shard.test.label_histogram())
}
