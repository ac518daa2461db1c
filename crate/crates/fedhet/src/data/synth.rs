use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::data::dataset::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::{IMAGE_PIXELS, NUM_CLASSES};

const TEMPLATE_DOMAIN: u64 = u64::MAX - 16;

/// The fixed 28x28 prototype image for a label. Depends only on the label,
/// never on the dataset seed.
fn label_template(label: usize) -> Vec<f32> {
    let mut rng = stream(0, TEMPLATE_DOMAIN, label as u64);
    (0..IMAGE_PIXELS)
        .map(|_| (0.2 + 0.6 * rng.random::<f64>()) as f32)
        .collect()
}

/// Deterministic synthetic classification set: `per_label` samples for each
/// of `num_labels` labels, each the label's template plus seeded Gaussian
/// noise of the given standard deviation, clamped to `[0,1]`.
///
/// Samples are laid out label-major: all of label 0, then label 1, ...
pub fn synth_dataset(
    num_labels: usize,
    per_label: usize,
    noise_level: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if !(2..=NUM_CLASSES).contains(&num_labels) {
        return Err(Error::InvalidParam(format!(
            "num_labels {num_labels} must be in [2, {NUM_CLASSES}]"
        )));
    }
    if per_label == 0 {
        return Err(Error::InvalidParam("per_label must be >= 1".into()));
    }
    if !(noise_level >= 0.0) {
        return Err(Error::InvalidParam(format!(
            "noise_level {noise_level} must be >= 0"
        )));
    }

    let mut rng = stream(seed, TEMPLATE_DOMAIN - 1, 0);
    let noise = if noise_level > 0.0 {
        Some(Normal::new(0.0, noise_level).expect("positive std dev"))
    } else {
        None
    };
    let mut images = Vec::with_capacity(num_labels * per_label * IMAGE_PIXELS);
    let mut labels = Vec::with_capacity(num_labels * per_label);
    for label in 0..num_labels {
        let template = label_template(label);
        for _ in 0..per_label {
            match &noise {
                None => images.extend_from_slice(&template),
                Some(n) => images.extend(
                    template
                        .iter()
                        .map(|&t| (t as f64 + n.sample(&mut rng)).clamp(0.0, 1.0) as f32),
                ),
            }
            labels.push(label);
        }
    }
    LabeledDataset::new(images, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_repeats_the_template() {
        let ds = synth_dataset(3, 2, 0.0, 99).unwrap();
        assert_eq!(ds.image(0), ds.image(1));
        assert_ne!(ds.image(0), ds.image(2));
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let a = synth_dataset(5, 4, 0.3, 123).unwrap();
        let b = synth_dataset(5, 4, 0.3, 123).unwrap();
        assert_eq!(a, b);
        let c = synth_dataset(5, 4, 0.3, 124).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn values_stay_in_unit_range() {
        let ds = synth_dataset(4, 8, 2.5, 7).unwrap();
        for i in 0..ds.len() {
            assert!(ds.image(i).iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn bounds_are_enforced() {
        assert!(synth_dataset(1, 5, 0.1, 0).is_err());
        assert!(synth_dataset(63, 5, 0.1, 0).is_err());
        assert!(synth_dataset(5, 0, 0.1, 0).is_err());
        assert!(synth_dataset(5, 5, -0.1, 0).is_err());
    }
}
