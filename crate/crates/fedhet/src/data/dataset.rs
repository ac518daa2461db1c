use crate::error::{Error, Result};
use crate::nn::{Scalar, Tensor};
use crate::{IMAGE_PIXELS, IMAGE_SIDE, NUM_CLASSES};

/// A set of 28x28x1 grayscale images with values in `[0,1]` and labels in
/// `[0, 61]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    images: Vec<f32>,
    labels: Vec<usize>,
}

impl LabeledDataset {
    pub fn new(images: Vec<f32>, labels: Vec<usize>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyDataset("dataset must hold at least one sample".into()));
        }
        if images.len() != labels.len() * IMAGE_PIXELS {
            return Err(Error::ShapeMismatch {
                context: "dataset images".into(),
                expected: vec![labels.len(), IMAGE_SIDE, IMAGE_SIDE, 1],
                found: vec![images.len()],
            });
        }
        for (index, &label) in labels.iter().enumerate() {
            if label >= NUM_CLASSES {
                return Err(Error::LabelOutOfRange {
                    index,
                    label,
                    num_classes: NUM_CLASSES,
                });
            }
        }
        Ok(Self { images, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Raw pixels of one sample.
    pub fn image(&self, index: usize) -> &[f32] {
        &self.images[index * IMAGE_PIXELS..(index + 1) * IMAGE_PIXELS]
    }

    /// Copy the given samples into a `[B, 28, 28, 1]` batch tensor.
    pub fn gather_batch<T: Scalar>(&self, indices: &[usize]) -> Tensor<T> {
        let mut data = Vec::with_capacity(indices.len() * IMAGE_PIXELS);
        for &i in indices {
            data.extend(self.image(i).iter().map(|&v| T::of_f64(v as f64)));
        }
        Tensor::new(vec![indices.len(), IMAGE_SIDE, IMAGE_SIDE, 1], data)
            .expect("batch sized to indices")
    }

    pub fn gather_labels(&self, indices: &[usize]) -> Vec<usize> {
        indices.iter().map(|&i| self.labels[i]).collect()
    }

    /// New dataset holding copies of the given samples, in order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let mut images = Vec::with_capacity(indices.len() * IMAGE_PIXELS);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            images.extend_from_slice(self.image(i));
            labels.push(self.labels[i]);
        }
        Self::new(images, labels)
    }

    /// Per-label sample counts over the full 62-label space.
    pub fn label_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0usize; NUM_CLASSES];
        for &l in &self.labels {
            hist[l] += 1;
        }
        hist
    }

    /// Source indices grouped by label, preserving source order.
    pub fn indices_by_label(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); NUM_CLASSES];
        for (i, &l) in self.labels.iter().enumerate() {
            groups[l].push(i);
        }
        groups
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_empty_and_mismatched() {
        assert!(LabeledDataset::new(vec![], vec![]).is_err());
        assert!(LabeledDataset::new(vec![0.0; IMAGE_PIXELS], vec![0, 1]).is_err());
        assert!(LabeledDataset::new(vec![0.0; IMAGE_PIXELS], vec![NUM_CLASSES]).is_err());
    }

    #[test]
    fn subset_keeps_order_and_values() {
        let mut images = vec![0.0; 3 * IMAGE_PIXELS];
        images[IMAGE_PIXELS] = 0.5;
        images[2 * IMAGE_PIXELS] = 1.0;
        let ds = LabeledDataset::new(images, vec![3, 4, 5]).unwrap();
        let sub = ds.subset(&[2, 0]).unwrap();
        assert_eq!(sub.labels(), &[5, 3]);
        assert_eq!(sub.image(0)[0], 1.0);
        assert_eq!(sub.image(1)[0], 0.0);
    }
}
