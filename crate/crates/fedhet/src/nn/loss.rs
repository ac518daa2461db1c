use crate::error::{Error, Result};
use crate::nn::tensor::{Scalar, Tensor};

/// Mean cross-entropy over a batch of logits, plus the gradient with
/// respect to the logits.
///
/// `logits` is `[B, C]`; each gradient row is `(softmax - onehot) / B`,
/// so rows sum to zero.
pub fn cross_entropy<T: Scalar>(logits: &Tensor<T>, labels: &[usize]) -> Result<(T, Tensor<T>)> {
    let shape = logits.shape();
    if shape.len() != 2 {
        return Err(Error::ShapeMismatch {
            context: "cross_entropy logits".into(),
            expected: vec![labels.len(), 0],
            found: shape.to_vec(),
        });
    }
    let (batch, classes) = (shape[0], shape[1]);
    if batch == 0 || batch != labels.len() {
        return Err(Error::ShapeMismatch {
            context: "cross_entropy labels".into(),
            expected: vec![batch],
            found: vec![labels.len()],
        });
    }
    for (i, &label) in labels.iter().enumerate() {
        if label >= classes {
            return Err(Error::LabelOutOfRange {
                index: i,
                label,
                num_classes: classes,
            });
        }
    }

    let inv_b = T::of_f64(1.0 / batch as f64);
    let mut grad = vec![T::zero(); batch * classes];
    let mut loss_sum = T::zero();
    for (i, &label) in labels.iter().enumerate() {
        let row = &logits.data()[i * classes..(i + 1) * classes];
        let max = row.iter().cloned().fold(T::neg_infinity(), T::max);
        let mut denom = T::zero();
        for &v in row {
            denom = denom + (v - max).exp();
        }
        let lse = max + denom.ln();
        loss_sum = loss_sum + (lse - row[label]);
        let grow = &mut grad[i * classes..(i + 1) * classes];
        for (j, &v) in row.iter().enumerate() {
            grow[j] = (v - lse).exp() * inv_b;
        }
        grow[label] = grow[label] - inv_b;
    }
    let loss = loss_sum * inv_b;
    let grad = Tensor::new(vec![batch, classes], grad)?;
    Ok((loss, grad))
}
