use crate::error::{Error, Result};

/// Zipf pmf over ranks `1..=num_labels`: `p_k = k^(-a) / sum_j j^(-a)`.
pub fn zipf_probs(a: f64, num_labels: usize) -> Result<Vec<f64>> {
    if num_labels == 0 {
        return Err(Error::InvalidParam("zipf_probs needs at least one label".into()));
    }
    if !(a >= 0.0) {
        return Err(Error::InvalidParam(format!("zipf exponent {a} must be >= 0")));
    }
    let weights: Vec<f64> = (1..=num_labels).map(|k| (k as f64).powf(-a)).collect();
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Apportion `total` into integer counts proportional to `probs` using the
/// largest-remainder method. Ties in the remainder break toward the lower
/// index, so the result is deterministic.
pub fn target_counts(probs: &[f64], total: usize) -> Result<Vec<usize>> {
    let sum: f64 = probs.iter().sum();
    if probs.is_empty() || (sum - 1.0).abs() > 1e-9 || probs.iter().any(|&p| p < 0.0) {
        return Err(Error::InvalidParam(format!(
            "target_counts needs a probability vector (sum = {sum})"
        )));
    }
    let mut counts: Vec<usize> = Vec::with_capacity(probs.len());
    let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(probs.len());
    let mut assigned = 0usize;
    for (i, &p) in probs.iter().enumerate() {
        let ideal = p * total as f64;
        let floor = ideal.floor() as usize;
        counts.push(floor);
        assigned += floor;
        remainders.push((i, ideal - floor as f64));
    }
    remainders.sort_by(|(ia, ra), (ib, rb)| {
        rb.partial_cmp(ra).expect("finite remainders").then(ia.cmp(ib))
    });
    for (i, _) in remainders.into_iter().take(total - assigned) {
        counts[i] += 1;
    }
    Ok(counts)
}
