use crate::error::{Error, Result};
use crate::nn::tensor::{Scalar, Tensor};

/// Ordered, named collection of parameter tensors. The unit of broadcast
/// and aggregation; two sets built from the same `ModelSpec` are
/// shape-compatible entrywise.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet<T = f32> {
    entries: Vec<(String, Tensor<T>)>,
}

impl<T: Scalar> ParamSet<T> {
    pub fn new(entries: Vec<(String, Tensor<T>)>) -> Result<Self> {
        for (i, (name, _)) in entries.iter().enumerate() {
            if entries[..i].iter().any(|(n, _)| n == name) {
                return Err(Error::InvalidParam(format!(
                    "duplicate parameter name {name:?}"
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[(String, Tensor<T>)] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.entries
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t)
    }

    pub fn tensors(&self) -> impl Iterator<Item = &Tensor<T>> {
        self.entries.iter().map(|(_, t)| t)
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Tensor<T>> {
        self.entries.iter_mut().map(|(_, t)| t)
    }

    /// Total scalar count across all entries.
    pub fn param_count(&self) -> usize {
        self.entries.iter().map(|(_, t)| t.len()).sum()
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|(n, t)| (n.clone(), Tensor::zeros(t.shape().to_vec())))
                .collect(),
        }
    }

    pub fn all_finite(&self) -> bool {
        self.tensors().all(Tensor::all_finite)
    }

    /// Check entrywise name/shape compatibility with `other`.
    pub fn compatible(&self, other: &Self, context: &str) -> Result<()> {
        if self.entries.len() != other.entries.len() {
            return Err(Error::ShapeMismatch {
                context: format!("{context}: entry count"),
                expected: vec![self.entries.len()],
                found: vec![other.entries.len()],
            });
        }
        for ((na, ta), (nb, tb)) in self.entries.iter().zip(&other.entries) {
            if na != nb || ta.shape() != tb.shape() {
                return Err(Error::ShapeMismatch {
                    context: format!("{context}: entry {na:?} vs {nb:?}"),
                    expected: ta.shape().to_vec(),
                    found: tb.shape().to_vec(),
                });
            }
        }
        Ok(())
    }

    /// Entrywise binary map over two compatible sets.
    pub fn zip_map(&self, other: &Self, context: &str, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.compatible(other, context)?;
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|((n, a), (_, b))| {
                let data = a
                    .data()
                    .iter()
                    .zip(b.data())
                    .map(|(&x, &y)| f(x, y))
                    .collect();
                (
                    n.clone(),
                    Tensor::new(a.shape().to_vec(), data).expect("shape preserved"),
                )
            })
            .collect();
        Ok(Self { entries })
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            entries: self
                .entries
                .iter()
                .map(|(n, t)| {
                    let data = t.data().iter().map(|&x| f(x)).collect();
                    (
                        n.clone(),
                        Tensor::new(t.shape().to_vec(), data).expect("shape preserved"),
                    )
                })
                .collect(),
        }
    }

    /// Flatten all entries into one vector in entry order.
    pub fn flatten(&self) -> Vec<T> {
        let mut out = Vec::with_capacity(self.param_count());
        for (_, t) in &self.entries {
            out.extend_from_slice(t.data());
        }
        out
    }

    pub fn cast<U: Scalar>(&self) -> ParamSet<U> {
        ParamSet {
            entries: self
                .entries
                .iter()
                .map(|(n, t)| (n.clone(), t.cast()))
                .collect(),
        }
    }
}

impl ParamSet<f32> {
    /// FNV-1a over the little-endian bytes of all values in entry order.
    /// Used for per-round reproducibility hashes.
    pub fn content_hash(&self) -> u64 {
        let mut h = fnv1a_init();
        for (_, t) in &self.entries {
            for v in t.data() {
                h = fnv1a_bytes(h, &v.to_le_bytes());
            }
        }
        h
    }
}

pub(crate) fn fnv1a_init() -> u64 {
    0xcbf29ce484222325
}

pub(crate) fn fnv1a_bytes(mut h: u64, bytes: &[u8]) -> u64 {
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Entrywise `a*x + y`.
pub fn param_axpy<T: Scalar>(a: T, x: &ParamSet<T>, y: &ParamSet<T>) -> Result<ParamSet<T>> {
    x.zip_map(y, "param_axpy", |xv, yv| a * xv + yv)
}

/// Entrywise `x - y`.
pub fn param_sub<T: Scalar>(x: &ParamSet<T>, y: &ParamSet<T>) -> Result<ParamSet<T>> {
    x.zip_map(y, "param_sub", |xv, yv| xv - yv)
}

/// Entrywise `a*x`.
pub fn param_scale<T: Scalar>(a: T, x: &ParamSet<T>) -> ParamSet<T> {
    x.map(|v| a * v)
}

/// Euclidean distance between two compatible sets, accumulated in f64.
pub fn param_l2_distance<T: Scalar>(x: &ParamSet<T>, y: &ParamSet<T>) -> Result<f64> {
    x.compatible(y, "param_l2_distance")?;
    let mut acc = 0f64;
    for ((_, a), (_, b)) in x.entries().iter().zip(y.entries()) {
        for (&xv, &yv) in a.data().iter().zip(b.data()) {
            let d = xv.as_f64() - yv.as_f64();
            acc += d * d;
        }
    }
    Ok(acc.sqrt())
}
