use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::nn::loss::cross_entropy;
use crate::nn::params::ParamSet;
use crate::nn::tensor::{Scalar, Tensor};
use crate::{IMAGE_PIXELS, IMAGE_SIDE, NUM_CLASSES};

const CONV1_CHANNELS: usize = 16;
const CONV2_CHANNELS: usize = 32;
const KERNEL: usize = 5;
const PAD: usize = KERNEL / 2;
// 28 -> pool -> 14 -> pool -> 7
const CNN_FC_IN: usize = CONV2_CHANNELS * (IMAGE_SIDE / 4) * (IMAGE_SIDE / 4);

/// One of the two fixed architectures over 28x28x1 inputs and 62 classes.
///
/// The CNN is two 5x5 same-padded convolutions (1->16, 16->32), each
/// followed by ReLU and 2x2 max-pooling, then one fully connected layer.
/// The MLP flattens the image through ReLU hidden layers of the given
/// sizes (possibly none, which yields a linear softmax classifier).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    Mlp { hidden: Vec<usize> },
    Cnn,
}

impl ModelSpec {
    pub fn mlp(hidden: Vec<usize>) -> Self {
        ModelSpec::Mlp { hidden }
    }

    pub fn cnn() -> Self {
        ModelSpec::Cnn
    }

    /// Parameter names and shapes in their fixed order.
    pub fn param_shapes(&self) -> Vec<(String, Vec<usize>)> {
        match self {
            ModelSpec::Mlp { hidden } => {
                let mut dims = vec![IMAGE_PIXELS];
                dims.extend_from_slice(hidden);
                dims.push(NUM_CLASSES);
                let mut shapes = Vec::new();
                for i in 0..dims.len() - 1 {
                    shapes.push((format!("fc{i}.w"), vec![dims[i], dims[i + 1]]));
                    shapes.push((format!("fc{i}.b"), vec![dims[i + 1]]));
                }
                shapes
            }
            ModelSpec::Cnn => vec![
                ("conv1.w".into(), vec![CONV1_CHANNELS, 1, KERNEL, KERNEL]),
                ("conv1.b".into(), vec![CONV1_CHANNELS]),
                (
                    "conv2.w".into(),
                    vec![CONV2_CHANNELS, CONV1_CHANNELS, KERNEL, KERNEL],
                ),
                ("conv2.b".into(), vec![CONV2_CHANNELS]),
                ("fc.w".into(), vec![CNN_FC_IN, NUM_CLASSES]),
                ("fc.b".into(), vec![NUM_CLASSES]),
            ],
        }
    }

    pub fn param_count(&self) -> usize {
        self.param_shapes()
            .iter()
            .map(|(_, s)| s.iter().product::<usize>())
            .sum()
    }

    /// Glorot-uniform weights, zero biases. Values are drawn as `f64` from
    /// the given stream and cast, so `f32` and `f64` instantiations of the
    /// same seed see the same underlying draws.
    pub fn init_params<T: Scalar>(&self, rng: &mut ChaCha8Rng) -> ParamSet<T> {
        use rand::Rng;
        let entries = self
            .param_shapes()
            .into_iter()
            .map(|(name, shape)| {
                let n: usize = shape.iter().product();
                let tensor = if name.ends_with(".b") {
                    Tensor::zeros(shape)
                } else {
                    let (fan_in, fan_out) = match shape.len() {
                        2 => (shape[0], shape[1]),
                        4 => (
                            shape[1] * shape[2] * shape[3],
                            shape[0] * shape[2] * shape[3],
                        ),
                        _ => unreachable!("weight tensors are rank 2 or 4"),
                    };
                    let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
                    let data = (0..n)
                        .map(|_| T::of_f64((rng.random::<f64>() * 2.0 - 1.0) * bound))
                        .collect();
                    Tensor::new(shape, data).expect("sized to shape")
                };
                (name, tensor)
            })
            .collect();
        ParamSet::new(entries).expect("names are unique by construction")
    }

    /// Rebuild a ParamSet from a flat value vector in entry order.
    pub fn params_from_flat<T: Scalar>(&self, flat: &[T]) -> Result<ParamSet<T>> {
        if flat.len() != self.param_count() {
            return Err(Error::ShapeMismatch {
                context: "params_from_flat".into(),
                expected: vec![self.param_count()],
                found: vec![flat.len()],
            });
        }
        let mut offset = 0;
        let mut entries = Vec::new();
        for (name, shape) in self.param_shapes() {
            let n: usize = shape.iter().product();
            let tensor = Tensor::new(shape, flat[offset..offset + n].to_vec())?;
            entries.push((name, tensor));
            offset += n;
        }
        ParamSet::new(entries)
    }

    fn check_params<T: Scalar>(&self, params: &ParamSet<T>) -> Result<()> {
        let shapes = self.param_shapes();
        if shapes.len() != params.entries().len() {
            return Err(Error::ShapeMismatch {
                context: "model parameters: entry count".into(),
                expected: vec![shapes.len()],
                found: vec![params.entries().len()],
            });
        }
        for ((name, shape), (pname, tensor)) in shapes.iter().zip(params.entries()) {
            if name != pname || shape.as_slice() != tensor.shape() {
                return Err(Error::ShapeMismatch {
                    context: format!("model parameter {name:?} vs {pname:?}"),
                    expected: shape.clone(),
                    found: tensor.shape().to_vec(),
                });
            }
        }
        Ok(())
    }

    fn check_batch<T: Scalar>(&self, batch: &Tensor<T>) -> Result<usize> {
        let s = batch.shape();
        let ok = s.len() == 4 && s[0] >= 1 && s[1] == IMAGE_SIDE && s[2] == IMAGE_SIDE && s[3] == 1;
        if !ok {
            return Err(Error::ShapeMismatch {
                context: "input batch".into(),
                expected: vec![0, IMAGE_SIDE, IMAGE_SIDE, 1],
                found: s.to_vec(),
            });
        }
        Ok(s[0])
    }
}

/// Forward pass: logits of shape `[B, 62]`.
pub fn forward<T: Scalar>(
    model: &ModelSpec,
    params: &ParamSet<T>,
    batch: &Tensor<T>,
) -> Result<Tensor<T>> {
    let (logits, _) = forward_cached(model, params, batch)?;
    Ok(logits)
}

/// Gradients of the mean cross-entropy with respect to all parameters.
pub fn backward<T: Scalar>(
    model: &ModelSpec,
    params: &ParamSet<T>,
    batch: &Tensor<T>,
    labels: &[usize],
) -> Result<ParamSet<T>> {
    loss_and_grad(model, params, batch, labels).map(|(_, g)| g)
}

/// Mean cross-entropy and its parameter gradient in one pass.
pub fn loss_and_grad<T: Scalar>(
    model: &ModelSpec,
    params: &ParamSet<T>,
    batch: &Tensor<T>,
    labels: &[usize],
) -> Result<(T, ParamSet<T>)> {
    let (logits, cache) = forward_cached(model, params, batch)?;
    let (loss, dlogits) = cross_entropy(&logits, labels)?;
    let grads = match cache {
        Cache::Mlp { acts } => mlp_backward(model, params, &acts, &dlogits),
        Cache::Cnn(c) => cnn_backward(params, &c, &dlogits),
    };
    Ok((loss, grads?))
}

/// Fraction of samples whose argmax logit equals the label.
pub fn evaluate_accuracy<T: Scalar>(
    model: &ModelSpec,
    params: &ParamSet<T>,
    dataset: &LabeledDataset,
) -> Result<f64> {
    if dataset.len() == 0 {
        return Err(Error::EmptyDataset("evaluate_accuracy".into()));
    }
    let mut correct = 0usize;
    for chunk in index_chunks(dataset.len()) {
        let batch = dataset.gather_batch::<T>(&chunk);
        let logits = forward(model, params, &batch)?;
        for (row, &idx) in logits.data().chunks(NUM_CLASSES).zip(&chunk) {
            if argmax(row) == dataset.labels()[idx] {
                correct += 1;
            }
        }
    }
    Ok(correct as f64 / dataset.len() as f64)
}

/// Mean cross-entropy of the model over a whole dataset.
pub fn mean_loss<T: Scalar>(
    model: &ModelSpec,
    params: &ParamSet<T>,
    dataset: &LabeledDataset,
) -> Result<f64> {
    if dataset.len() == 0 {
        return Err(Error::EmptyDataset("mean_loss".into()));
    }
    let mut acc = 0f64;
    for chunk in index_chunks(dataset.len()) {
        let batch = dataset.gather_batch::<T>(&chunk);
        let labels: Vec<usize> = chunk.iter().map(|&i| dataset.labels()[i]).collect();
        let logits = forward(model, params, &batch)?;
        let (loss, _) = cross_entropy(&logits, &labels)?;
        acc += loss.as_f64() * chunk.len() as f64;
    }
    Ok(acc / dataset.len() as f64)
}

const EVAL_CHUNK: usize = 512;

fn index_chunks(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..n.div_ceil(EVAL_CHUNK)).map(move |c| {
        let start = c * EVAL_CHUNK;
        (start..(start + EVAL_CHUNK).min(n)).collect()
    })
}

fn argmax<T: Scalar>(row: &[T]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

enum Cache<T> {
    /// Input plus post-ReLU activation of every hidden layer.
    Mlp { acts: Vec<Tensor<T>> },
    Cnn(CnnCache<T>),
}

struct CnnCache<T> {
    batch: usize,
    cols1: Vec<T>,
    relu1: Vec<T>,
    argmax1: Vec<usize>,
    cols2: Vec<T>,
    relu2: Vec<T>,
    argmax2: Vec<usize>,
    fc_in: Tensor<T>,
}

fn forward_cached<T: Scalar>(
    model: &ModelSpec,
    params: &ParamSet<T>,
    batch: &Tensor<T>,
) -> Result<(Tensor<T>, Cache<T>)> {
    model.check_params(params)?;
    let b = model.check_batch(batch)?;
    match model {
        ModelSpec::Mlp { hidden } => {
            let mut acts = Vec::with_capacity(hidden.len() + 1);
            let flat = Tensor::new(vec![b, IMAGE_PIXELS], batch.data().to_vec())?;
            acts.push(flat);
            let layers = hidden.len() + 1;
            let mut logits = None;
            for layer in 0..layers {
                let w = params.get(&format!("fc{layer}.w")).expect("checked");
                let bias = params.get(&format!("fc{layer}.b")).expect("checked");
                let x = acts.last().expect("seeded with input");
                let (rows, in_dim) = (x.shape()[0], x.shape()[1]);
                let out_dim = w.shape()[1];
                let mut y = matmul(x.data(), rows, in_dim, w.data(), out_dim);
                add_bias_rows(&mut y, bias.data());
                if layer + 1 < layers {
                    for v in &mut y {
                        *v = v.max(T::zero());
                    }
                    acts.push(Tensor::new(vec![rows, out_dim], y)?);
                } else {
                    logits = Some(Tensor::new(vec![rows, out_dim], y)?);
                }
            }
            Ok((logits.expect("final layer ran"), Cache::Mlp { acts }))
        }
        ModelSpec::Cnn => {
            // NHWC with one channel reads identically as NCHW.
            let side = IMAGE_SIDE;
            let w1 = params.get("conv1.w").expect("checked");
            let b1 = params.get("conv1.b").expect("checked");
            let w2 = params.get("conv2.w").expect("checked");
            let b2 = params.get("conv2.b").expect("checked");
            let fw = params.get("fc.w").expect("checked");
            let fb = params.get("fc.b").expect("checked");

            let cols1 = im2col(batch.data(), b, 1, side, side, KERNEL, PAD);
            let mut relu1 = conv_rows(
                &cols1,
                b * side * side,
                KERNEL * KERNEL,
                w1.data(),
                CONV1_CHANNELS,
                b1.data(),
                b,
                side,
                side,
            );
            for v in &mut relu1 {
                *v = v.max(T::zero());
            }
            let (pool1, argmax1) = maxpool2(&relu1, b, CONV1_CHANNELS, side, side);

            let half = side / 2;
            let cols2 = im2col(&pool1, b, CONV1_CHANNELS, half, half, KERNEL, PAD);
            let mut relu2 = conv_rows(
                &cols2,
                b * half * half,
                CONV1_CHANNELS * KERNEL * KERNEL,
                w2.data(),
                CONV2_CHANNELS,
                b2.data(),
                b,
                half,
                half,
            );
            for v in &mut relu2 {
                *v = v.max(T::zero());
            }
            let (pool2, argmax2) = maxpool2(&relu2, b, CONV2_CHANNELS, half, half);

            let fc_in = Tensor::new(vec![b, CNN_FC_IN], pool2)?;
            let mut logits = matmul(fc_in.data(), b, CNN_FC_IN, fw.data(), NUM_CLASSES);
            add_bias_rows(&mut logits, fb.data());
            let logits = Tensor::new(vec![b, NUM_CLASSES], logits)?;
            let cache = CnnCache {
                batch: b,
                cols1,
                relu1,
                argmax1,
                cols2,
                relu2,
                argmax2,
                fc_in,
            };
            Ok((logits, Cache::Cnn(cache)))
        }
    }
}

fn mlp_backward<T: Scalar>(
    model: &ModelSpec,
    params: &ParamSet<T>,
    acts: &[Tensor<T>],
    dlogits: &Tensor<T>,
) -> Result<ParamSet<T>> {
    let hidden = match model {
        ModelSpec::Mlp { hidden } => hidden,
        _ => unreachable!(),
    };
    let layers = hidden.len() + 1;
    let mut grads: Vec<(String, Tensor<T>)> = Vec::with_capacity(layers * 2);
    let mut dy = dlogits.clone();
    for layer in (0..layers).rev() {
        let w = params.get(&format!("fc{layer}.w")).expect("checked");
        let x = &acts[layer];
        let (rows, in_dim) = (x.shape()[0], x.shape()[1]);
        let out_dim = w.shape()[1];

        let dw = matmul_at_b(x.data(), rows, in_dim, dy.data(), out_dim);
        let db = column_sums(dy.data(), rows, out_dim);
        grads.push((
            format!("fc{layer}.b"),
            Tensor::new(vec![out_dim], db)?,
        ));
        grads.push((
            format!("fc{layer}.w"),
            Tensor::new(vec![in_dim, out_dim], dw)?,
        ));

        if layer > 0 {
            let mut dx = matmul_a_bt(dy.data(), rows, out_dim, w.data(), in_dim);
            for (dv, &a) in dx.iter_mut().zip(x.data()) {
                if a <= T::zero() {
                    *dv = T::zero();
                }
            }
            dy = Tensor::new(vec![rows, in_dim], dx)?;
        }
    }
    grads.reverse();
    ParamSet::new(grads)
}

fn cnn_backward<T: Scalar>(
    params: &ParamSet<T>,
    cache: &CnnCache<T>,
    dlogits: &Tensor<T>,
) -> Result<ParamSet<T>> {
    let b = cache.batch;
    let side = IMAGE_SIDE;
    let half = side / 2;
    let w2 = params.get("conv2.w").expect("checked");
    let fw = params.get("fc.w").expect("checked");

    // Fully connected layer.
    let dfw = matmul_at_b(cache.fc_in.data(), b, CNN_FC_IN, dlogits.data(), NUM_CLASSES);
    let dfb = column_sums(dlogits.data(), b, NUM_CLASSES);
    let dfc_in = matmul_a_bt(dlogits.data(), b, NUM_CLASSES, fw.data(), CNN_FC_IN);

    // Pool 2 and ReLU 2.
    let mut drelu2 = vec![T::zero(); b * CONV2_CHANNELS * half * half];
    unpool2(&dfc_in, &cache.argmax2, &mut drelu2);
    for (dv, &a) in drelu2.iter_mut().zip(&cache.relu2) {
        if a <= T::zero() {
            *dv = T::zero();
        }
    }

    // Conv 2.
    let k2 = CONV1_CHANNELS * KERNEL * KERNEL;
    let rows2 = gather_rows(&drelu2, b, CONV2_CHANNELS, half, half);
    let dw2 = matmul_at_b(&rows2, b * half * half, CONV2_CHANNELS, &cache.cols2, k2);
    let db2 = column_sums(&rows2, b * half * half, CONV2_CHANNELS);
    let dcols2 = matmul(&rows2, b * half * half, CONV2_CHANNELS, w2.data(), k2);
    let dpool1 = col2im(&dcols2, b, CONV1_CHANNELS, half, half, KERNEL, PAD);

    // Pool 1 and ReLU 1.
    let mut drelu1 = vec![T::zero(); b * CONV1_CHANNELS * side * side];
    unpool2(&dpool1, &cache.argmax1, &mut drelu1);
    for (dv, &a) in drelu1.iter_mut().zip(&cache.relu1) {
        if a <= T::zero() {
            *dv = T::zero();
        }
    }

    // Conv 1 (input gradient not needed).
    let k1 = KERNEL * KERNEL;
    let rows1 = gather_rows(&drelu1, b, CONV1_CHANNELS, side, side);
    let dw1 = matmul_at_b(&rows1, b * side * side, CONV1_CHANNELS, &cache.cols1, k1);
    let db1 = column_sums(&rows1, b * side * side, CONV1_CHANNELS);

    ParamSet::new(vec![
        (
            "conv1.w".into(),
            Tensor::new(vec![CONV1_CHANNELS, 1, KERNEL, KERNEL], dw1)?,
        ),
        ("conv1.b".into(), Tensor::new(vec![CONV1_CHANNELS], db1)?),
        (
            "conv2.w".into(),
            Tensor::new(vec![CONV2_CHANNELS, CONV1_CHANNELS, KERNEL, KERNEL], dw2)?,
        ),
        ("conv2.b".into(), Tensor::new(vec![CONV2_CHANNELS], db2)?),
        (
            "fc.w".into(),
            Tensor::new(vec![CNN_FC_IN, NUM_CLASSES], dfw)?,
        ),
        ("fc.b".into(), Tensor::new(vec![NUM_CLASSES], dfb)?),
    ])
}

/// `[M,K] x [K,N]`, accumulated per output row.
fn matmul<T: Scalar>(a: &[T], m: usize, k: usize, b: &[T], n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); m * n];
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let orow = &mut out[i * n..(i + 1) * n];
        for (p, &av) in arow.iter().enumerate() {
            if av == T::zero() {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o = *o + av * bv;
            }
        }
    }
    out
}

/// `Aᵀ x B` for A `[M,K]`, B `[M,N]` -> `[K,N]`.
fn matmul_at_b<T: Scalar>(a: &[T], m: usize, k: usize, b: &[T], n: usize) -> Vec<T> {
    let mut out = vec![T::zero(); k * n];
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        let brow = &b[i * n..(i + 1) * n];
        for (p, &av) in arow.iter().enumerate() {
            if av == T::zero() {
                continue;
            }
            let orow = &mut out[p * n..(p + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o = *o + av * bv;
            }
        }
    }
    out
}

/// `A x Bᵀ` for A `[M,N]`, B `[K,N]` -> `[M,K]`.
fn matmul_a_bt<T: Scalar>(a: &[T], m: usize, n: usize, b: &[T], k: usize) -> Vec<T> {
    let mut out = vec![T::zero(); m * k];
    for i in 0..m {
        let arow = &a[i * n..(i + 1) * n];
        let orow = &mut out[i * k..(i + 1) * k];
        for (p, o) in orow.iter_mut().enumerate() {
            let brow = &b[p * n..(p + 1) * n];
            let mut acc = T::zero();
            for (&av, &bv) in arow.iter().zip(brow) {
                acc = acc + av * bv;
            }
            *o = acc;
        }
    }
    out
}

fn add_bias_rows<T: Scalar>(y: &mut [T], bias: &[T]) {
    let n = bias.len();
    for row in y.chunks_mut(n) {
        for (v, &b) in row.iter_mut().zip(bias) {
            *v = *v + b;
        }
    }
}

fn column_sums<T: Scalar>(a: &[T], rows: usize, cols: usize) -> Vec<T> {
    let mut out = vec![T::zero(); cols];
    for r in 0..rows {
        for (o, &v) in out.iter_mut().zip(&a[r * cols..(r + 1) * cols]) {
            *o = *o + v;
        }
    }
    out
}

/// Patch matrix `[B*H*W, C*KH*KW]` for stride-1 same convolution.
fn im2col<T: Scalar>(
    input: &[T],
    b: usize,
    c: usize,
    h: usize,
    w: usize,
    kernel: usize,
    pad: usize,
) -> Vec<T> {
    let k = c * kernel * kernel;
    let mut cols = vec![T::zero(); b * h * w * k];
    for bi in 0..b {
        for oh in 0..h {
            for ow in 0..w {
                let row = ((bi * h + oh) * w + ow) * k;
                let mut col = row;
                for ci in 0..c {
                    let plane = (bi * c + ci) * h * w;
                    for kh in 0..kernel {
                        let ih = oh + kh;
                        if ih < pad || ih >= h + pad {
                            col += kernel;
                            continue;
                        }
                        let ih = ih - pad;
                        for kw in 0..kernel {
                            let iw = ow + kw;
                            if iw >= pad && iw < w + pad {
                                cols[col] = input[plane + ih * w + (iw - pad)];
                            }
                            col += 1;
                        }
                    }
                }
            }
        }
    }
    cols
}

/// Scatter-add of a patch-matrix gradient back to input layout.
fn col2im<T: Scalar>(
    dcols: &[T],
    b: usize,
    c: usize,
    h: usize,
    w: usize,
    kernel: usize,
    pad: usize,
) -> Vec<T> {
    let k = c * kernel * kernel;
    let mut dinput = vec![T::zero(); b * c * h * w];
    for bi in 0..b {
        for oh in 0..h {
            for ow in 0..w {
                let row = ((bi * h + oh) * w + ow) * k;
                let mut col = row;
                for ci in 0..c {
                    let plane = (bi * c + ci) * h * w;
                    for kh in 0..kernel {
                        let ih = oh + kh;
                        if ih < pad || ih >= h + pad {
                            col += kernel;
                            continue;
                        }
                        let ih = ih - pad;
                        for kw in 0..kernel {
                            let iw = ow + kw;
                            if iw >= pad && iw < w + pad {
                                let idx = plane + ih * w + (iw - pad);
                                dinput[idx] = dinput[idx] + dcols[col];
                            }
                            col += 1;
                        }
                    }
                }
            }
        }
    }
    dinput
}

/// Multiply patch rows by `Wᵀ` and add bias, returning `[B,OC,H,W]` layout.
#[allow(clippy::too_many_arguments)]
fn conv_rows<T: Scalar>(
    cols: &[T],
    rows: usize,
    k: usize,
    weights: &[T],
    oc: usize,
    bias: &[T],
    b: usize,
    h: usize,
    w: usize,
) -> Vec<T> {
    let res = matmul_a_bt(cols, rows, k, weights, oc);
    let mut out = vec![T::zero(); b * oc * h * w];
    for bi in 0..b {
        for oh in 0..h {
            for ow in 0..w {
                let r = ((bi * h + oh) * w + ow) * oc;
                for o in 0..oc {
                    out[((bi * oc + o) * h + oh) * w + ow] = res[r + o] + bias[o];
                }
            }
        }
    }
    out
}

/// Regroup a `[B,OC,H,W]` gradient into patch-row order `[B*H*W, OC]`.
fn gather_rows<T: Scalar>(dout: &[T], b: usize, oc: usize, h: usize, w: usize) -> Vec<T> {
    let mut rows = vec![T::zero(); b * h * w * oc];
    for bi in 0..b {
        for o in 0..oc {
            for oh in 0..h {
                for ow in 0..w {
                    rows[(((bi * h + oh) * w + ow) * oc) + o] =
                        dout[((bi * oc + o) * h + oh) * w + ow];
                }
            }
        }
    }
    rows
}

/// 2x2 stride-2 max-pooling; ties go to the lowest flat input index.
fn maxpool2<T: Scalar>(
    input: &[T],
    b: usize,
    c: usize,
    h: usize,
    w: usize,
) -> (Vec<T>, Vec<usize>) {
    let (oh, ow) = (h / 2, w / 2);
    let mut out = vec![T::zero(); b * c * oh * ow];
    let mut arg = vec![0usize; b * c * oh * ow];
    for plane in 0..b * c {
        let base = plane * h * w;
        for y in 0..oh {
            for x in 0..ow {
                let mut best_idx = base + (2 * y) * w + 2 * x;
                let mut best = input[best_idx];
                for dy in 0..2 {
                    for dx in 0..2 {
                        let idx = base + (2 * y + dy) * w + (2 * x + dx);
                        if input[idx] > best {
                            best = input[idx];
                            best_idx = idx;
                        }
                    }
                }
                let o = plane * oh * ow + y * ow + x;
                out[o] = best;
                arg[o] = best_idx;
            }
        }
    }
    (out, arg)
}

fn unpool2<T: Scalar>(dout: &[T], argmax: &[usize], dinput: &mut [T]) {
    for (&g, &idx) in dout.iter().zip(argmax) {
        dinput[idx] = dinput[idx] + g;
    }
}
